//! Primitive-positive formulas over a template: existentially quantified
//! conjunctions of relation atoms.
//!
//! Materializing a formula builds the gadget instance (variables as
//! elements, atoms as constraints), enumerates its solutions, and projects
//! onto the free variables; over a coset template the result is always a
//! coset. Conversely any instance projection is pp-definable, which is how
//! the extendable-solution groups get their defining formulas.

use serde::{Deserialize, Serialize};

use crate::coset::CosetSet;
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::instance::{Bound, Constraint, Instance};
use crate::solver::{all_solutions, Limits};
use crate::template::CosetTemplate;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpAtom {
    pub rel: String,
    /// Variable indices; 0..free are free, free..free+bound are quantified.
    pub vars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpFormula {
    pub free: usize,
    pub bound: usize,
    pub atoms: Vec<PpAtom>,
}

impl PpFormula {
    pub fn var_count(&self) -> usize {
        self.free + self.bound
    }

    /// Variable indices in range and every free variable used somewhere.
    pub fn validate(&self) -> Result<()> {
        let n = self.var_count();
        for atom in &self.atoms {
            if let Some(&v) = atom.vars.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidSpec(format!(
                    "variable {v} out of range in atom {}",
                    atom.rel
                )));
            }
        }
        for f in 0..self.free {
            if !self.atoms.iter().any(|a| a.vars.contains(&f)) {
                return Err(Error::InvalidSpec(format!(
                    "free variable {f} occurs in no atom"
                )));
            }
        }
        Ok(())
    }

    /// The gadget instance: one element per variable, one constraint per
    /// atom.
    pub fn gadget_instance(&self) -> Instance {
        let elements: Vec<String> = (0..self.var_count()).map(|v| format!("v{v}")).collect();
        let constraints = self
            .atoms
            .iter()
            .map(|a| Constraint {
                rel: a.rel.clone(),
                args: a.vars.iter().map(|&v| format!("v{v}")).collect(),
            })
            .collect();
        Instance::new(elements, constraints)
    }
}

/// Incrementally assemble a formula: fixed free variables, fresh quantified
/// variables on demand, inlining of other formulas.
pub struct PpBuilder {
    free: usize,
    next: usize,
    atoms: Vec<PpAtom>,
}

impl PpBuilder {
    pub fn new(free: usize) -> PpBuilder {
        PpBuilder {
            free,
            next: free,
            atoms: Vec::new(),
        }
    }

    pub fn fresh(&mut self) -> usize {
        let v = self.next;
        self.next += 1;
        v
    }

    pub fn atom(&mut self, rel: impl Into<String>, vars: Vec<usize>) {
        self.atoms.push(PpAtom {
            rel: rel.into(),
            vars,
        });
    }

    /// Append `formula`'s atoms with its free variables substituted by
    /// `args` and its quantified variables renamed fresh.
    pub fn inline(&mut self, formula: &PpFormula, args: &[usize]) {
        assert_eq!(args.len(), formula.free, "inline arity mismatch");
        let base = self.next;
        self.next += formula.bound;
        for atom in &formula.atoms {
            let vars = atom
                .vars
                .iter()
                .map(|&v| {
                    if v < formula.free {
                        args[v]
                    } else {
                        base + v - formula.free
                    }
                })
                .collect();
            self.atoms.push(PpAtom {
                rel: atom.rel.clone(),
                vars,
            });
        }
    }

    pub fn finish(self) -> PpFormula {
        PpFormula {
            free: self.free,
            bound: self.next - self.free,
            atoms: self.atoms,
        }
    }
}

/// The formula whose materialization is the projection of the solutions of
/// `bound` onto the elements `domain` (positions, ascending): free variables
/// are the domain in order, every other element is quantified.
pub fn projection_formula(bound: &Bound, domain: &[usize]) -> PpFormula {
    let n = bound.element_count();
    let mut var_of = vec![usize::MAX; n];
    for (i, &e) in domain.iter().enumerate() {
        var_of[e] = i;
    }
    let mut next = domain.len();
    for e in 0..n {
        if var_of[e] == usize::MAX {
            var_of[e] = next;
            next += 1;
        }
    }
    let atoms = bound
        .constraints
        .iter()
        .zip(&bound.instance.constraints)
        .map(|(c, raw)| PpAtom {
            rel: raw.rel.clone(),
            vars: c.args.iter().map(|&e| var_of[e]).collect(),
        })
        .collect();
    PpFormula {
        free: domain.len(),
        bound: n - domain.len(),
        atoms,
    }
}

/// Materialize a formula as a coset: enumerate the gadget's solutions and
/// project onto the free variables. Errors with `EmptyRelation` if the
/// formula is unsatisfiable.
pub fn materialize(
    t: &CosetTemplate,
    formula: &PpFormula,
    limits: &Limits,
    mode: ExecMode,
) -> Result<CosetSet> {
    formula.validate()?;
    let gadget = formula.gadget_instance().normalize(t)?;
    let bound = gadget.bind(t)?;
    let set = all_solutions(&bound, limits, mode)?;
    if set.solutions.is_empty() {
        return Err(Error::EmptyRelation);
    }
    let free_positions: Vec<usize> = (0..formula.free)
        .map(|v| bound.instance.element_position(&format!("v{v}")))
        .collect::<Result<_>>()?;
    let ambient = crate::group::ProductGroup::new(
        free_positions
            .iter()
            .map(|&p| t.carrier(bound.carriers[p]).clone())
            .collect(),
    );
    let tuples = set.solutions.iter().map(|h| {
        free_positions
            .iter()
            .map(|&p| h.get(p).expect("total solution"))
            .collect()
    });
    CosetSet::classify(ambient, tuples)
}

/// A constraint that is either a plain relation atom or a pp-defined
/// relation applied to elements.
#[derive(Debug, Clone)]
pub enum PpConstraint {
    Atom(Constraint),
    Defined {
        formula: PpFormula,
        args: Vec<String>,
    },
}

/// An instance whose constraints may carry defining formulas.
#[derive(Debug, Clone)]
pub struct PpInstance {
    pub elements: Vec<String>,
    pub constraints: Vec<PpConstraint>,
}

/// Replace every pp-defined constraint by its atoms, with fresh elements for
/// the quantified variables. Solvability is preserved: solutions of the
/// output restrict to solutions of the input reading.
pub fn expand_gadget(ppi: &PpInstance, _t: &CosetTemplate) -> Result<Instance> {
    let mut elements = ppi.elements.clone();
    let mut constraints = Vec::new();
    for (ci, pc) in ppi.constraints.iter().enumerate() {
        match pc {
            PpConstraint::Atom(c) => constraints.push(c.clone()),
            PpConstraint::Defined { formula, args } => {
                formula.validate()?;
                if args.len() != formula.free {
                    return Err(Error::ArityMismatch {
                        context: format!("pp constraint {ci}"),
                        expected: formula.free,
                        got: args.len(),
                    });
                }
                let fresh: Vec<String> =
                    (0..formula.bound).map(|j| format!("pp{ci}_b{j}")).collect();
                for name in &fresh {
                    if elements.contains(name) {
                        return Err(Error::InvalidSpec(format!(
                            "element {name:?} collides with gadget naming"
                        )));
                    }
                    elements.push(name.clone());
                }
                for atom in &formula.atoms {
                    let atom_args = atom
                        .vars
                        .iter()
                        .map(|&v| {
                            if v < formula.free {
                                args[v].clone()
                            } else {
                                fresh[v - formula.free].clone()
                            }
                        })
                        .collect();
                    constraints.push(Constraint {
                        rel: atom.rel.clone(),
                        args: atom_args,
                    });
                }
            }
        }
    }
    Ok(Instance {
        elements,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::coset::CosetKind;
    use crate::group::Tuple;

    fn even_parity_tuples() -> Vec<Tuple> {
        (0..8usize)
            .map(|m| vec![(m >> 2) & 1, (m >> 1) & 1, m & 1])
            .filter(|t| t.iter().sum::<usize>() % 2 == 0)
            .collect()
    }

    #[test]
    fn chain_formula_materializes_to_even_parity() {
        let t = corpus::template_t(3);
        let mut b = PpBuilder::new(3);
        let y = b.fresh();
        let z = b.fresh();
        b.atom("R_even", vec![0, 1, y]);
        b.atom("R_even", vec![y, 2, z]);
        b.atom("1@Z2", vec![z]);
        let formula = b.finish();
        let c = materialize(&t, &formula, &Limits::default(), ExecMode::default()).unwrap();
        assert_eq!(c.members(), even_parity_tuples().as_slice());
        assert_eq!(c.kind(), CosetKind::Subgroup);
    }

    #[test]
    fn identity_atom_materializes_to_singleton() {
        let t = corpus::template_t(3);
        let formula = PpFormula {
            free: 1,
            bound: 0,
            atoms: vec![PpAtom {
                rel: "1@Z2".into(),
                vars: vec![0],
            }],
        };
        let c = materialize(&t, &formula, &Limits::default(), ExecMode::default()).unwrap();
        assert_eq!(c.members(), &[vec![0]]);
    }

    #[test]
    fn unsatisfiable_formula_is_empty_relation() {
        let t = corpus::template_t(3);
        let formula = PpFormula {
            free: 1,
            bound: 0,
            atoms: vec![
                PpAtom {
                    rel: "1@Z2".into(),
                    vars: vec![0],
                },
                PpAtom {
                    rel: "pi@Z2".into(),
                    vars: vec![0],
                },
            ],
        };
        assert!(matches!(
            materialize(&t, &formula, &Limits::default(), ExecMode::default()),
            Err(Error::EmptyRelation)
        ));
    }

    #[test]
    fn materialization_ignores_atom_order() {
        let t = corpus::template_t(3);
        let mut b = PpBuilder::new(3);
        let y = b.fresh();
        let z = b.fresh();
        b.atom("1@Z2", vec![z]);
        b.atom("R_even", vec![y, 2, z]);
        b.atom("R_even", vec![0, 1, y]);
        let reordered = b.finish();
        let c = materialize(&t, &reordered, &Limits::default(), ExecMode::default()).unwrap();
        assert_eq!(c.members(), even_parity_tuples().as_slice());
    }

    #[test]
    fn projection_formula_round_trips_solution_projection() {
        let t = corpus::template_t(3);
        let i = corpus::witness_t3();
        let bound = i.bind(&t).unwrap();
        let formula = projection_formula(&bound, &[0, 1, 2]);
        assert_eq!(formula.free, 3);
        assert_eq!(formula.bound, 2);
        let c = materialize(&t, &formula, &Limits::default(), ExecMode::default()).unwrap();
        assert_eq!(c.members(), even_parity_tuples().as_slice());
    }

    #[test]
    fn inline_renames_bound_variables_apart() {
        let inner = PpFormula {
            free: 1,
            bound: 1,
            atoms: vec![PpAtom {
                rel: "R_even".into(),
                vars: vec![0, 0, 1],
            }],
        };
        let mut b = PpBuilder::new(2);
        b.inline(&inner, &[0]);
        b.inline(&inner, &[1]);
        let combined = b.finish();
        assert_eq!(combined.bound, 2);
        assert_eq!(combined.atoms[0].vars, vec![0, 0, 2]);
        assert_eq!(combined.atoms[1].vars, vec![1, 1, 3]);
    }

    #[test]
    fn expand_gadget_preserves_solvability() {
        let t = corpus::template_t(3);
        // The even-parity relation applied to three fresh elements, as a
        // defined constraint.
        let mut b = PpBuilder::new(3);
        let y = b.fresh();
        let z = b.fresh();
        b.atom("R_even", vec![0, 1, y]);
        b.atom("R_even", vec![y, 2, z]);
        b.atom("1@Z2", vec![z]);
        let formula = b.finish();
        let ppi = PpInstance {
            elements: vec!["p".into(), "q".into(), "r".into()],
            constraints: vec![
                PpConstraint::Defined {
                    formula,
                    args: vec!["p".into(), "q".into(), "r".into()],
                },
                PpConstraint::Atom(Constraint {
                    rel: "pi@Z2".into(),
                    args: vec!["p".into()],
                }),
            ],
        };
        let expanded = expand_gadget(&ppi, &t).unwrap();
        assert_eq!(expanded.elements.len(), 5);
        let bound = expanded.bind(&t).unwrap();
        let set = all_solutions(&bound, &Limits::default(), ExecMode::default()).unwrap();
        // p = pi and p + q + r even: q + r odd, so 2 choices.
        assert_eq!(set.solutions.len(), 2);
        for h in &set.solutions {
            assert_eq!(h.get(0), Some(1));
            assert_eq!((h.get(1).unwrap() + h.get(2).unwrap()) % 2, 1);
        }
    }

    #[test]
    fn expand_gadget_without_pp_constraints_is_identity() {
        let t = corpus::template_t(3);
        let i = corpus::witness_t3();
        let ppi = PpInstance {
            elements: i.elements.clone(),
            constraints: i
                .constraints
                .iter()
                .cloned()
                .map(PpConstraint::Atom)
                .collect(),
        };
        assert_eq!(expand_gadget(&ppi, &t).unwrap(), i);
    }
}
