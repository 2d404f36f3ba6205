//! Majority-polymorphism search over a coset template.
//!
//! A majority operation m satisfies m(x,x,y) = m(x,y,x) = m(y,x,x) = x on
//! the whole carrier set and must preserve every template relation — base
//! relations and their translates alike, since the template's relation set
//! is closed under translation. Preservation constraints only ever bind
//! triples drawn from a single carrier (each coordinate of a relation lives
//! in one carrier), so the search ranges over per-carrier triple tables;
//! cross-carrier triples are forced by the majority identities or free.

use std::collections::BTreeSet;

use crate::coset::CosetSet;
use crate::error::{Error, Result};
use crate::group::Tuple;
use crate::solver::Limits;
use crate::template::CosetTemplate;

/// A witness operation: one flattened order³ table per carrier, indexed
/// `((a*order)+b)*order+c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MajorityWitness {
    pub carrier_tables: Vec<Vec<usize>>,
}

impl MajorityWitness {
    pub fn apply(&self, carrier: usize, order: usize, a: usize, b: usize, c: usize) -> usize {
        self.carrier_tables[carrier][(a * order + b) * order + c]
    }
}

/// Deduplicated coset families of every current relation: each relation
/// together with all of its translates.
fn relation_families(t: &CosetTemplate) -> Result<Vec<(Vec<usize>, CosetSet)>> {
    let mut seen: BTreeSet<(Vec<usize>, Vec<Tuple>)> = BTreeSet::new();
    let mut families = Vec::new();
    for (_, rel) in t.relations_snapshot() {
        if !rel.coset.is_coset_or_subgroup() {
            return Err(Error::NotCosetInput);
        }
        let ambient = rel.coset.ambient().clone();
        for shift in ambient.elements() {
            let translated = rel.coset.translate(&shift)?;
            let key = (rel.signature.clone(), translated.members().to_vec());
            if seen.insert(key) {
                families.push((rel.signature.clone(), translated));
            }
        }
    }
    Ok(families)
}

struct MetaProblem {
    /// Variable id base per carrier.
    offsets: Vec<usize>,
    orders: Vec<usize>,
    values: Vec<Option<usize>>,
    /// (coset, variable ids); checked once all ids are assigned.
    constraints: Vec<(CosetSet, Vec<usize>)>,
    /// Constraint indices to check when a variable is assigned.
    checks_at: Vec<Vec<usize>>,
}

impl MetaProblem {
    fn build(t: &CosetTemplate) -> Result<MetaProblem> {
        let orders: Vec<usize> = t.carriers().iter().map(|g| g.order()).collect();
        let mut offsets = Vec::with_capacity(orders.len());
        let mut total = 0;
        for &o in &orders {
            offsets.push(total);
            total += o * o * o;
        }
        let mut values: Vec<Option<usize>> = vec![None; total];
        for (carrier, &o) in orders.iter().enumerate() {
            for a in 0..o {
                for b in 0..o {
                    for c in 0..o {
                        let var = offsets[carrier] + (a * o + b) * o + c;
                        if a == b {
                            values[var] = Some(a);
                        } else if a == c || b == c {
                            values[var] = Some(if a == c { a } else { b });
                        }
                    }
                }
            }
        }
        let mut constraints = Vec::new();
        for (signature, coset) in relation_families(t)? {
            let members = coset.members().to_vec();
            for t1 in &members {
                for t2 in &members {
                    for t3 in &members {
                        let vars: Vec<usize> = signature
                            .iter()
                            .enumerate()
                            .map(|(j, &carrier)| {
                                let o = orders[carrier];
                                offsets[carrier] + (t1[j] * o + t2[j]) * o + t3[j]
                            })
                            .collect();
                        constraints.push((coset.clone(), vars));
                    }
                }
            }
        }
        let mut checks_at = vec![Vec::new(); total];
        for (ci, (_, vars)) in constraints.iter().enumerate() {
            if let Some(&last) = vars.iter().max() {
                checks_at[last].push(ci);
            }
        }
        Ok(MetaProblem {
            offsets,
            orders,
            values,
            constraints,
            checks_at,
        })
    }

    fn consistent_at(&self, var: usize) -> bool {
        'outer: for &ci in &self.checks_at[var] {
            let (coset, vars) = &self.constraints[ci];
            let mut tuple = Vec::with_capacity(vars.len());
            for &v in vars {
                match self.values[v] {
                    Some(x) => tuple.push(x),
                    None => continue 'outer,
                }
            }
            if !coset.contains(&tuple) {
                return false;
            }
        }
        true
    }

    fn search(&mut self, var: usize, nodes: &mut u64, max_nodes: u64) -> Result<bool> {
        if var == self.values.len() {
            return Ok(true);
        }
        if self.values[var].is_some() {
            // Forced by a majority identity; still run its checks.
            return if self.consistent_at(var) {
                self.search(var + 1, nodes, max_nodes)
            } else {
                Ok(false)
            };
        }
        let carrier = match self.offsets.binary_search(&var) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        for v in 0..self.orders[carrier] {
            *nodes += 1;
            if *nodes > max_nodes {
                return Err(Error::BudgetExceeded(max_nodes));
            }
            self.values[var] = Some(v);
            if self.consistent_at(var) && self.search(var + 1, nodes, max_nodes)? {
                return Ok(true);
            }
            self.values[var] = None;
        }
        Ok(false)
    }
}

/// Search for a majority polymorphism preserving every relation of `t` and
/// all translates. Deterministic: variables in (carrier, triple) order,
/// values in index order.
pub fn find_majority_polymorphism(
    t: &CosetTemplate,
    limits: &Limits,
) -> Result<Option<MajorityWitness>> {
    let mut meta = MetaProblem::build(t)?;
    let mut nodes = 0u64;
    if !meta.search(0, &mut nodes, limits.max_nodes)? {
        return Ok(None);
    }
    let mut carrier_tables = Vec::with_capacity(meta.orders.len());
    for (carrier, &o) in meta.orders.iter().enumerate() {
        let base = meta.offsets[carrier];
        carrier_tables.push(
            (0..o * o * o)
                .map(|i| meta.values[base + i].unwrap())
                .collect(),
        );
    }
    Ok(Some(MajorityWitness { carrier_tables }))
}

/// Re-check a witness independently: the majority identities and
/// preservation of every relation family.
pub fn verify_majority(t: &CosetTemplate, w: &MajorityWitness) -> Result<bool> {
    for (carrier, g) in t.carriers().iter().enumerate() {
        let o = g.order();
        if w.carrier_tables[carrier].len() != o * o * o {
            return Ok(false);
        }
        for a in 0..o {
            for b in 0..o {
                if w.apply(carrier, o, a, a, b) != a
                    || w.apply(carrier, o, a, b, a) != a
                    || w.apply(carrier, o, b, a, a) != a
                {
                    return Ok(false);
                }
            }
        }
    }
    for (signature, coset) in relation_families(t)? {
        let members = coset.members();
        for t1 in members {
            for t2 in members {
                for t3 in members {
                    let image: Tuple = signature
                        .iter()
                        .enumerate()
                        .map(|(j, &carrier)| {
                            let o = t.carrier(carrier).order();
                            w.apply(carrier, o, t1[j], t2[j], t3[j])
                        })
                        .collect();
                    if !coset.contains(&image) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn binary_parity_template_has_majority() {
        let t = corpus::template_t(2);
        let w = find_majority_polymorphism(&t, &Limits::default())
            .unwrap()
            .unwrap();
        assert!(verify_majority(&t, &w).unwrap());
        // Over Z2 every triple value is forced by the identities, so the
        // witness is boolean majority.
        let o = 2;
        for a in 0..o {
            for b in 0..o {
                for c in 0..o {
                    let maj = if a + b + c >= 2 { 1 } else { 0 };
                    assert_eq!(w.apply(0, o, a, b, c), maj);
                }
            }
        }
    }

    #[test]
    fn ternary_and_quaternary_parity_templates_have_none() {
        for n in [3, 4] {
            let t = corpus::template_t(n);
            assert!(find_majority_polymorphism(&t, &Limits::default())
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn hand_rolled_witness_fails_on_ternary_template() {
        // Boolean majority does not preserve the ternary parity relation:
        // coordinatewise majority of (1,1,0),(1,0,1),(0,1,1) is (1,1,1).
        let t = corpus::template_t(3);
        let o = 2;
        let mut table = vec![0; 8];
        for a in 0..o {
            for b in 0..o {
                for c in 0..o {
                    table[(a * o + b) * o + c] = if a + b + c >= 2 { 1 } else { 0 };
                }
            }
        }
        let w = MajorityWitness {
            carrier_tables: vec![table],
        };
        assert!(!verify_majority(&t, &w).unwrap());
    }
}
