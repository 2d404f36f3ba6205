//! Instances (ordered elements plus constraints) and assignments.
//!
//! Element ids are opaque strings; the stored order of `elements` is the
//! total order used everywhere (tuple views, schedules, solver order).
//! Internally assignments are keyed by element position.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coset::CosetSet;
use crate::error::{Error, Result};
use crate::group::ProductGroup;
use crate::template::CosetTemplate;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub rel: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub elements: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(elements: Vec<String>, constraints: Vec<Constraint>) -> Instance {
        Instance {
            elements,
            constraints,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Instance> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn element_position(&self, id: &str) -> Result<usize> {
        self.elements
            .iter()
            .position(|e| e == id)
            .ok_or_else(|| Error::UnknownElement(id.to_string()))
    }

    /// Per-element constraining carrier index. Errors if a constraint uses an
    /// unknown relation or element, an arity mismatches, or an element is
    /// pinned to two distinct carriers. Elements constrained by no
    /// constraint get `None`.
    pub fn constraining_carriers(&self, t: &CosetTemplate) -> Result<Vec<Option<usize>>> {
        let mut carriers: Vec<Option<usize>> = vec![None; self.elements.len()];
        for c in &self.constraints {
            let rel = t.relation(&c.rel)?;
            if rel.arity() != c.args.len() {
                return Err(Error::ArityMismatch {
                    context: format!("constraint {}", c.rel),
                    expected: rel.arity(),
                    got: c.args.len(),
                });
            }
            for (pos, arg) in c.args.iter().enumerate() {
                let e = self.element_position(arg)?;
                let carrier = rel.signature[pos];
                match carriers[e] {
                    None => carriers[e] = Some(carrier),
                    Some(existing) if existing == carrier => {}
                    Some(_) => return Err(Error::ContradictoryInstance(arg.clone())),
                }
            }
        }
        Ok(carriers)
    }

    /// Remove elements with no constraining group; error on contradictory
    /// elements. Idempotent.
    pub fn normalize(&self, t: &CosetTemplate) -> Result<Instance> {
        let carriers = self.constraining_carriers(t)?;
        let elements: Vec<String> = self
            .elements
            .iter()
            .zip(&carriers)
            .filter(|(_, c)| c.is_some())
            .map(|(e, _)| e.clone())
            .collect();
        Ok(Instance {
            elements,
            constraints: self.constraints.clone(),
        })
    }

    /// Bind against a template, requiring every element constrained.
    pub fn bind<'a>(&'a self, t: &'a CosetTemplate) -> Result<Bound<'a>> {
        let carriers = self.constraining_carriers(t)?;
        let mut resolved = Vec::with_capacity(self.elements.len());
        for (e, c) in self.elements.iter().zip(&carriers) {
            match c {
                Some(ix) => resolved.push(*ix),
                None => {
                    return Err(Error::PreconditionViolated(format!(
                        "element {e:?} has no constraining group; normalize first"
                    )))
                }
            }
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let rel = t.relation(&c.rel)?;
                let args = c
                    .args
                    .iter()
                    .map(|a| self.element_position(a))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BoundConstraint { rel, args })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bound {
            instance: self,
            template: t,
            carriers: resolved,
            constraints,
        })
    }
}

#[derive(Clone)]
pub struct BoundConstraint {
    pub rel: std::sync::Arc<crate::template::Relation>,
    /// Element positions, one per coordinate.
    pub args: Vec<usize>,
}

/// An instance resolved against a template: constraining carriers and
/// constraints by element position.
pub struct Bound<'a> {
    pub instance: &'a Instance,
    pub template: &'a CosetTemplate,
    pub carriers: Vec<usize>,
    pub constraints: Vec<BoundConstraint>,
}

impl<'a> Bound<'a> {
    pub fn element_count(&self) -> usize {
        self.instance.elements.len()
    }

    pub fn carrier_order(&self, e: usize) -> usize {
        self.template.carrier(self.carriers[e]).order()
    }

    /// The group of pre-solutions: the product of constraining carriers in
    /// element order.
    pub fn presolution_group(&self) -> ProductGroup {
        ProductGroup::new(
            self.carriers
                .iter()
                .map(|&c| self.template.carrier(c).clone())
                .collect(),
        )
    }

    pub fn satisfies(&self, c: &BoundConstraint, h: &Assignment) -> Option<bool> {
        let mut tuple = Vec::with_capacity(c.args.len());
        for &e in &c.args {
            match h.get(e) {
                Some(v) => tuple.push(v),
                None => return None,
            }
        }
        Some(c.rel.coset.contains(&tuple))
    }

    /// True iff every constraint whose elements all lie in dom(h) is
    /// satisfied.
    pub fn is_partial_solution(&self, h: &Assignment) -> bool {
        self.constraints
            .iter()
            .all(|c| self.satisfies(c, h).unwrap_or(true))
    }

    /// The identity pre-solution.
    pub fn identity_presolution(&self) -> Assignment {
        Assignment::total(
            (0..self.element_count())
                .map(|e| self.template.carrier(self.carriers[e]).identity())
                .collect(),
        )
    }

    /// A uniformly random total pre-solution.
    pub fn random_presolution(&self, rng: &mut impl Rng) -> Assignment {
        Assignment::total(
            (0..self.element_count())
                .map(|e| rng.gen_range(0..self.carrier_order(e)))
                .collect(),
        )
    }

    /// Pointwise inverse of a total pre-solution.
    pub fn invert_presolution(&self, s: &Assignment) -> Assignment {
        Assignment::total(
            (0..self.element_count())
                .map(|e| {
                    self.template
                        .carrier(self.carriers[e])
                        .inv(s.get(e).expect("total pre-solution"))
                })
                .collect(),
        )
    }

    /// Check that `h` assigns each element in its constraining carrier.
    pub fn check_assignment(&self, h: &Assignment) -> Result<()> {
        for (&e, &v) in &h.values {
            if e >= self.element_count() {
                return Err(Error::UnknownElement(format!("position {e}")));
            }
            let order = self.carrier_order(e);
            if v >= order {
                return Err(Error::ValueOutOfRange { value: v, order });
            }
        }
        Ok(())
    }

    /// View a set of total assignments as tuples and classify them in the
    /// pre-solution group.
    pub fn classify_tuples(&self, assignments: &[Assignment]) -> Result<CosetSet> {
        let group = self.presolution_group();
        CosetSet::classify(
            group,
            assignments
                .iter()
                .map(|h| h.tuple_view(self.element_count())),
        )
    }
}

/// A partial or total map from element positions to carrier element indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Assignment {
    values: BTreeMap<usize, usize>,
}

impl Assignment {
    pub fn empty() -> Assignment {
        Assignment::default()
    }

    pub fn total(values: Vec<usize>) -> Assignment {
        Assignment {
            values: values.into_iter().enumerate().collect(),
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Assignment {
        Assignment {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, e: usize) -> Option<usize> {
        self.values.get(&e).copied()
    }

    pub fn set(&mut self, e: usize, v: usize) {
        self.values.insert(e, v);
    }

    pub fn unset(&mut self, e: usize) {
        self.values.remove(&e);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_total(&self, element_count: usize) -> bool {
        self.values.len() == element_count
    }

    /// Domain in element order.
    pub fn domain(&self) -> Vec<usize> {
        self.values.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.values.iter().map(|(&e, &v)| (e, v))
    }

    pub fn restrict(&self, domain: &[usize]) -> Assignment {
        Assignment {
            values: domain
                .iter()
                .filter_map(|e| self.values.get(e).map(|&v| (*e, v)))
                .collect(),
        }
    }

    pub fn agrees_with(&self, other: &Assignment) -> bool {
        self.values
            .iter()
            .all(|(e, v)| other.values.get(e) == Some(v))
    }

    /// Values in element order; panics unless total.
    pub fn tuple_view(&self, element_count: usize) -> Vec<usize> {
        assert!(
            self.is_total(element_count),
            "tuple view needs a total assignment"
        );
        self.values.values().copied().collect()
    }

    pub fn to_json(&self, instance: &Instance) -> AssignmentJson {
        AssignmentJson {
            values: self
                .values
                .iter()
                .map(|(&e, &v)| (instance.elements[e].clone(), v))
                .collect(),
        }
    }

    pub fn from_json(json: &AssignmentJson, instance: &Instance) -> Result<Assignment> {
        let mut values = BTreeMap::new();
        for (id, &v) in &json.values {
            let e = instance.element_position(id)?;
            match values.entry(e) {
                Entry::Vacant(slot) => {
                    slot.insert(v);
                }
                Entry::Occupied(_) => {
                    return Err(Error::Parse(format!("duplicate assignment for {id:?}")))
                }
            }
        }
        Ok(Assignment { values })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentJson {
    pub values: BTreeMap<String, usize>,
}
