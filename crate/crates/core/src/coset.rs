//! Explicit subsets of product groups with coset/subgroup classification.
//!
//! A nonempty subset S of a group is a (right) coset iff it is Malcev-closed:
//! x·y⁻¹·z ∈ S for all x, y, z ∈ S. Classification here uses the equivalent
//! O(|S|²) route — shift by the least member and check closure of the shifted
//! set — while the exhaustive triple test lives in the test suites as the
//! independent oracle.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::group::{FiniteGroup, ProductGroup, Tuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CosetKind {
    NotCoset,
    Coset,
    Subgroup,
}

/// A sorted, duplicate-free subset of a product group, with its
/// classification and the lexicographically least member as canonical
/// representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetSet {
    ambient: ProductGroup,
    members: Vec<Tuple>,
    kind: CosetKind,
}

impl CosetSet {
    /// Classify `members` within `ambient`. Errors on the empty set and on
    /// out-of-range tuples.
    pub fn classify(
        ambient: ProductGroup,
        members: impl IntoIterator<Item = Tuple>,
    ) -> Result<CosetSet> {
        let set: BTreeSet<Tuple> = members.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        for t in &set {
            if !ambient.contains(t) {
                return Err(Error::ValueOutOfRange {
                    value: *t.iter().max().unwrap_or(&0),
                    order: ambient.order(),
                });
            }
        }
        let members: Vec<Tuple> = set.into_iter().collect();
        let kind = Self::compute_kind(&ambient, &members);
        Ok(CosetSet {
            ambient,
            members,
            kind,
        })
    }

    fn compute_kind(ambient: &ProductGroup, members: &[Tuple]) -> CosetKind {
        let rep_inv = ambient.inv(&members[0]);
        let shifted: BTreeSet<Tuple> = members.iter().map(|m| ambient.op(m, &rep_inv)).collect();
        let closed = shifted
            .iter()
            .all(|a| shifted.iter().all(|b| shifted.contains(&ambient.op(a, b))));
        if !closed {
            return CosetKind::NotCoset;
        }
        if members.binary_search(&ambient.identity()).is_ok() {
            CosetKind::Subgroup
        } else {
            CosetKind::Coset
        }
    }

    /// Smallest subgroup containing `generators`; the empty generator list
    /// yields the trivial subgroup.
    pub fn generate(ambient: ProductGroup, generators: &[Tuple]) -> Result<CosetSet> {
        for g in generators {
            if !ambient.contains(g) {
                return Err(Error::ValueOutOfRange {
                    value: *g.iter().max().unwrap_or(&0),
                    order: ambient.order(),
                });
            }
        }
        let mut set: BTreeSet<Tuple> = BTreeSet::new();
        set.insert(ambient.identity());
        for g in generators {
            set.insert(g.clone());
        }
        loop {
            let mut fresh: Vec<Tuple> = Vec::new();
            for a in &set {
                for b in &set {
                    let ab = ambient.op(a, b);
                    if !set.contains(&ab) {
                        fresh.push(ab);
                    }
                }
            }
            if fresh.is_empty() {
                break;
            }
            set.extend(fresh);
        }
        let members: Vec<Tuple> = set.into_iter().collect();
        Ok(CosetSet {
            ambient,
            members,
            kind: CosetKind::Subgroup,
        })
    }

    pub fn singleton(ambient: ProductGroup, member: Tuple) -> Result<CosetSet> {
        CosetSet::classify(ambient, [member])
    }

    pub fn ambient(&self) -> &ProductGroup {
        &self.ambient
    }

    pub fn members(&self) -> &[Tuple] {
        &self.members
    }

    /// Member count; never zero.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn kind(&self) -> CosetKind {
        self.kind
    }

    pub fn is_subgroup(&self) -> bool {
        self.kind == CosetKind::Subgroup
    }

    pub fn is_coset_or_subgroup(&self) -> bool {
        matches!(self.kind, CosetKind::Coset | CosetKind::Subgroup)
    }

    /// Lexicographically least member.
    pub fn representative(&self) -> &Tuple {
        &self.members[0]
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        self.members
            .binary_search_by(|m| m.as_slice().cmp(t))
            .is_ok()
    }

    /// Right translate { x·shift : x ∈ self }. Requires a coset or subgroup.
    pub fn translate(&self, shift: &[usize]) -> Result<CosetSet> {
        if !self.is_coset_or_subgroup() {
            return Err(Error::NotCosetInput);
        }
        if !self.ambient.contains(shift) {
            return Err(Error::ValueOutOfRange {
                value: *shift.iter().max().unwrap_or(&0),
                order: self.ambient.order(),
            });
        }
        let mut members: Vec<Tuple> = self
            .members
            .iter()
            .map(|m| self.ambient.op(m, shift))
            .collect();
        members.sort();
        let kind = if members.binary_search(&self.ambient.identity()).is_ok() {
            CosetKind::Subgroup
        } else {
            CosetKind::Coset
        };
        Ok(CosetSet {
            ambient: self.ambient.clone(),
            members,
            kind,
        })
    }

    /// The subgroup S with self = S·representative. For subgroups this is
    /// self; translation-invariant across a coset family.
    pub fn direction(&self) -> Result<CosetSet> {
        if !self.is_coset_or_subgroup() {
            return Err(Error::NotCosetInput);
        }
        self.translate(&self.ambient.inv(self.representative()))
    }

    /// Re-index a subgroup as a standalone group: element i of the result is
    /// `members[i]`. Returns the group together with the member list.
    pub fn as_group(&self, label: impl Into<String>) -> Result<(FiniteGroup, Vec<Tuple>)> {
        if !self.is_subgroup() {
            return Err(Error::NotSubgroup);
        }
        let index_of = |t: &Tuple| self.members.binary_search(t).expect("closed subgroup");
        let table: Vec<Vec<usize>> = self
            .members
            .iter()
            .map(|a| {
                self.members
                    .iter()
                    .map(|b| index_of(&self.ambient.op(a, b)))
                    .collect()
            })
            .collect();
        let group = FiniteGroup::from_table(label, table)?;
        Ok((group, self.members.clone()))
    }

    /// Exhaustive commutativity check over the members.
    pub fn is_commutative(&self) -> bool {
        self.members.iter().all(|a| {
            self.members
                .iter()
                .all(|b| self.ambient.op(a, b) == self.ambient.op(b, a))
        })
    }
}

/// All subgroups of `ambient`, sorted by (order, members). BFS over
/// single-generator extensions; exact at desk scale.
pub fn enumerate_subgroups(ambient: &ProductGroup) -> Vec<CosetSet> {
    let trivial = CosetSet::generate(ambient.clone(), &[]).expect("trivial subgroup");
    let mut known: BTreeSet<Vec<Tuple>> = BTreeSet::new();
    known.insert(trivial.members().to_vec());
    let mut frontier: Vec<Vec<Tuple>> = vec![trivial.members().to_vec()];
    let all: Vec<Tuple> = ambient.elements().collect();
    while let Some(base) = frontier.pop() {
        for g in &all {
            if base.binary_search(g).is_ok() {
                continue;
            }
            let mut gens = base.clone();
            gens.push(g.clone());
            let sub = CosetSet::generate(ambient.clone(), &gens).expect("closure");
            if known.insert(sub.members().to_vec()) {
                frontier.push(sub.members().to_vec());
            }
        }
    }
    let mut subs: Vec<CosetSet> = known
        .into_iter()
        .map(|members| CosetSet {
            ambient: ambient.clone(),
            members,
            kind: CosetKind::Subgroup,
        })
        .collect();
    subs.sort_by(|a, b| (a.len(), a.members()).cmp(&(b.len(), b.members())));
    subs
}
