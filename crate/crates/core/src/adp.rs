//! Almost-direct products of three groups: classification, componentwise
//! kernels, quotients, and the induced equivalences.
//!
//! A subgroup H ≤ G1×G2×G3 is an almost-direct product when it is proper and
//! every pair of coordinates extends to a member (in each of the three ways);
//! it is strict when the extending coordinate is always unique. Quotienting by
//! the componentwise kernels N_i = { t : embed_i(t) ∈ H } always yields a
//! strict, commutative almost-direct product.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::coset::{CosetKind, CosetSet};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, ProductGroup, Tuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdpClass {
    NotAdp,
    Adp,
    StrictAdp,
}

fn require_three_factor_subgroup(h: &CosetSet) -> Result<()> {
    if !h.is_subgroup() {
        return Err(Error::NotSubgroup);
    }
    if h.ambient().arity() != 3 {
        return Err(Error::InvalidParams(format!(
            "expected a 3-factor product, got arity {}",
            h.ambient().arity()
        )));
    }
    Ok(())
}

/// The subgroup N_i = { t in G_i : (1,..,t,..,1) ∈ H } of the i-th factor
/// (i is 0-based).
pub fn component_kernel(h: &CosetSet, coord: usize) -> Result<CosetSet> {
    require_three_factor_subgroup(h)?;
    let ambient = h.ambient();
    let factor = ambient.factor(coord).clone();
    let mut members = Vec::new();
    for t in 0..factor.order() {
        let mut probe = ambient.identity();
        probe[coord] = t;
        if h.contains(&probe) {
            members.push(vec![t]);
        }
    }
    CosetSet::classify(ProductGroup::single(factor), members)
}

/// Check the proper-subgroup condition and the three pairwise extension
/// conditions; strict when every extension is unique.
pub fn classify_almost_direct(h: &CosetSet) -> Result<AdpClass> {
    require_three_factor_subgroup(h)?;
    let ambient = h.ambient();
    if h.len() == ambient.order() {
        return Ok(AdpClass::NotAdp);
    }
    let mut strict = true;
    for missing in 0..3 {
        let (a, b) = match missing {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for m in h.members() {
            *counts.entry((m[a], m[b])).or_insert(0) += 1;
        }
        let pairs = ambient.factor(a).order() * ambient.factor(b).order();
        if counts.len() != pairs {
            return Ok(AdpClass::NotAdp);
        }
        if counts.values().any(|&c| c != 1) {
            strict = false;
        }
    }
    Ok(if strict {
        AdpClass::StrictAdp
    } else {
        AdpClass::Adp
    })
}

/// A surjective homomorphism from a group onto its quotient by a normal
/// subgroup, with the projection realized as a dense table.
#[derive(Debug, Clone)]
pub struct QuotientMap {
    source: Arc<FiniteGroup>,
    kernel: CosetSet,
    target: Arc<FiniteGroup>,
    projection: Vec<usize>,
}

impl QuotientMap {
    /// `kernel` must be a subgroup of the one-factor product over `source`
    /// and normal in it.
    pub fn new(source: Arc<FiniteGroup>, kernel: CosetSet) -> Result<QuotientMap> {
        if !kernel.is_subgroup() || kernel.ambient().arity() != 1 {
            return Err(Error::NotSubgroup);
        }
        if kernel.ambient().factor(0).as_ref() != source.as_ref() {
            return Err(Error::InvalidParams(
                "kernel ambient differs from source".into(),
            ));
        }
        let n: Vec<usize> = kernel.members().iter().map(|m| m[0]).collect();
        for &g in &(0..source.order()).collect::<Vec<_>>() {
            for &k in &n {
                let conj = source.op(source.op(g, k), source.inv(g));
                if n.binary_search(&conj).is_err() {
                    return Err(Error::NotNormal);
                }
            }
        }
        // Canonical representative of the coset N·x is its least element.
        let class_rep = |x: usize| n.iter().map(|&k| source.op(k, x)).min().unwrap();
        let mut reps: Vec<usize> = (0..source.order())
            .map(class_rep)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        reps.sort_unstable();
        let rep_index: BTreeMap<usize, usize> =
            reps.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let projection: Vec<usize> = (0..source.order())
            .map(|x| rep_index[&class_rep(x)])
            .collect();
        let table: Vec<Vec<usize>> = reps
            .iter()
            .map(|&a| reps.iter().map(|&b| projection[source.op(a, b)]).collect())
            .collect();
        let target = FiniteGroup::from_table(format!("{}/{}", source.label(), n.len()), table)?;
        let map = QuotientMap {
            source,
            kernel,
            target: Arc::new(target),
            projection,
        };
        map.verify()?;
        Ok(map)
    }

    /// Exhaustively re-check the homomorphism laws and that the preimage of
    /// the target identity is exactly the kernel.
    fn verify(&self) -> Result<()> {
        let s = &self.source;
        for a in 0..s.order() {
            for b in 0..s.order() {
                let lhs = self.target.op(self.projection[a], self.projection[b]);
                if lhs != self.projection[s.op(a, b)] {
                    return Err(Error::AssertionFailure(
                        "projection is not a homomorphism".into(),
                    ));
                }
            }
        }
        let preimage: Vec<Tuple> = (0..s.order())
            .filter(|&x| self.projection[x] == self.target.identity())
            .map(|x| vec![x])
            .collect();
        if preimage != self.kernel.members() {
            return Err(Error::AssertionFailure(
                "kernel differs from identity preimage".into(),
            ));
        }
        Ok(())
    }

    pub fn source(&self) -> &Arc<FiniteGroup> {
        &self.source
    }

    pub fn kernel(&self) -> &CosetSet {
        &self.kernel
    }

    pub fn target(&self) -> &Arc<FiniteGroup> {
        &self.target
    }

    pub fn apply(&self, x: usize) -> usize {
        self.projection[x]
    }
}

/// Result of quotienting an almost-direct product by its componentwise
/// kernels.
#[derive(Debug, Clone)]
pub struct AdpQuotient {
    pub kernels: [CosetSet; 3],
    pub maps: [QuotientMap; 3],
    pub image: CosetSet,
}

impl AdpQuotient {
    pub fn apply(&self, t: &[usize]) -> Tuple {
        (0..3).map(|i| self.maps[i].apply(t[i])).collect()
    }
}

/// Quotient an almost-direct product by N1×N2×N3. The image is always a
/// strict almost-direct product; violation is an internal error.
pub fn quotient_adp(h: &CosetSet) -> Result<AdpQuotient> {
    match classify_almost_direct(h)? {
        AdpClass::NotAdp => return Err(Error::NotAdpInput),
        AdpClass::Adp | AdpClass::StrictAdp => {}
    }
    let kernels = [
        component_kernel(h, 0)?,
        component_kernel(h, 1)?,
        component_kernel(h, 2)?,
    ];
    let maps = [
        QuotientMap::new(h.ambient().factor(0).clone(), kernels[0].clone())?,
        QuotientMap::new(h.ambient().factor(1).clone(), kernels[1].clone())?,
        QuotientMap::new(h.ambient().factor(2).clone(), kernels[2].clone())?,
    ];
    let quotient_product = ProductGroup::new(maps.iter().map(|m| m.target().clone()).collect());
    let image_members: BTreeSet<Tuple> = h
        .members()
        .iter()
        .map(|m| (0..3).map(|i| maps[i].apply(m[i])).collect())
        .collect();
    let image = CosetSet::classify(quotient_product, image_members)?;
    if image.kind() != CosetKind::Subgroup {
        return Err(Error::AssertionFailure(
            "quotient image is not a subgroup".into(),
        ));
    }
    if classify_almost_direct(&image)? != AdpClass::StrictAdp {
        return Err(Error::AssertionFailure(
            "quotient image is not strict".into(),
        ));
    }
    Ok(AdpQuotient {
        kernels,
        maps,
        image,
    })
}

/// Class id of `x` under the i-th fiber equivalence of H: the least element
/// of the factor whose fiber { (other coords) : member with coordinate i
/// fixed } equals that of `x`. For almost-direct products this coincides
/// with the N_i-coset of `x`.
pub fn equivalence_class(h: &CosetSet, coord: usize, x: usize) -> Result<usize> {
    require_three_factor_subgroup(h)?;
    let factor_order = h.ambient().factor(coord).order();
    if x >= factor_order {
        return Err(Error::ValueOutOfRange {
            value: x,
            order: factor_order,
        });
    }
    let fiber = |v: usize| -> BTreeSet<Tuple> {
        h.members()
            .iter()
            .filter(|m| m[coord] == v)
            .map(|m| {
                m.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != coord)
                    .map(|(_, &c)| c)
                    .collect()
            })
            .collect()
    };
    let target = fiber(x);
    for v in 0..=x {
        if fiber(v) == target {
            return Ok(v);
        }
    }
    unreachable!("x is equivalent to itself")
}
