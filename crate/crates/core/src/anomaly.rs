//! Anomaly detection and the chain extracting a pp-definable almost-direct
//! product from any non-2-Helly witness.
//!
//! A (k,j)-anomaly is a size-j partial solution that does not extend to a
//! solution although every k-element restriction does. The chain: find a
//! (2,j)-anomaly, take an inclusion-minimal non-extending restriction (a
//! (k,k+1)-anomaly), shift the instance to a subgroup instance by a
//! solution's inverse, reduce (k,k+1) to (k-1,k) by pinning one element to
//! the identity, and at (2,3) read off the subgroups S1,S2,S3 and the
//! restriction R of the extendable-solution group H, which is always an
//! almost-direct product. Every step is re-verified against the complete
//! solver.

use std::collections::BTreeSet;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::action::{act_assignment, act_instance};
use crate::adp::{classify_almost_direct, AdpClass};
use crate::coset::{CosetKind, CosetSet};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::group::{GroupSpec, ProductGroup, Tuple};
use crate::instance::{Assignment, Bound, Constraint, Instance};
use crate::pp::{materialize, projection_formula, PpBuilder, PpFormula};
use crate::solver::{all_solutions, extends_to_solution, solve, solve_with_fixed, Limits};
use crate::template::CosetTemplate;

/// A verified anomaly: `h` is a partial solution of `instance` of size `j`
/// that does not extend, while every k-subset restriction does.
#[derive(Debug, Clone)]
pub struct AnomalyWitness {
    pub instance: Instance,
    pub h: Assignment,
    pub k: usize,
    pub j: usize,
}

/// Verdict per the anomaly definition, using the complete solver as the
/// extension oracle.
pub fn is_anomaly(bound: &Bound, h: &Assignment, k: usize, limits: &Limits) -> Result<bool> {
    if k >= h.len() {
        return Err(Error::InvalidParams(format!(
            "k = {k} must be smaller than the domain size {}",
            h.len()
        )));
    }
    if !bound.is_partial_solution(h) {
        return Ok(false);
    }
    if extends_to_solution(bound, h, limits)? {
        return Ok(false);
    }
    let domain = h.domain();
    for subset in domain.iter().copied().combinations(k) {
        if !extends_to_solution(bound, &h.restrict(&subset), limits)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub limits: Limits,
    /// Cap on candidate (domain, assignment) pairs examined.
    pub max_candidates: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            limits: Limits::default(),
            max_candidates: 1_000_000,
        }
    }
}

/// First (k,j)-anomaly of the instance in (domain lex order, assignment lex
/// order), or `None`.
pub fn find_kj_anomaly(
    instance: &Instance,
    t: &CosetTemplate,
    k: usize,
    j: usize,
    opts: &SearchOptions,
) -> Result<Option<AnomalyWitness>> {
    let bound = instance.bind(t)?;
    let n = bound.element_count();
    if j > n {
        return Err(Error::InvalidParams(format!(
            "j = {j} exceeds the element count {n}"
        )));
    }
    if k >= j {
        return Err(Error::InvalidParams(format!("need k < j, got ({k},{j})")));
    }
    let mut candidates = 0u64;
    for domain in (0..n).combinations(j) {
        let orders: Vec<usize> = domain.iter().map(|&e| bound.carrier_order(e)).collect();
        let mut values = vec![0usize; j];
        loop {
            candidates += 1;
            if candidates > opts.max_candidates {
                return Err(Error::BudgetExceeded(opts.max_candidates));
            }
            let h = Assignment::from_pairs(domain.iter().copied().zip(values.iter().copied()));
            if is_anomaly(&bound, &h, k, &opts.limits)? {
                return Ok(Some(AnomalyWitness {
                    instance: instance.clone(),
                    h,
                    k,
                    j,
                }));
            }
            // Next assignment in lexicographic value order.
            let mut pos = j;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                values[pos] += 1;
                if values[pos] < orders[pos] {
                    break;
                }
                values[pos] = 0;
            }
            if values.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    Ok(None)
}

/// Restrict a (2,j)-anomaly to an inclusion-minimal non-extending domain,
/// yielding a (k-1,k)-anomaly with k >= 3. Scanning domains by ascending
/// size (then lex) makes the first non-extender minimal.
pub fn shrink_anomaly(
    instance: &Instance,
    t: &CosetTemplate,
    h: &Assignment,
    limits: &Limits,
) -> Result<AnomalyWitness> {
    let bound = instance.bind(t)?;
    if h.len() < 3 || !is_anomaly(&bound, h, 2, limits)? {
        return Err(Error::NotAnAnomaly);
    }
    let domain = h.domain();
    for size in 3..=domain.len() {
        for subset in domain.iter().copied().combinations(size) {
            let restricted = h.restrict(&subset);
            if !extends_to_solution(&bound, &restricted, limits)? {
                let witness = AnomalyWitness {
                    instance: instance.clone(),
                    h: restricted.clone(),
                    k: size - 1,
                    j: size,
                };
                if !is_anomaly(&bound, &restricted, size - 1, limits)? {
                    return Err(Error::AssertionFailure(
                        "minimal restriction is not a (k-1,k)-anomaly".into(),
                    ));
                }
                return Ok(witness);
            }
        }
    }
    Err(Error::AssertionFailure(
        "anomaly has no non-extending restriction".into(),
    ))
}

/// Shift a solvable instance by the inverse of its first solution; every
/// relation of the result is a subgroup. Returns the shifted instance and
/// the shifting pre-solution.
pub fn normalize_subgroup_instance(
    instance: &Instance,
    t: &CosetTemplate,
    limits: &Limits,
) -> Result<(Instance, Assignment)> {
    let bound = instance.bind(t)?;
    let solution = solve(&bound, limits)?.ok_or(Error::Unsolvable)?;
    let shift = bound.invert_presolution(&solution);
    let shifted = act_instance(&bound, &shift)?;
    debug_assert!(is_subgroup_instance(&shifted.bind(t)?));
    Ok((shifted, shift))
}

pub fn is_subgroup_instance(bound: &Bound) -> bool {
    bound
        .constraints
        .iter()
        .all(|c| c.rel.coset.kind() == CosetKind::Subgroup)
}

/// One reduction step: from a (k,k+1)-anomaly in a subgroup instance to a
/// (k-1,k)-anomaly in the instance extended with one identity pin.
///
/// The pinned element is the first of dom(h) in element order; the witness
/// is shifted by the inverse of the first solution matching h there and
/// restricted away from the pinned element.
pub fn reduce_anomaly_step(
    instance: &Instance,
    t: &CosetTemplate,
    witness: &AnomalyWitness,
    limits: &Limits,
) -> Result<(Instance, AnomalyWitness)> {
    let bound = instance.bind(t)?;
    if !is_subgroup_instance(&bound) {
        return Err(Error::PreconditionViolated(
            "not a subgroup instance".into(),
        ));
    }
    let (h, k) = (&witness.h, witness.k);
    if k < 2 || witness.j != k + 1 || h.len() != k + 1 {
        return Err(Error::PreconditionViolated(format!(
            "expected a (k,k+1)-anomaly with k >= 2, got ({k},{})",
            witness.j
        )));
    }
    if !is_anomaly(&bound, h, k, limits)? {
        return Err(Error::PreconditionViolated(
            "witness is not a (k,k+1)-anomaly".into(),
        ));
    }
    let domain = h.domain();
    let pinned = domain[0];
    let pin_only = h.restrict(&[pinned]);
    let extending = solve_with_fixed(&bound, &pin_only, limits)?
        .ok_or_else(|| Error::AssertionFailure("singleton restriction must extend".into()))?;
    let shifted_h = act_assignment(&bound, h, &bound.invert_presolution(&extending));
    let reduced_h = shifted_h.restrict(&domain[1..]);
    let carrier = bound.carriers[pinned];
    let mut constraints = instance.constraints.clone();
    constraints.push(Constraint {
        rel: t.identity_relation_name(carrier),
        args: vec![instance.elements[pinned].clone()],
    });
    let extended = Instance {
        elements: instance.elements.clone(),
        constraints,
    };
    let extended_bound = extended.bind(t)?;
    if !is_subgroup_instance(&extended_bound) {
        return Err(Error::AssertionFailure(
            "identity pin broke subgroup-ness".into(),
        ));
    }
    if !is_anomaly(&extended_bound, &reduced_h, k - 1, limits)? {
        return Err(Error::AssertionFailure(
            "reduction did not produce a (k-1,k)-anomaly".into(),
        ));
    }
    let reduced = AnomalyWitness {
        instance: extended.clone(),
        h: reduced_h,
        k: k - 1,
        j: k,
    };
    Ok((extended, reduced))
}

/// The group H of X-assignments that extend to solutions, as an explicit
/// coset over the product of constraining groups at X.
pub fn extendable_group(
    bound: &Bound,
    domain: &[usize],
    limits: &Limits,
    mode: ExecMode,
) -> Result<CosetSet> {
    let set = all_solutions(bound, limits, mode)?;
    if set.solutions.is_empty() {
        return Err(Error::EmptyExtendableSet);
    }
    let ambient = ProductGroup::new(
        domain
            .iter()
            .map(|&e| bound.template.carrier(bound.carriers[e]).clone())
            .collect(),
    );
    let tuples: BTreeSet<Tuple> = set
        .solutions
        .iter()
        .map(|s| domain.iter().map(|&e| s.get(e).expect("total")).collect())
        .collect();
    CosetSet::classify(ambient, tuples)
}

/// Defining formulas for the extracted sets, all over the template's base
/// relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdpWitnesses {
    pub h: PpFormula,
    pub s1: PpFormula,
    pub s2: PpFormula,
    pub s3: PpFormula,
    pub r: PpFormula,
}

/// The extracted product: subgroups S1,S2,S3 of the carriers, the
/// extendable group H, and the almost-direct product R = H ∩ S1×S2×S3,
/// together with pp-witnesses and R re-indexed over the S-groups.
#[derive(Debug, Clone)]
pub struct AdpExtraction {
    pub carrier_names: [String; 3],
    /// Extendable-solution group over the carrier product.
    pub h: CosetSet,
    /// One-factor subgroups of the respective carriers.
    pub s: [CosetSet; 3],
    /// R in carrier coordinates.
    pub r_in_carriers: CosetSet,
    /// R re-indexed over the product of the S-groups.
    pub r: CosetSet,
    pub class: AdpClass,
    pub witnesses: AdpWitnesses,
}

impl AdpExtraction {
    /// S-group index of a carrier element, if it lies in S_coord.
    pub fn carrier_to_s(&self, coord: usize, g: usize) -> Option<usize> {
        self.s[coord].members().binary_search(&vec![g]).ok()
    }

    pub fn s_to_carrier(&self, coord: usize, s_index: usize) -> usize {
        self.s[coord].members()[s_index][0]
    }

    pub fn tuple_to_s(&self, t: &[usize]) -> Option<Tuple> {
        (0..3).map(|i| self.carrier_to_s(i, t[i])).collect()
    }

    pub fn tuple_to_carriers(&self, t: &[usize]) -> Tuple {
        (0..3).map(|i| self.s_to_carrier(i, t[i])).collect()
    }

    /// The S-product in carrier coordinates, in lexicographic order.
    pub fn s_product_elements(&self) -> Vec<Tuple> {
        self.s[0]
            .members()
            .iter()
            .flat_map(|a| {
                self.s[1].members().iter().flat_map(move |b| {
                    self.s[2]
                        .members()
                        .iter()
                        .map(move |c| vec![a[0], b[0], c[0]])
                })
            })
            .collect()
    }

    /// Lexicographically least element of S1×S2×S3 outside R, in carrier
    /// coordinates.
    pub fn first_nonmember_shift(&self) -> Tuple {
        self.s_product_elements()
            .into_iter()
            .find(|t| !self.r_in_carriers.contains(t))
            .expect("R is a proper subgroup of the S-product")
    }

    /// All cosets of R in the S-product, in carrier coordinates, R first,
    /// sorted by representative.
    pub fn cosets_of_r(&self) -> Vec<CosetSet> {
        let mut seen: BTreeSet<Vec<Tuple>> = BTreeSet::new();
        let mut cosets = Vec::new();
        for shift in self.s_product_elements() {
            let translated = self.r_in_carriers.translate(&shift).expect("coset input");
            if seen.insert(translated.members().to_vec()) {
                cosets.push(translated);
            }
        }
        cosets.sort_by(|a, b| a.representative().cmp(b.representative()));
        cosets
    }

    /// Extract directly from a ternary template relation that is itself an
    /// almost-direct product (single-atom pp-witness).
    pub fn from_relation(t: &CosetTemplate, name: &str) -> Result<AdpExtraction> {
        let rel = t.relation(name)?;
        if rel.arity() != 3 {
            return Err(Error::ArityMismatch {
                context: format!("relation {name}"),
                expected: 3,
                got: rel.arity(),
            });
        }
        let instance = Instance::new(
            vec!["v0".into(), "v1".into(), "v2".into()],
            vec![Constraint {
                rel: name.to_string(),
                args: vec!["v0".into(), "v1".into(), "v2".into()],
            }],
        );
        let bound = instance.bind(t)?;
        extract(&bound, &[0, 1, 2], &Limits::default(), ExecMode::default())
    }
}

/// Names of the identity singletons for the three coordinates of `domain`.
fn identity_names(bound: &Bound, domain: &[usize]) -> [String; 3] {
    [
        bound
            .template
            .identity_relation_name(bound.carriers[domain[0]]),
        bound
            .template
            .identity_relation_name(bound.carriers[domain[1]]),
        bound
            .template
            .identity_relation_name(bound.carriers[domain[2]]),
    ]
}

/// Core extraction: compute H on `domain`, the two-sided subgroups S_i, and
/// R, with defining formulas, verifying the almost-direct conditions and the
/// formula round-trips.
fn extract(
    bound: &Bound,
    domain: &[usize],
    limits: &Limits,
    mode: ExecMode,
) -> Result<AdpExtraction> {
    let h_set = extendable_group(bound, domain, limits, mode)?;
    if h_set.kind() != CosetKind::Subgroup {
        return Err(Error::AssertionFailure(
            "extendable group of a subgroup instance must be a subgroup".into(),
        ));
    }
    let ambient = h_set.ambient().clone();
    let identities: Tuple = ambient.identity();
    // tau in S_i iff H has a member with coordinate i = tau and coordinate
    // k = 1, and one with coordinate i = tau and coordinate j = 1, where
    // j < k are the other two coordinates.
    let mut s_sets = Vec::with_capacity(3);
    for i in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&c| c != i).collect();
        let (j, k) = (others[0], others[1]);
        let mut members = Vec::new();
        for tau in 0..ambient.factor(i).order() {
            let first = h_set
                .members()
                .iter()
                .any(|m| m[i] == tau && m[k] == identities[k]);
            let second = h_set
                .members()
                .iter()
                .any(|m| m[i] == tau && m[j] == identities[j]);
            if first && second {
                members.push(vec![tau]);
            }
        }
        let s = CosetSet::classify(ProductGroup::single(ambient.factor(i).clone()), members)?;
        if !s.is_subgroup() {
            return Err(Error::AssertionFailure(format!(
                "S{} is not a subgroup",
                i + 1
            )));
        }
        s_sets.push(s);
    }
    let s: [CosetSet; 3] = [s_sets[0].clone(), s_sets[1].clone(), s_sets[2].clone()];
    let r_members: Vec<Tuple> = h_set
        .members()
        .iter()
        .filter(|m| (0..3).all(|i| s[i].contains(&[m[i]])))
        .cloned()
        .collect();
    let r_in_carriers = CosetSet::classify(ambient.clone(), r_members)?;
    if r_in_carriers.kind() != CosetKind::Subgroup {
        return Err(Error::AssertionFailure("R is not a subgroup".into()));
    }
    // Re-index R over the S-groups.
    let carrier_names = [
        ambient.factor(0).label().to_string(),
        ambient.factor(1).label().to_string(),
        ambient.factor(2).label().to_string(),
    ];
    let s_groups: Vec<Arc<crate::group::FiniteGroup>> = (0..3)
        .map(|i| {
            let (g, _) = s[i].as_group(format!("S{}[{}]", i + 1, carrier_names[i]))?;
            Ok(Arc::new(g))
        })
        .collect::<Result<_>>()?;
    let s_product = ProductGroup::new(s_groups);
    let r_s_members: Vec<Tuple> = r_in_carriers
        .members()
        .iter()
        .map(|m| {
            (0..3)
                .map(|i| {
                    s[i].members()
                        .binary_search(&vec![m[i]])
                        .expect("member of S_i")
                })
                .collect()
        })
        .collect();
    let r = CosetSet::classify(s_product, r_s_members)?;
    let class = classify_almost_direct(&r)?;
    if class == AdpClass::NotAdp {
        return Err(Error::AssertionFailure(
            "extracted R is not an almost-direct product".into(),
        ));
    }
    // Defining formulas.
    let h_formula = projection_formula(bound, domain);
    let ones = identity_names(bound, domain);
    let s_formula = |i: usize| -> PpFormula {
        let others: Vec<usize> = (0..3).filter(|&c| c != i).collect();
        let (j, k) = (others[0], others[1]);
        let mut b = PpBuilder::new(1);
        // Exists member with coordinate k pinned to the identity.
        let mut args1 = vec![0; 3];
        args1[i] = 0;
        args1[j] = b.fresh();
        args1[k] = b.fresh();
        b.inline(&h_formula, &args1);
        b.atom(ones[k].clone(), vec![args1[k]]);
        // Exists member with coordinate j pinned to the identity.
        let mut args2 = vec![0; 3];
        args2[i] = 0;
        args2[j] = b.fresh();
        args2[k] = b.fresh();
        b.inline(&h_formula, &args2);
        b.atom(ones[j].clone(), vec![args2[j]]);
        b.finish()
    };
    let s1_formula = s_formula(0);
    let s2_formula = s_formula(1);
    let s3_formula = s_formula(2);
    let mut rb = PpBuilder::new(3);
    rb.inline(&h_formula, &[0, 1, 2]);
    rb.inline(&s1_formula, &[0]);
    rb.inline(&s2_formula, &[1]);
    rb.inline(&s3_formula, &[2]);
    let r_formula = rb.finish();
    // Round-trip every formula through materialization.
    let checks: [(&PpFormula, &CosetSet); 5] = [
        (&h_formula, &h_set),
        (&s1_formula, &s[0]),
        (&s2_formula, &s[1]),
        (&s3_formula, &s[2]),
        (&r_formula, &r_in_carriers),
    ];
    for (formula, expected) in checks {
        let got = materialize(bound.template, formula, limits, mode)?;
        if got.members() != expected.members() {
            return Err(Error::AssertionFailure(
                "pp-witness does not round-trip".into(),
            ));
        }
    }
    Ok(AdpExtraction {
        carrier_names,
        h: h_set,
        s,
        r_in_carriers,
        r,
        class,
        witnesses: AdpWitnesses {
            h: h_formula,
            s1: s1_formula,
            s2: s2_formula,
            s3: s3_formula,
            r: r_formula,
        },
    })
}

/// Extract the almost-direct product certified by a (2,3)-anomaly of a
/// subgroup instance.
pub fn build_adp_from_anomaly(
    instance: &Instance,
    t: &CosetTemplate,
    h: &Assignment,
    limits: &Limits,
    mode: ExecMode,
) -> Result<AdpExtraction> {
    let bound = instance.bind(t)?;
    if !is_subgroup_instance(&bound) {
        return Err(Error::PreconditionViolated(
            "not a subgroup instance".into(),
        ));
    }
    if h.len() != 3 {
        return Err(Error::PreconditionViolated(
            "anomaly domain must have three elements".into(),
        ));
    }
    if !is_anomaly(&bound, h, 2, limits)? {
        return Err(Error::PreconditionViolated(
            "assignment is not a (2,3)-anomaly".into(),
        ));
    }
    let extraction = extract(&bound, &h.domain(), limits, mode)?;
    // The anomaly itself must be outside H with all two-sided witnesses in
    // place; extraction already verified the almost-direct conditions.
    let tuple: Tuple = h.domain().iter().map(|&e| h.get(e).unwrap()).collect();
    if extraction.h.contains(&tuple) {
        return Err(Error::AssertionFailure("anomaly tuple lies in H".into()));
    }
    Ok(extraction)
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub search: SearchOptions,
    /// Largest anomaly size to search for; defaults to the element count.
    pub max_j: Option<usize>,
    pub mode: ExecMode,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            search: SearchOptions::default(),
            max_j: None,
            mode: ExecMode::default(),
        }
    }
}

/// Trace of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub adp: AdpExtraction,
    /// Size of the (2,j)-anomaly found.
    pub found_j: usize,
    /// Parameters after minimization.
    pub shrunk: (usize, usize),
    /// Number of (k,k+1) -> (k-1,k) reductions applied.
    pub reductions: usize,
    /// The subgroup instance and witness the product was extracted from.
    pub final_instance: Instance,
    pub final_h: Assignment,
}

/// Full chain on a witness instance: search for a (2,j)-anomaly, minimize,
/// shift to a subgroup instance, reduce to (2,3), extract. Returns `None`
/// if no anomaly is found within the budget.
pub fn helly_pipeline(
    t: &CosetTemplate,
    instance: &Instance,
    opts: &PipelineOptions,
) -> Result<Option<PipelineOutcome>> {
    let normalized = instance.normalize(t)?;
    let n = normalized.elements.len();
    let max_j = opts.max_j.unwrap_or(n).min(n);
    let mut found: Option<AnomalyWitness> = None;
    for j in 3..=max_j {
        if let Some(w) = find_kj_anomaly(&normalized, t, 2, j, &opts.search)? {
            found = Some(w);
            break;
        }
    }
    let Some(witness) = found else {
        return Ok(None);
    };
    let found_j = witness.j;
    let limits = &opts.search.limits;
    let minimal = shrink_anomaly(&normalized, t, &witness.h, limits)?;
    let shrunk = (minimal.k, minimal.j);
    // Shift to a subgroup instance; the anomaly transfers along the action.
    let bound = normalized.bind(t)?;
    let (mut current, shift) = normalize_subgroup_instance(&normalized, t, limits)?;
    let mut h = act_assignment(&bound, &minimal.h, &shift);
    let mut k = minimal.k;
    if !is_anomaly(&current.bind(t)?, &h, k, limits)? {
        return Err(Error::AssertionFailure(
            "anomaly did not transfer along the action".into(),
        ));
    }
    let mut reductions = 0;
    while k > 2 {
        let witness = AnomalyWitness {
            instance: current.clone(),
            h: h.clone(),
            k,
            j: k + 1,
        };
        let (next, reduced) = reduce_anomaly_step(&current, t, &witness, limits)?;
        current = next;
        h = reduced.h;
        k = reduced.k;
        reductions += 1;
    }
    let adp = build_adp_from_anomaly(&current, t, &h, limits, opts.mode)?;
    Ok(Some(PipelineOutcome {
        adp,
        found_j,
        shrunk,
        reductions,
        final_instance: current,
        final_h: h,
    }))
}

// --- serialization ---

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdpJson {
    pub carriers: Vec<GroupSpec>,
    pub carrier_names: [String; 3],
    pub h: Vec<Tuple>,
    pub s: [Vec<Tuple>; 3],
    pub r: Vec<Tuple>,
    pub class: String,
    pub witnesses: AdpWitnesses,
}

impl AdpJson {
    pub fn from_extraction(adp: &AdpExtraction) -> AdpJson {
        let ambient = adp.h.ambient();
        AdpJson {
            carriers: (0..3)
                .map(|i| GroupSpec::from_group(ambient.factor(i)))
                .collect(),
            carrier_names: adp.carrier_names.clone(),
            h: adp.h.members().to_vec(),
            s: [
                adp.s[0].members().to_vec(),
                adp.s[1].members().to_vec(),
                adp.s[2].members().to_vec(),
            ],
            r: adp.r_in_carriers.members().to_vec(),
            class: match adp.class {
                AdpClass::NotAdp => "not_adp",
                AdpClass::Adp => "adp",
                AdpClass::StrictAdp => "strict_adp",
            }
            .to_string(),
            witnesses: adp.witnesses.clone(),
        }
    }

    /// Rebuild and re-verify: membership sets are reclassified, R is
    /// recomputed as H ∩ S1×S2×S3, and the class is re-derived and compared.
    pub fn build(&self) -> Result<AdpExtraction> {
        let groups: Vec<Arc<crate::group::FiniteGroup>> = self
            .carriers
            .iter()
            .map(|spec| spec.build().map(Arc::new))
            .collect::<Result<_>>()?;
        if groups.len() != 3 {
            return Err(Error::InvalidSpec("expected three carrier groups".into()));
        }
        let ambient = ProductGroup::new(groups.clone());
        let h = CosetSet::classify(ambient.clone(), self.h.clone())?;
        if !h.is_subgroup() {
            return Err(Error::InvalidSpec("H is not a subgroup".into()));
        }
        let s: [CosetSet; 3] = [
            CosetSet::classify(ProductGroup::single(groups[0].clone()), self.s[0].clone())?,
            CosetSet::classify(ProductGroup::single(groups[1].clone()), self.s[1].clone())?,
            CosetSet::classify(ProductGroup::single(groups[2].clone()), self.s[2].clone())?,
        ];
        for c in &s {
            if !c.is_subgroup() {
                return Err(Error::InvalidSpec("a stored S_i is not a subgroup".into()));
            }
        }
        let r_in_carriers = CosetSet::classify(ambient, self.r.clone())?;
        let expected: Vec<Tuple> = h
            .members()
            .iter()
            .filter(|m| (0..3).all(|i| s[i].contains(&[m[i]])))
            .cloned()
            .collect();
        if r_in_carriers.members() != expected.as_slice() {
            return Err(Error::InvalidSpec(
                "stored R differs from H ∩ S1×S2×S3".into(),
            ));
        }
        let s_groups: Vec<Arc<crate::group::FiniteGroup>> = (0..3)
            .map(|i| {
                let (g, _) = s[i].as_group(format!("S{}[{}]", i + 1, self.carrier_names[i]))?;
                Ok(Arc::new(g))
            })
            .collect::<Result<_>>()?;
        let r_s_members: Vec<Tuple> = r_in_carriers
            .members()
            .iter()
            .map(|m| {
                (0..3)
                    .map(|i| s[i].members().binary_search(&vec![m[i]]).expect("member"))
                    .collect()
            })
            .collect();
        let r = CosetSet::classify(ProductGroup::new(s_groups), r_s_members)?;
        let class = classify_almost_direct(&r)?;
        let stored_class = match self.class.as_str() {
            "adp" => AdpClass::Adp,
            "strict_adp" => AdpClass::StrictAdp,
            other => return Err(Error::InvalidSpec(format!("bad class {other:?}"))),
        };
        if class != stored_class {
            return Err(Error::InvalidSpec(
                "stored class does not match reclassification".into(),
            ));
        }
        Ok(AdpExtraction {
            carrier_names: self.carrier_names.clone(),
            h,
            s,
            r_in_carriers,
            r,
            class,
            witnesses: self.witnesses.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn t3_setup() -> (CosetTemplate, Instance) {
        (corpus::template_t(3), corpus::witness_t3())
    }

    #[test]
    fn pi_triple_is_a_23_anomaly() {
        let (t, i) = t3_setup();
        let bound = i.bind(&t).unwrap();
        let h = Assignment::from_pairs([(0, 1), (1, 1), (2, 1)]);
        let limits = Limits::default();
        assert!(is_anomaly(&bound, &h, 2, &limits).unwrap());
        // Weaker k also holds.
        assert!(is_anomaly(&bound, &h, 1, &limits).unwrap());
        // Anything extending is not an anomaly.
        let good = Assignment::from_pairs([(0, 1), (1, 1), (2, 0)]);
        assert!(!is_anomaly(&bound, &good, 2, &limits).unwrap());
    }

    #[test]
    fn search_finds_the_lex_first_witness() {
        let (t, i) = t3_setup();
        let w = find_kj_anomaly(&i, &t, 2, 3, &SearchOptions::default())
            .unwrap()
            .unwrap();
        // The first domain in lex order is {x1,x2,x3}; the first odd-parity
        // assignment on it is (1,1,pi).
        assert_eq!(w.h, Assignment::from_pairs([(0, 0), (1, 0), (2, 1)]));
        assert_eq!((w.k, w.j), (2, 3));
    }

    #[test]
    fn paper_example_instance_has_no_strict_anomaly() {
        let t = corpus::template_t(3);
        let i = corpus::instance_example3();
        assert!(find_kj_anomaly(&i, &t, 2, 3, &SearchOptions::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn shrink_keeps_minimal_witness_unchanged() {
        let (t, i) = t3_setup();
        let h = Assignment::from_pairs([(0, 1), (1, 1), (2, 1)]);
        let w = shrink_anomaly(&i, &t, &h, &Limits::default()).unwrap();
        assert_eq!((w.k, w.j), (2, 3));
        assert_eq!(w.h, h);
    }

    #[test]
    fn t4_witness_shrinks_to_a_34_anomaly() {
        let t = corpus::template_t(4);
        let i = corpus::witness_t4();
        let w = find_kj_anomaly(&i, &t, 2, 4, &SearchOptions::default())
            .unwrap()
            .unwrap();
        let minimal = shrink_anomaly(&i, &t, &w.h, &Limits::default()).unwrap();
        assert_eq!((minimal.k, minimal.j), (3, 4));
    }

    #[test]
    fn normalization_shifts_relations_to_subgroups() {
        let t = corpus::template_t(2);
        let i = Instance::new(
            vec!["a".into(), "b".into()],
            vec![Constraint {
                rel: "R_odd".into(),
                args: vec!["a".into(), "b".into()],
            }],
        );
        let (shifted, shift) = normalize_subgroup_instance(&i, &t, &Limits::default()).unwrap();
        assert_eq!(shifted.constraints[0].rel, "R_even");
        // First solution of R_odd(a,b) is (0,1); the shift is its inverse.
        assert_eq!(shift, Assignment::total(vec![0, 1]));
        // Already-subgroup instances with the identity solution stay put.
        let (t3, w) = t3_setup();
        let (same, s) = normalize_subgroup_instance(&w, &t3, &Limits::default()).unwrap();
        assert_eq!(same, w);
        assert_eq!(s, w.bind(&t3).unwrap().identity_presolution());
    }

    #[test]
    fn reduction_step_on_t4_witness() {
        let t = corpus::template_t(4);
        let i = corpus::witness_t4();
        let w = find_kj_anomaly(&i, &t, 3, 4, &SearchOptions::default())
            .unwrap()
            .unwrap();
        let (extended, reduced) = reduce_anomaly_step(&i, &t, &w, &Limits::default()).unwrap();
        assert_eq!((reduced.k, reduced.j), (2, 3));
        assert_eq!(extended.constraints.len(), i.constraints.len() + 1);
        let bound = extended.bind(&t).unwrap();
        assert!(is_subgroup_instance(&bound));
        assert!(is_anomaly(&bound, &reduced.h, 2, &Limits::default()).unwrap());
    }

    #[test]
    fn extendable_group_of_witness_is_even_parity() {
        let (t, i) = t3_setup();
        let bound = i.bind(&t).unwrap();
        let h =
            extendable_group(&bound, &[0, 1, 2], &Limits::default(), ExecMode::default()).unwrap();
        assert!(h.is_subgroup());
        assert_eq!(h.len(), 4);
        assert!(h.members().iter().all(|m| m.iter().sum::<usize>() % 2 == 0));
        // Empty domain: the trivial group on the empty tuple. Full domain:
        // the solution set itself.
        let trivial =
            extendable_group(&bound, &[], &Limits::default(), ExecMode::default()).unwrap();
        assert_eq!(trivial.members(), &[Vec::<usize>::new()]);
        assert!(trivial.is_subgroup());
        let full = extendable_group(
            &bound,
            &[0, 1, 2, 3, 4],
            &Limits::default(),
            ExecMode::default(),
        )
        .unwrap();
        assert_eq!(full.len(), 4);
    }

    #[test]
    fn solvable_binary_template_instances_have_no_anomalies() {
        // A solvable chain over the binary parity template: the template has
        // a majority polymorphism, so no (2,j)-anomaly exists.
        let t = corpus::template_t(2);
        let i = Instance::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                Constraint {
                    rel: "R_odd".into(),
                    args: vec!["a".into(), "b".into()],
                },
                Constraint {
                    rel: "R_odd".into(),
                    args: vec!["b".into(), "c".into()],
                },
                Constraint {
                    rel: "R_even".into(),
                    args: vec!["c".into(), "d".into()],
                },
            ],
        );
        assert!(solve(&i.bind(&t).unwrap(), &Limits::default())
            .unwrap()
            .is_some());
        for j in 3..=4 {
            assert!(find_kj_anomaly(&i, &t, 2, j, &SearchOptions::default())
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn shrink_strictly_reduces_when_a_smaller_restriction_fails() {
        // (1,1,pi,1) on {x1,x2,x3,z} is a (2,4)-anomaly of the ternary
        // witness whose minimal non-extending subset is {x1,x2,x3}.
        let (t, i) = t3_setup();
        let h = Assignment::from_pairs([(0, 0), (1, 0), (2, 1), (4, 0)]);
        let bound = i.bind(&t).unwrap();
        assert!(is_anomaly(&bound, &h, 2, &Limits::default()).unwrap());
        let minimal = shrink_anomaly(&i, &t, &h, &Limits::default()).unwrap();
        assert_eq!((minimal.k, minimal.j), (2, 3));
        assert_eq!(minimal.h.domain(), vec![0, 1, 2]);
    }

    #[test]
    fn normalization_requires_solvability() {
        let t = corpus::template_t(3);
        let i = corpus::instance_example3();
        assert!(matches!(
            normalize_subgroup_instance(&i, &t, &Limits::default()),
            Err(Error::Unsolvable)
        ));
    }

    #[test]
    fn reduction_rejects_non_subgroup_instances() {
        let t = corpus::template_t(3);
        let i = corpus::instance_example3();
        let witness = AnomalyWitness {
            instance: i.clone(),
            h: Assignment::from_pairs([(0, 1), (1, 1), (2, 1)]),
            k: 2,
            j: 3,
        };
        assert!(matches!(
            reduce_anomaly_step(&i, &t, &witness, &Limits::default()),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn extraction_from_witness_is_strict_even_parity() {
        let (t, i) = t3_setup();
        let h = Assignment::from_pairs([(0, 1), (1, 1), (2, 1)]);
        let adp =
            build_adp_from_anomaly(&i, &t, &h, &Limits::default(), ExecMode::default()).unwrap();
        for s in &adp.s {
            assert_eq!(s.len(), 2);
        }
        assert_eq!(adp.r_in_carriers.len(), 4);
        assert_eq!(adp.class, AdpClass::StrictAdp);
        assert!(!adp.h.contains(&[1, 1, 1]));
        assert_eq!(adp.first_nonmember_shift(), vec![0, 0, 1]);
        assert_eq!(adp.cosets_of_r().len(), 2);
    }

    #[test]
    fn pipeline_on_t3_witness() {
        let (t, i) = t3_setup();
        let outcome = helly_pipeline(&t, &i, &PipelineOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(outcome.found_j, 3);
        assert_eq!(outcome.shrunk, (2, 3));
        assert_eq!(outcome.reductions, 0);
        assert_eq!(outcome.adp.class, AdpClass::StrictAdp);
    }

    #[test]
    fn pipeline_on_t4_witness_exercises_reduction() {
        let t = corpus::template_t(4);
        let i = corpus::witness_t4();
        let outcome = helly_pipeline(&t, &i, &PipelineOptions::default())
            .unwrap()
            .unwrap();
        assert!(outcome.reductions >= 1);
        assert_eq!(outcome.adp.class, AdpClass::StrictAdp);
        assert_eq!(outcome.adp.r_in_carriers.len(), 4);
        // Final witness re-verifies by brute force.
        let bound = outcome.final_instance.bind(&t).unwrap();
        assert!(is_anomaly(&bound, &outcome.final_h, 2, &Limits::default()).unwrap());
    }

    #[test]
    fn pipeline_on_t2_finds_nothing() {
        let t = corpus::template_t(2);
        let i = corpus::instance_t2_cycle();
        assert!(helly_pipeline(&t, &i, &PipelineOptions::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn adp_json_round_trip() {
        let (t, i) = t3_setup();
        let h = Assignment::from_pairs([(0, 1), (1, 1), (2, 1)]);
        let adp =
            build_adp_from_anomaly(&i, &t, &h, &Limits::default(), ExecMode::default()).unwrap();
        let json = serde_json::to_string(&AdpJson::from_extraction(&adp)).unwrap();
        let parsed: AdpJson = serde_json::from_str(&json).unwrap();
        let rebuilt = parsed.build().unwrap();
        assert_eq!(rebuilt.r_in_carriers.members(), adp.r_in_carriers.members());
        assert_eq!(rebuilt.class, adp.class);
    }
}
