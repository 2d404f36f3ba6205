//! The n-torus instance family over an almost-direct product R ≤ S1×S2×S3.
//!
//! A torus has 3n² elements a_ij, b_ij, c_ij and 2n² ternary constraints,
//! one pair per grid cell (indices mod n):
//!
//!   R_ij(a_ij, b_ij, c_ij)   and   R'_ij(a_i(j+1), b_(i+1)j, c_ij).
//!
//! With every slot holding R the instance is a solvable subgroup instance.
//! Replacing R by any other coset of R in exactly one slot makes it
//! unsolvable — certified here both by the complete solver at small n and by
//! the telescoping-product argument — yet local consistency still accepts
//! for small (k,l), which the fooling experiment demonstrates end to end.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adp::{quotient_adp, AdpQuotient};
use crate::anomaly::AdpExtraction;
use crate::consistency::run_kl_consistency;
use crate::coset::CosetSet;
use crate::error::{Error, Result};
use crate::exec::{map_collect, ExecMode};
use crate::group::{ProductGroup, Tuple};
use crate::instance::{Assignment, Constraint, Instance};
use crate::solver::{solve, Limits};
use crate::template::CosetTemplate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotKind {
    R,
    Rp,
}

/// A constraint slot of the torus; ordering is (kind, i, j) with R before
/// R'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub kind: SlotKind,
    pub i: usize,
    pub j: usize,
}

impl Slot {
    pub fn new(kind: SlotKind, i: usize, j: usize) -> Slot {
        Slot { kind, i, j }
    }
}

/// All 2n² slots in (kind, i, j) order.
pub fn slots(n: usize) -> Vec<Slot> {
    let mut out = Vec::with_capacity(2 * n * n);
    for kind in [SlotKind::R, SlotKind::Rp] {
        for i in 0..n {
            for j in 0..n {
                out.push(Slot::new(kind, i, j));
            }
        }
    }
    out
}

/// The three slots sharing an element with `slot`.
pub fn neighbors(n: usize, slot: Slot) -> [Slot; 3] {
    let (i, j) = (slot.i, slot.j);
    let dec = |x: usize| (x + n - 1) % n;
    let inc = |x: usize| (x + 1) % n;
    match slot.kind {
        // a_ij is shared with R'_i(j-1), b_ij with R'_(i-1)j, c_ij with R'_ij.
        SlotKind::R => [
            Slot::new(SlotKind::Rp, i, dec(j)),
            Slot::new(SlotKind::Rp, dec(i), j),
            Slot::new(SlotKind::Rp, i, j),
        ],
        // a_i(j+1) is shared with R_i(j+1), b_(i+1)j with R_(i+1)j, c_ij with R_ij.
        SlotKind::Rp => [
            Slot::new(SlotKind::R, i, inc(j)),
            Slot::new(SlotKind::R, inc(i), j),
            Slot::new(SlotKind::R, i, j),
        ],
    }
}

/// Largest connected component of the neighborhood graph after removing
/// `removed`.
pub fn largest_component_after_removal(n: usize, removed: &BTreeSet<Slot>) -> usize {
    let all = slots(n);
    let mut visited: BTreeSet<Slot> = removed.clone();
    let mut best = 0;
    for &start in &all {
        if visited.contains(&start) {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        visited.insert(start);
        while let Some(s) = queue.pop_front() {
            size += 1;
            for nb in neighbors(n, s) {
                if visited.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        best = best.max(size);
    }
    best
}

/// An n-torus over a fixed product: every slot holds a coset of R, by
/// default R itself. Twisted slots are stored by their coset representative.
#[derive(Debug, Clone)]
pub struct TorusSpec {
    pub n: usize,
    pub adp: AdpExtraction,
    twists: BTreeMap<Slot, Tuple>,
}

impl TorusSpec {
    pub fn all_r(n: usize, adp: AdpExtraction) -> TorusSpec {
        assert!(n >= 2, "torus needs n >= 2");
        TorusSpec {
            n,
            adp,
            twists: BTreeMap::new(),
        }
    }

    /// The coset currently assigned to `slot`, in carrier coordinates.
    pub fn coset_at(&self, slot: Slot) -> Result<CosetSet> {
        match self.twists.get(&slot) {
            None => Ok(self.adp.r_in_carriers.clone()),
            Some(rep) => self.adp.r_in_carriers.translate(rep),
        }
    }

    pub fn twisted_slots(&self) -> Vec<(Slot, Tuple)> {
        self.twists.iter().map(|(s, r)| (*s, r.clone())).collect()
    }

    /// Right-translate the slot's coset by `shift` (an element of S1×S2×S3
    /// in carrier coordinates). Twisting back onto R clears the slot.
    pub fn twist(&self, slot: Slot, shift: &[usize]) -> Result<TorusSpec> {
        if slot.i >= self.n || slot.j >= self.n {
            return Err(Error::InvalidSpec(format!(
                "slot {slot:?} out of range for n={}",
                self.n
            )));
        }
        if self.adp.tuple_to_s(shift).is_none() {
            return Err(Error::InvalidSpec("twist must lie in S1×S2×S3".into()));
        }
        let current = self.coset_at(slot)?;
        let moved = current.translate(shift)?;
        let mut twists = self.twists.clone();
        if moved.members() == self.adp.r_in_carriers.members() {
            twists.remove(&slot);
        } else {
            twists.insert(slot, moved.representative().clone());
        }
        Ok(TorusSpec {
            n: self.n,
            adp: self.adp.clone(),
            twists,
        })
    }

    /// Element names of the triple at a slot, honoring the wraparound.
    pub fn slot_elements(&self, slot: Slot) -> [String; 3] {
        let n = self.n;
        let (i, j) = (slot.i, slot.j);
        match slot.kind {
            SlotKind::R => [
                format!("a{}_{}", i, j),
                format!("b{}_{}", i, j),
                format!("c{}_{}", i, j),
            ],
            SlotKind::Rp => [
                format!("a{}_{}", i, (j + 1) % n),
                format!("b{}_{}", (i + 1) % n, j),
                format!("c{}_{}", i, j),
            ],
        }
    }
}

/// Resolve the product's carriers against the template by label and table.
fn carrier_signature(spec: &TorusSpec, t: &CosetTemplate) -> Result<Vec<usize>> {
    let ambient = spec.adp.r_in_carriers.ambient().clone();
    let mut signature = Vec::with_capacity(3);
    for coord in 0..3 {
        let label = &spec.adp.carrier_names[coord];
        let ix = t.carrier_named(label)?;
        if t.carrier(ix).as_ref() != ambient.factor(coord).as_ref() {
            return Err(Error::InvalidSpec(format!(
                "carrier {label:?} differs between template and product"
            )));
        }
        signature.push(ix);
    }
    Ok(signature)
}

/// Materialize the torus as an instance over `t`, interning each slot's
/// coset as a template relation. Elements come in a-block, b-block, c-block
/// order, row-major; constraints follow the slot order.
pub fn build_torus(spec: &TorusSpec, t: &CosetTemplate) -> Result<Instance> {
    if spec.n < 2 {
        return Err(Error::InvalidSpec("torus needs n >= 2".into()));
    }
    let signature = carrier_signature(spec, t)?;
    let n = spec.n;
    let mut elements = Vec::with_capacity(3 * n * n);
    for letter in ["a", "b", "c"] {
        for i in 0..n {
            for j in 0..n {
                elements.push(format!("{letter}{i}_{j}"));
            }
        }
    }
    let mut constraints = Vec::with_capacity(2 * n * n);
    for slot in slots(n) {
        let coset = spec.coset_at(slot)?;
        let rel = t.intern_coset("R_adp", signature.clone(), coset)?;
        let args = spec.slot_elements(slot);
        constraints.push(Constraint {
            rel,
            args: args.to_vec(),
        });
    }
    Ok(Instance {
        elements,
        constraints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certificate {
    /// All slots hold R except exactly one holding a different coset of R:
    /// unsolvable by the telescoping-product argument.
    Unsolvable,
    /// The single-twist premises do not apply.
    NotApplicable,
}

/// Decide whether the single-twist unsolvability certificate applies.
pub fn single_twist_certificate(spec: &TorusSpec) -> Certificate {
    if spec.twists.len() == 1 {
        Certificate::Unsolvable
    } else {
        Certificate::NotApplicable
    }
}

/// The telescoping product of a solution `h` of the torus minus the
/// constraint at `omitted`: the product over same-class slots of the
/// inverted constraint triples, times the product over the other class, in
/// slot order, inside the carrier product. The omitted slot's class is
/// treated as negative.
pub fn telescoping_product(
    spec: &TorusSpec,
    t: &CosetTemplate,
    h: &Assignment,
    omitted: Slot,
) -> Result<Tuple> {
    let instance = build_torus(spec, t)?;
    let omitted_index = slots(spec.n)
        .iter()
        .position(|&s| s == omitted)
        .ok_or_else(|| Error::PreconditionViolated("omitted slot out of range".into()))?;
    let mut punctured = instance.clone();
    punctured.constraints.remove(omitted_index);
    let bound = punctured.bind(t)?;
    if !h.is_total(bound.element_count()) || !bound.is_partial_solution(h) {
        return Err(Error::PreconditionViolated(
            "assignment is not a solution of the punctured torus".into(),
        ));
    }
    let ambient: ProductGroup = spec.adp.r_in_carriers.ambient().clone();
    let triple = |slot: Slot| -> Result<Tuple> {
        let names = spec.slot_elements(slot);
        let tuple: Tuple = names
            .iter()
            .map(|name| {
                instance
                    .element_position(name)
                    .map(|p| h.get(p).expect("total"))
            })
            .collect::<Result<_>>()?;
        if spec.adp.tuple_to_s(&tuple).is_none() {
            return Err(Error::PreconditionViolated(
                "solution leaves the S-product on some constraint".into(),
            ));
        }
        Ok(tuple)
    };
    let negative_kind = omitted.kind;
    let mut acc = ambient.identity();
    for slot in slots(spec.n) {
        if slot.kind != negative_kind || slot == omitted {
            continue;
        }
        acc = ambient.op(&acc, &ambient.inv(&triple(slot)?));
    }
    for slot in slots(spec.n) {
        if slot.kind == negative_kind {
            continue;
        }
        acc = ambient.op(&acc, &triple(slot)?);
    }
    Ok(acc)
}

/// Quotient of R by its componentwise kernels, for comparing telescoping
/// images. Operates on R over the S-groups.
pub fn r_quotient(adp: &AdpExtraction) -> Result<AdpQuotient> {
    quotient_adp(&adp.r)
}

/// Image of a carrier-coordinate S-product tuple under the quotient maps.
pub fn quotient_image(adp: &AdpExtraction, q: &AdpQuotient, tuple: &[usize]) -> Result<Tuple> {
    let s_tuple = adp
        .tuple_to_s(tuple)
        .ok_or_else(|| Error::PreconditionViolated("tuple outside the S-product".into()))?;
    Ok(q.apply(&s_tuple))
}

/// Every coset of R contains elements supported on a single coordinate:
/// (t1,1,1), (1,t2,1), (1,1,t3). Returns them in carrier coordinates.
pub fn single_coordinate_witnesses(adp: &AdpExtraction, coset: &CosetSet) -> Result<[Tuple; 3]> {
    if coset.direction()?.members() != adp.r_in_carriers.direction()?.members() {
        return Err(Error::PreconditionViolated(
            "input is not a coset of R".into(),
        ));
    }
    let identity = coset.ambient().identity();
    let mut found: [Option<Tuple>; 3] = [None, None, None];
    for m in coset.members() {
        for coord in 0..3 {
            if found[coord].is_none() && (0..3).all(|c| c == coord || m[c] == identity[c]) {
                found[coord] = Some(m.clone());
            }
        }
    }
    match found {
        [Some(a), Some(b), Some(c)] => Ok([a, b, c]),
        _ => Err(Error::AssertionFailure(
            "coset lacks a single-coordinate element".into(),
        )),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub variant: String,
    pub solver: String,
    pub consistency: String,
    pub certificate: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub k: usize,
    pub l: usize,
    pub records: Vec<ExperimentRecord>,
    /// Least n at which consistency accepts the unsolvable twisted torus.
    pub minimal_fooling_n: Option<usize>,
}

fn solver_verdict(instance: &Instance, t: &CosetTemplate, limits: &Limits) -> String {
    match instance.bind(t).and_then(|b| solve(&b, limits)) {
        Ok(Some(_)) => "sat".into(),
        Ok(None) => "unsat".into(),
        Err(Error::BudgetExceeded(_)) => "budget".into(),
        Err(e) => format!("error: {e}"),
    }
}

/// For each n: build the all-R torus and the single-twist variant (slot
/// (R,0,0) shifted by the least non-member of R), run the solver, the
/// (k,l)-consistency algorithm, and the certificate, and report the minimal
/// fooling n.
pub fn fooling_experiment(
    t: &CosetTemplate,
    adp: &AdpExtraction,
    k: usize,
    l: usize,
    n_range: impl IntoIterator<Item = usize>,
    limits: &Limits,
    mode: ExecMode,
) -> Result<ExperimentReport> {
    let ns: Vec<usize> = n_range.into_iter().collect();
    let per_n = map_collect(mode, ns, |n| -> Result<Vec<ExperimentRecord>> {
        let mut records = Vec::new();
        let all_r = TorusSpec::all_r(n, adp.clone());
        let twisted = all_r.twist(Slot::new(SlotKind::R, 0, 0), &adp.first_nonmember_shift())?;
        for (variant, spec) in [("all_r", &all_r), ("twisted", &twisted)] {
            let started = Instant::now();
            let instance = build_torus(spec, t)?;
            let solver = solver_verdict(&instance, t, limits);
            let bound = instance.bind(t)?;
            let (outcome, _) = run_kl_consistency(&bound, k, l)?;
            let consistency = if outcome.accept { "accept" } else { "reject" };
            let certificate = match single_twist_certificate(spec) {
                Certificate::Unsolvable => "unsolvable",
                Certificate::NotApplicable => "not_applicable",
            };
            records.push(ExperimentRecord {
                n,
                variant: variant.to_string(),
                solver,
                consistency: consistency.to_string(),
                certificate: certificate.to_string(),
                seconds: started.elapsed().as_secs_f64(),
            });
        }
        Ok(records)
    });
    let mut records = Vec::new();
    for r in per_n {
        records.extend(r?);
    }
    let minimal_fooling_n = records
        .iter()
        .filter(|r| {
            r.variant == "twisted" && r.consistency == "accept" && r.certificate == "unsolvable"
        })
        .map(|r| r.n)
        .min();
    Ok(ExperimentReport {
        k,
        l,
        records,
        minimal_fooling_n,
    })
}

// --- spec file format ---

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistJson {
    pub slot: (String, usize, usize),
    pub pi: Tuple,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorusSpecJson {
    pub n: usize,
    /// Reference to the product: a corpus name or a file path, resolved by
    /// the caller.
    pub adp: String,
    pub twists: Vec<TwistJson>,
}

impl TorusSpecJson {
    pub fn build(&self, adp: AdpExtraction) -> Result<TorusSpec> {
        if self.n < 2 {
            return Err(Error::InvalidSpec("torus needs n >= 2".into()));
        }
        let mut spec = TorusSpec::all_r(self.n, adp);
        for twist in &self.twists {
            let kind = match twist.slot.0.as_str() {
                "R" => SlotKind::R,
                "Rp" => SlotKind::Rp,
                other => return Err(Error::InvalidSpec(format!("bad slot kind {other:?}"))),
            };
            spec = spec.twist(Slot::new(kind, twist.slot.1, twist.slot.2), &twist.pi)?;
        }
        Ok(spec)
    }

    pub fn from_spec(spec: &TorusSpec, adp_ref: impl Into<String>) -> TorusSpecJson {
        TorusSpecJson {
            n: spec.n,
            adp: adp_ref.into(),
            twists: spec
                .twisted_slots()
                .into_iter()
                .map(|(slot, rep)| TwistJson {
                    slot: (
                        match slot.kind {
                            SlotKind::R => "R".into(),
                            SlotKind::Rp => "Rp".into(),
                        },
                        slot.i,
                        slot.j,
                    ),
                    pi: rep,
                })
                .collect(),
        }
    }
}
