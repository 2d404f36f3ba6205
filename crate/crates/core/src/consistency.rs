//! The (k,l)-consistency algorithm with a deterministic, size-only schedule.
//!
//! Families H_X of partial solutions are kept for every nonempty element
//! subset X of size at most k. One stage filters a single H_X against a
//! window Y: a member survives iff it extends to a partial solution on Y all
//! of whose at-most-k restrictions lie in the current families. Passes over
//! the fixed schedule repeat until one removes nothing; the run accepts iff
//! the union of the families is nonempty. The schedule depends only on the
//! element count, which is what makes the algorithm equivariant under the
//! pre-solution action; equivariance is checked by running two instances in
//! lockstep and comparing families stage by stage under the direct image.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::Arc;

use itertools::structs::Combinations;
use itertools::Itertools;

use crate::action::act_instance;
use crate::error::{Error, Result};
use crate::instance::{Assignment, Bound};
use crate::template::Relation;

/// The fixed enumeration of (X, Y) pairs: Y ranges over all subsets of size
/// min(l, element_count) in lexicographic order, and for each Y, X ranges
/// over the nonempty subsets of Y of size at most k in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub element_count: usize,
    pub k: usize,
    pub l: usize,
}

impl Schedule {
    pub fn new(element_count: usize, k: usize, l: usize) -> Result<Schedule> {
        if k == 0 || k > l {
            return Err(Error::InvalidParams(format!(
                "need 1 <= k <= l, got ({k},{l})"
            )));
        }
        Ok(Schedule {
            element_count,
            k,
            l,
        })
    }

    pub fn window_size(&self) -> usize {
        self.l.min(self.element_count)
    }

    pub fn pairs(&self) -> SchedulePairs {
        let m = self.window_size();
        SchedulePairs {
            k: self.k,
            windows: (0..self.element_count).combinations(m),
            current_window: Vec::new(),
            current: Vec::new(),
            position: 0,
        }
    }
}

/// Nonempty subsets of `y` of size at most `k`, in lexicographic order.
fn subsets_up_to(y: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn rec(y: &[usize], from: usize, k: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in from..y.len() {
            path.push(y[i]);
            out.push(path.clone());
            if path.len() < k {
                rec(y, i + 1, k, path, out);
            }
            path.pop();
        }
    }
    rec(y, 0, k, &mut path, &mut out);
    out
}

pub struct SchedulePairs {
    k: usize,
    windows: Combinations<Range<usize>>,
    current_window: Vec<usize>,
    current: Vec<Vec<usize>>,
    position: usize,
}

impl Iterator for SchedulePairs {
    /// (X, Y)
    type Item = (Vec<usize>, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.position < self.current.len() {
                let x = self.current[self.position].clone();
                self.position += 1;
                return Some((x, self.current_window.clone()));
            }
            let y = self.windows.next()?;
            self.current = subsets_up_to(&y, self.k);
            self.current_window = y;
            self.position = 0;
        }
    }
}

/// Families H_X keyed by sorted element positions; members are value tuples
/// aligned with X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Families {
    pub k: usize,
    map: BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>>,
}

impl Families {
    pub fn keys(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.map.keys()
    }

    pub fn family(&self, x: &[usize]) -> Option<&BTreeSet<Vec<usize>>> {
        self.map.get(x)
    }

    pub fn contains(&self, x: &[usize], tuple: &[usize]) -> bool {
        self.map.get(x).map(|s| s.contains(tuple)).unwrap_or(false)
    }

    pub fn total(&self) -> usize {
        self.map.values().map(|s| s.len()).sum()
    }

    pub fn all_nonempty(&self) -> bool {
        self.map.values().all(|s| !s.is_empty())
    }

    pub fn union_nonempty(&self) -> bool {
        self.map.values().any(|s| !s.is_empty())
    }

    pub fn sizes(&self) -> BTreeMap<Vec<usize>, usize> {
        self.map.iter().map(|(x, s)| (x.clone(), s.len())).collect()
    }
}

/// Everything a refinement stage needs, detached from the template's
/// lifetime.
pub struct RunContext {
    pub element_count: usize,
    pub orders: Vec<usize>,
    constraints: Vec<(Vec<usize>, Arc<Relation>)>,
}

impl RunContext {
    pub fn new(bound: &Bound) -> RunContext {
        RunContext {
            element_count: bound.element_count(),
            orders: (0..bound.element_count())
                .map(|e| bound.carrier_order(e))
                .collect(),
            constraints: bound
                .constraints
                .iter()
                .map(|c| (c.args.clone(), c.rel.clone()))
                .collect(),
        }
    }

    /// Constraints whose arguments all lie in the sorted set `within`.
    fn constraints_inside(&self, within: &[usize]) -> Vec<&(Vec<usize>, Arc<Relation>)> {
        self.constraints
            .iter()
            .filter(|(args, _)| args.iter().all(|a| within.binary_search(a).is_ok()))
            .collect()
    }

    fn satisfied(
        &self,
        constraint: &(Vec<usize>, Arc<Relation>),
        value_at: &BTreeMap<usize, usize>,
    ) -> bool {
        let tuple: Vec<usize> = constraint.0.iter().map(|a| value_at[a]).collect();
        constraint.1.coset.contains(&tuple)
    }
}

/// All partial solutions with domain exactly X, for every nonempty X of
/// size at most k.
pub fn init_families(ctx: &RunContext, k: usize) -> Families {
    let mut map = BTreeMap::new();
    let n = ctx.element_count;
    for size in 1..=k.min(n) {
        for x in (0..n).combinations(size) {
            let inside = ctx.constraints_inside(&x);
            let mut set = BTreeSet::new();
            let orders: Vec<usize> = x.iter().map(|&e| ctx.orders[e]).collect();
            let mut values = vec![0usize; size];
            loop {
                let value_at: BTreeMap<usize, usize> =
                    x.iter().copied().zip(values.iter().copied()).collect();
                if inside.iter().all(|c| ctx.satisfied(c, &value_at)) {
                    set.insert(values.clone());
                }
                let mut pos = size;
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
            map.insert(x, set);
        }
    }
    Families { k, map }
}

/// One stage: filter H_X against the window Y. Returns the number of
/// members removed. Lookup semantics reference the families as they were
/// before this update.
pub fn refine_step(ctx: &RunContext, families: &mut Families, x: &[usize], y: &[usize]) -> usize {
    let Some(current) = families.map.get(x) else {
        return 0;
    };
    if current.is_empty() {
        return 0;
    }
    let inside = ctx.constraints_inside(y);
    let rest: Vec<usize> = y
        .iter()
        .copied()
        .filter(|e| x.binary_search(e).is_err())
        .collect();
    let rest_orders: Vec<usize> = rest.iter().map(|&e| ctx.orders[e]).collect();
    let subsets = subsets_up_to(y, families.k);
    let keep: BTreeSet<Vec<usize>> = current
        .iter()
        .filter(|member| {
            let mut value_at: BTreeMap<usize, usize> =
                x.iter().copied().zip(member.iter().copied()).collect();
            let mut values = vec![0usize; rest.len()];
            loop {
                for (i, &e) in rest.iter().enumerate() {
                    value_at.insert(e, values[i]);
                }
                let extension_ok = inside.iter().all(|c| ctx.satisfied(c, &value_at))
                    && subsets.iter().all(|x_prime| {
                        let tuple: Vec<usize> = x_prime.iter().map(|e| value_at[e]).collect();
                        families.contains(x_prime, &tuple)
                    });
                if extension_ok {
                    return true;
                }
                if rest.is_empty() {
                    return false;
                }
                let mut pos = rest.len();
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    values[pos] += 1;
                    if values[pos] < rest_orders[pos] {
                        break;
                    }
                    values[pos] = 0;
                }
                if values.iter().all(|&v| v == 0) {
                    return false;
                }
            }
        })
        .cloned()
        .collect();
    let removed = current.len() - keep.len();
    families.map.insert(x.to_vec(), keep);
    removed
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageEvent {
    pub pass: u64,
    pub stage: u64,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub removed: usize,
    /// Size of H_X after this update.
    pub family_size: usize,
    /// Total size of all families after this update.
    pub total: usize,
}

/// Stepped execution of the algorithm; `step` runs one stage and returns
/// `None` once stabilized (a full pass with no removals) or short-circuited
/// on global emptiness.
pub struct ConsistencyRun {
    ctx: RunContext,
    schedule: Schedule,
    pub families: Families,
    pairs: SchedulePairs,
    pass: u64,
    stage: u64,
    pass_removed: u64,
    removed_total: u64,
    finished: bool,
    first_empty_stage: Option<u64>,
}

impl ConsistencyRun {
    pub fn new(bound: &Bound, k: usize, l: usize) -> Result<ConsistencyRun> {
        let schedule = Schedule::new(bound.element_count(), k, l)?;
        let ctx = RunContext::new(bound);
        let families = init_families(&ctx, k);
        let mut run = ConsistencyRun {
            ctx,
            schedule,
            families,
            pairs: schedule.pairs(),
            pass: 1,
            stage: 0,
            pass_removed: 0,
            removed_total: 0,
            finished: false,
            first_empty_stage: None,
        };
        if run.schedule.element_count == 0 || run.families.total() == 0 {
            // Nothing to refine: empty instances accept vacuously, and an
            // initially empty family set rejects at stage 0.
            run.finished = true;
            if run.schedule.element_count > 0 {
                run.first_empty_stage = Some(0);
            }
        }
        Ok(run)
    }

    pub fn step(&mut self) -> Option<StageEvent> {
        if self.finished {
            return None;
        }
        let (x, y) = loop {
            match self.pairs.next() {
                Some(pair) => break pair,
                None => {
                    if self.pass_removed == 0 {
                        self.finished = true;
                        return None;
                    }
                    self.pass += 1;
                    self.pass_removed = 0;
                    self.pairs = self.schedule.pairs();
                }
            }
        };
        self.stage += 1;
        let removed = refine_step(&self.ctx, &mut self.families, &x, &y);
        self.pass_removed += removed as u64;
        self.removed_total += removed as u64;
        let family_size = self.families.family(&x).map(|s| s.len()).unwrap_or(0);
        let total = self.families.total();
        if total == 0 {
            self.finished = true;
            self.first_empty_stage.get_or_insert(self.stage);
        }
        Some(StageEvent {
            pass: self.pass,
            stage: self.stage,
            x,
            y,
            removed,
            family_size,
            total,
        })
    }

    pub fn run_to_fixpoint(&mut self) -> Outcome {
        while self.step().is_some() {}
        self.outcome()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn outcome(&self) -> Outcome {
        let union_nonempty = self.families.union_nonempty();
        let all_nonempty = self.families.all_nonempty();
        let accept = if self.schedule.element_count == 0 {
            true
        } else {
            union_nonempty
        };
        Outcome {
            accept,
            stages: self.stage,
            passes: self.pass,
            removed: self.removed_total,
            first_empty_stage: self.first_empty_stage,
            all_nonempty,
            union_nonempty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub accept: bool,
    pub stages: u64,
    pub passes: u64,
    pub removed: u64,
    pub first_empty_stage: Option<u64>,
    /// Both verdict computations; equal at every fixpoint with elements.
    pub all_nonempty: bool,
    pub union_nonempty: bool,
}

/// Run to the fixpoint and return the verdict together with the final
/// families.
pub fn run_kl_consistency(bound: &Bound, k: usize, l: usize) -> Result<(Outcome, Families)> {
    let mut run = ConsistencyRun::new(bound, k, l)?;
    let outcome = run.run_to_fixpoint();
    Ok((outcome, run.families))
}

/// Direct image of families under a total pre-solution: each member tuple
/// is multiplied pointwise in its elements' carriers.
pub fn act_families(bound: &Bound, families: &Families, s: &Assignment) -> Families {
    let map = families
        .map
        .iter()
        .map(|(x, set)| {
            let moved = set
                .iter()
                .map(|tuple| {
                    x.iter()
                        .zip(tuple)
                        .map(|(&e, &v)| {
                            bound
                                .template
                                .carrier(bound.carriers[e])
                                .op(v, s.get(e).expect("total pre-solution"))
                        })
                        .collect()
                })
                .collect();
            (x.clone(), moved)
        })
        .collect();
    Families { k: families.k, map }
}

/// Lockstep equivariance check: run the algorithm on I and on I·s and
/// compare families after every stage under the direct image.
pub fn check_equivariance(bound: &Bound, s: &Assignment, k: usize, l: usize) -> Result<bool> {
    let moved = act_instance(bound, s)?;
    let moved_bound = moved.bind(bound.template)?;
    let mut run_base = ConsistencyRun::new(bound, k, l)?;
    let mut run_moved = ConsistencyRun::new(&moved_bound, k, l)?;
    if act_families(bound, &run_base.families, s) != run_moved.families {
        return Ok(false);
    }
    loop {
        let e1 = run_base.step();
        let e2 = run_moved.step();
        match (e1, e2) {
            (None, None) => break,
            (Some(a), Some(b)) => {
                if a.x != b.x || a.y != b.y || a.removed != b.removed {
                    return Ok(false);
                }
                if act_families(bound, &run_base.families, s) != run_moved.families {
                    return Ok(false);
                }
            }
            _ => return Ok(false),
        }
    }
    Ok(run_base.outcome().accept == run_moved.outcome().accept)
}
