//! Complete backtracking solver, used as the ground-truth oracle.
//!
//! Depth-first over the instance's element order, values in index order, so
//! the first solution is the lexicographically least one. Every constraint
//! is checked as soon as its last argument is assigned.

use crate::error::{Error, Result};
use crate::exec::{map_collect, ExecMode};
use crate::instance::{Assignment, Bound};

/// Node and enumeration caps. `max_nodes` counts value placements; in
/// `all_solutions` it applies per top-level branch so the sequential and
/// parallel paths behave identically.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_nodes: u64,
    pub max_solutions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: 1_000_000,
            max_solutions: 1_000_000,
        }
    }
}

impl Limits {
    pub fn with_nodes(max_nodes: u64) -> Limits {
        Limits {
            max_nodes,
            ..Limits::default()
        }
    }
}

/// All solutions of an instance, plus whether the tuple view passes the
/// coset classification (vacuously true when empty).
#[derive(Debug, Clone)]
pub struct SolutionSet {
    pub solutions: Vec<Assignment>,
    pub coset_certified: bool,
}

struct Search<'a, 'b> {
    bound: &'b Bound<'a>,
    /// Constraints to check once element e is assigned (their last argument).
    checks_at: Vec<Vec<usize>>,
    fixed: Assignment,
    nodes: u64,
    max_nodes: u64,
}

enum Outcome {
    FirstOnly(Option<Assignment>),
    All(Vec<Assignment>),
}

impl<'a, 'b> Search<'a, 'b> {
    fn new(bound: &'b Bound<'a>, fixed: &Assignment, max_nodes: u64) -> Search<'a, 'b> {
        let mut checks_at = vec![Vec::new(); bound.element_count()];
        for (ci, c) in bound.constraints.iter().enumerate() {
            if let Some(&last) = c.args.iter().max() {
                checks_at[last].push(ci);
            }
        }
        Search {
            bound,
            checks_at,
            fixed: fixed.clone(),
            nodes: 0,
            max_nodes,
        }
    }

    fn consistent_at(&self, h: &Assignment, e: usize) -> bool {
        self.checks_at[e].iter().all(|&ci| {
            self.bound
                .satisfies(&self.bound.constraints[ci], h)
                .unwrap_or(true)
        })
    }

    fn dfs(&mut self, h: &mut Assignment, e: usize, collect: &mut Outcome) -> Result<bool> {
        if e == self.bound.element_count() {
            match collect {
                Outcome::FirstOnly(slot) => {
                    *slot = Some(h.clone());
                    return Ok(true);
                }
                Outcome::All(v) => {
                    v.push(h.clone());
                    return Ok(false);
                }
            }
        }
        let candidates: Vec<usize> = match self.fixed.get(e) {
            Some(v) => vec![v],
            None => (0..self.bound.carrier_order(e)).collect(),
        };
        for v in candidates {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Err(Error::BudgetExceeded(self.max_nodes));
            }
            h.set(e, v);
            if self.consistent_at(h, e) && self.dfs(h, e + 1, collect)? {
                return Ok(true);
            }
            h.unset(e);
        }
        Ok(false)
    }
}

/// First solution in (element order, value index) order, or `None`.
pub fn solve(bound: &Bound, limits: &Limits) -> Result<Option<Assignment>> {
    solve_with_fixed(bound, &Assignment::empty(), limits)
}

/// First solution agreeing with `fixed` on its domain, or `None`.
pub fn solve_with_fixed(
    bound: &Bound,
    fixed: &Assignment,
    limits: &Limits,
) -> Result<Option<Assignment>> {
    bound.check_assignment(fixed)?;
    let mut search = Search::new(bound, fixed, limits.max_nodes);
    let mut outcome = Outcome::FirstOnly(None);
    let mut h = Assignment::empty();
    search.dfs(&mut h, 0, &mut outcome)?;
    match outcome {
        Outcome::FirstOnly(s) => Ok(s),
        Outcome::All(_) => unreachable!(),
    }
}

/// True iff some total solution agrees with `h` on its domain.
pub fn extends_to_solution(bound: &Bound, h: &Assignment, limits: &Limits) -> Result<bool> {
    Ok(solve_with_fixed(bound, h, limits)?.is_some())
}

/// Exhaustive solution enumeration. The top-level branch set (the first
/// unfixed element's candidate values) may run in parallel; branches are
/// merged in value order, so the result is identical across modes.
pub fn all_solutions(bound: &Bound, limits: &Limits, mode: ExecMode) -> Result<SolutionSet> {
    all_solutions_fixed(bound, &Assignment::empty(), limits, mode)
}

pub fn all_solutions_fixed(
    bound: &Bound,
    fixed: &Assignment,
    limits: &Limits,
    mode: ExecMode,
) -> Result<SolutionSet> {
    bound.check_assignment(fixed)?;
    let n = bound.element_count();
    let solutions: Vec<Assignment> = if n == 0 {
        vec![Assignment::empty()]
    } else {
        let branch_values: Vec<usize> = match fixed.get(0) {
            Some(v) => vec![v],
            None => (0..bound.carrier_order(0)).collect(),
        };
        let branches = map_collect(mode, branch_values, |v| -> Result<Vec<Assignment>> {
            let mut branch_fixed = fixed.clone();
            branch_fixed.set(0, v);
            let mut search = Search::new(bound, &branch_fixed, limits.max_nodes);
            let mut outcome = Outcome::All(Vec::new());
            let mut h = Assignment::empty();
            search.dfs(&mut h, 0, &mut outcome)?;
            match outcome {
                Outcome::All(v) => Ok(v),
                Outcome::FirstOnly(_) => unreachable!(),
            }
        });
        let mut merged = Vec::new();
        for b in branches {
            merged.extend(b?);
        }
        merged
    };
    if solutions.len() > limits.max_solutions {
        return Err(Error::CapExceeded(limits.max_solutions));
    }
    let coset_certified = if solutions.is_empty() || n == 0 {
        true
    } else {
        bound.classify_tuples(&solutions)?.is_coset_or_subgroup()
    };
    Ok(SolutionSet {
        solutions,
        coset_certified,
    })
}
