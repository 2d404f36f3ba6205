//! Seeded randomized campaigns over the corpus. Each trial derives its own
//! generator from (seed, index), so reports are identical across runs and
//! execution modes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{act_assignment, act_instance};
use crate::consistency::check_equivariance;
use crate::corpus::CorpusCase;
use crate::error::Result;
use crate::exec::{map_collect, ExecMode};
use crate::solver::{all_solutions, Limits};

#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<String>,
}

impl CampaignReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.passed == self.total
    }
}

fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_add(index as u64)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15),
    )
}

/// `count` random (instance, pre-solution) pairs: consistency traces on I
/// and I·s must match stagewise under the direct image.
pub fn equivariance_campaign(
    pool: &[CorpusCase],
    k: usize,
    l: usize,
    seed: u64,
    count: usize,
    mode: ExecMode,
) -> Result<CampaignReport> {
    let verdicts = map_collect(
        mode,
        (0..count).collect(),
        |trial| -> Result<Option<String>> {
            let mut rng = trial_rng(seed, trial);
            let case = &pool[rng.gen_range(0..pool.len())];
            let bound = case.instance.bind(&case.template)?;
            let s = bound.random_presolution(&mut rng);
            if check_equivariance(&bound, &s, k, l)? {
                Ok(None)
            } else {
                Ok(Some(format!(
                    "trial {trial}: equivariance failed on {}",
                    case.name
                )))
            }
        },
    );
    let mut failures = Vec::new();
    for v in verdicts {
        if let Some(f) = v? {
            failures.push(f);
        }
    }
    Ok(CampaignReport {
        total: count,
        passed: count - failures.len(),
        failures,
    })
}

/// `count` random (instance, solution, pre-solution) triples: h solves I
/// implies h·s solves I·s, and acting back by s⁻¹ recovers h.
pub fn action_solution_campaign(
    pool: &[CorpusCase],
    seed: u64,
    count: usize,
    limits: &Limits,
    mode: ExecMode,
) -> Result<CampaignReport> {
    // Pre-enumerate the solvable cases once.
    let mut solvable = Vec::new();
    for case in pool {
        let bound = case.instance.bind(&case.template)?;
        let set = all_solutions(&bound, limits, mode)?;
        if !set.solutions.is_empty() {
            solvable.push((case, set.solutions));
        }
    }
    assert!(!solvable.is_empty(), "campaign pool has no solvable case");
    let solvable = &solvable;
    let verdicts = map_collect(
        mode,
        (0..count).collect(),
        |trial| -> Result<Option<String>> {
            let mut rng = trial_rng(seed, trial);
            let (case, solutions) = &solvable[rng.gen_range(0..solvable.len())];
            let bound = case.instance.bind(&case.template)?;
            let h = &solutions[rng.gen_range(0..solutions.len())];
            let s = bound.random_presolution(&mut rng);
            let moved = act_instance(&bound, &s)?;
            let moved_bound = moved.bind(&case.template)?;
            let hs = act_assignment(&bound, h, &s);
            let forward =
                hs.is_total(moved_bound.element_count()) && moved_bound.is_partial_solution(&hs);
            let back = act_assignment(&moved_bound, &hs, &bound.invert_presolution(&s));
            let converse = back == *h && bound.is_partial_solution(&back);
            if forward && converse {
                Ok(None)
            } else {
                Ok(Some(format!(
                    "trial {trial}: action-solution failed on {}",
                    case.name
                )))
            }
        },
    );
    let mut failures = Vec::new();
    for v in verdicts {
        if let Some(f) = v? {
            failures.push(f);
        }
    }
    Ok(CampaignReport {
        total: count,
        passed: count - failures.len(),
        failures,
    })
}
