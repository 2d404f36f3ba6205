//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`) once every check in it has held. All
//! tolerances are exact; every expected value is computed by an independent
//! oracle inside this file or pinned from hand enumeration.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coset_csp::adp::{classify_almost_direct, quotient_adp, AdpClass};
use coset_csp::anomaly::{helly_pipeline, is_anomaly, PipelineOptions};
use coset_csp::campaign::{action_solution_campaign, equivariance_campaign};
use coset_csp::consistency::{act_families, run_kl_consistency};
use coset_csp::corpus;
use coset_csp::coset::{enumerate_subgroups, CosetSet};
use coset_csp::group::{FiniteGroup, ProductGroup, Tuple};
use coset_csp::instance::{Assignment, Bound, Instance};
use coset_csp::polymorphism::{find_majority_polymorphism, verify_majority};
use coset_csp::pp::materialize;
use coset_csp::solver::{all_solutions, solve, Limits};
use coset_csp::torus::{
    build_torus, fooling_experiment, largest_component_after_removal, quotient_image, r_quotient,
    single_twist_certificate, slots, telescoping_product, Certificate, Slot, TorusSpec,
};
use coset_csp::ExecMode;

fn pass(criterion: u32, detail: &str) {
    println!("criterion {criterion}: PASS - {detail}");
}

/// Independent oracle: literal Malcev triple closure (members sorted).
fn malcev_closed(ambient: &ProductGroup, members: &[Tuple]) -> bool {
    members.iter().all(|x| {
        members.iter().all(|y| {
            members.iter().all(|z| {
                let t = ambient.op(&ambient.op(x, &ambient.inv(y)), z);
                members.binary_search(&t).is_ok()
            })
        })
    })
}

fn bundled_groups() -> Vec<FiniteGroup> {
    vec![
        FiniteGroup::cyclic(2),
        FiniteGroup::cyclic(4),
        FiniteGroup::klein4(),
        FiniteGroup::symmetric3(),
    ]
}

fn product_cubed(g: &FiniteGroup) -> ProductGroup {
    let g = Arc::new(g.clone());
    ProductGroup::new(vec![g.clone(), g.clone(), g])
}

/// Independent oracle: brute-force satisfiability over all total
/// assignments.
fn brute_force_solvable(bound: &Bound) -> bool {
    let n = bound.element_count();
    let orders: Vec<usize> = (0..n).map(|e| bound.carrier_order(e)).collect();
    let mut values = vec![0usize; n];
    loop {
        let h = Assignment::total(values.clone());
        if bound.is_partial_solution(&h) {
            return true;
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return false;
            }
            pos -= 1;
            values[pos] += 1;
            if values[pos] < orders[pos] {
                break;
            }
            values[pos] = 0;
        }
    }
}

#[test]
fn criterion_01_group_core_laws() {
    let started = Instant::now();
    // Cayley validation: every bundled group and its 3-factor product
    // rebuild from raw tables, which re-checks identity, inverses, and
    // associativity exhaustively.
    for g in bundled_groups() {
        assert!(g.order() <= 8);
        let rebuilt = FiniteGroup::from_table(g.label(), g.table_rows()).unwrap();
        assert_eq!(rebuilt, g);
        let cube = product_cubed(&g);
        let elements: Vec<Tuple> = cube.elements().collect();
        let index_of = |t: &Tuple| elements.binary_search(t).unwrap();
        let table: Vec<Vec<usize>> = elements
            .iter()
            .map(|a| elements.iter().map(|b| index_of(&cube.op(a, b))).collect())
            .collect();
        FiniteGroup::from_table(format!("{}^3", g.label()), table).unwrap();
    }
    // Exhaustive classification vs the Malcev oracle on every nonempty
    // subset of Z2, Z2^2, Z2^3, and S3.
    let z2 = Arc::new(FiniteGroup::cyclic(2));
    let smalls = vec![
        ProductGroup::new(vec![z2.clone()]),
        ProductGroup::new(vec![z2.clone(), z2.clone()]),
        ProductGroup::new(vec![z2.clone(), z2.clone(), z2.clone()]),
        ProductGroup::single(Arc::new(FiniteGroup::symmetric3())),
    ];
    let mut z2sq_cosets = 0;
    for ambient in &smalls {
        let elements: Vec<Tuple> = ambient.elements().collect();
        for mask in 1u64..(1 << elements.len()) {
            let members: Vec<Tuple> = elements
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, t)| t.clone())
                .collect();
            let c = CosetSet::classify(ambient.clone(), members.clone()).unwrap();
            assert_eq!(c.is_coset_or_subgroup(), malcev_closed(ambient, &members));
            if ambient.arity() == 2 && c.is_coset_or_subgroup() {
                z2sq_cosets += 1;
            }
        }
    }
    assert_eq!(z2sq_cosets, 11, "Z2^2 must have exactly 11 coset subsets");
    // Translate closure: every subgroup of the order-16 mixed products, and
    // every cyclic subgroup of the order-64 cubes. All translates classify
    // as cosets, satisfy the triple oracle, and invert cleanly.
    let translate_sweep = |ambient: &ProductGroup, subgroups: Vec<CosetSet>| {
        for sub in subgroups {
            let mut seen = BTreeSet::new();
            for shift in ambient.elements() {
                let t = sub.translate(&shift).unwrap();
                assert!(t.is_coset_or_subgroup());
                assert_eq!(t.translate(&ambient.inv(&shift)).unwrap(), sub);
                if seen.insert(t.members().to_vec()) {
                    assert!(malcev_closed(ambient, t.members()));
                }
            }
            assert_eq!(seen.len(), ambient.order() / sub.len());
        }
    };
    let z4 = Arc::new(FiniteGroup::cyclic(4));
    let v4 = Arc::new(FiniteGroup::klein4());
    for head in [z4, v4] {
        let mixed = ProductGroup::new(vec![head, z2.clone(), z2.clone()]);
        translate_sweep(&mixed, enumerate_subgroups(&mixed));
    }
    for g in [FiniteGroup::cyclic(4), FiniteGroup::klein4()] {
        let cube = product_cubed(&g);
        let mut cyclic = BTreeSet::new();
        let mut subgroups = Vec::new();
        for e in cube.elements() {
            let sub = CosetSet::generate(cube.clone(), &[e]).unwrap();
            if cyclic.insert(sub.members().to_vec()) {
                subgroups.push(sub);
            }
        }
        translate_sweep(&cube, subgroups);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 1 took {elapsed:?}");
    pass(1, &format!("group laws, Malcev oracle on every subset of the order<=8 ambients, 11/15 Z2^2 cosets, translate closure ({elapsed:.2?})"));
}

#[test]
fn criterion_02_adp_sweep() {
    let started = Instant::now();
    let z2 = Arc::new(FiniteGroup::cyclic(2));
    let z4 = Arc::new(FiniteGroup::cyclic(4));
    let products = [
        ProductGroup::new(vec![z2.clone(), z2.clone(), z2.clone()]),
        ProductGroup::new(vec![z4, z2.clone(), z2]),
    ];
    let mut adp_count = 0;
    for product in &products {
        for sub in enumerate_subgroups(product) {
            let class = classify_almost_direct(&sub).unwrap();
            if class == AdpClass::NotAdp {
                continue;
            }
            adp_count += 1;
            let q = quotient_adp(&sub).unwrap();
            assert_eq!(
                classify_almost_direct(&q.image).unwrap(),
                AdpClass::StrictAdp
            );
            assert!(q.image.is_commutative());
        }
    }
    assert!(
        adp_count > 0,
        "the sweep must exercise at least one product"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 2 took {elapsed:?}");
    pass(
        2,
        &format!(
            "{adp_count} almost-direct subgroups: quotients strict and commutative ({elapsed:.2?})"
        ),
    );
}

#[test]
fn criterion_03_two_helly_frontier() {
    let started = Instant::now();
    let limits = Limits::default();
    let t2 = corpus::template_t(2);
    let witness = find_majority_polymorphism(&t2, &limits).unwrap();
    let witness = witness.expect("binary parity template has a majority polymorphism");
    assert!(verify_majority(&t2, &witness).unwrap());
    for n in [3, 4] {
        let t = corpus::template_t(n);
        assert!(
            find_majority_polymorphism(&t, &limits).unwrap().is_none(),
            "arity-{n} parity template must have no majority polymorphism"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 3 took {elapsed:?}");
    pass(
        3,
        &format!("majority exists for T2, none for T3/T4 ({elapsed:.2?})"),
    );
}

#[test]
fn criterion_04_anomaly_pipeline() {
    let started = Instant::now();
    let limits = Limits::default();
    // Ternary witness: S1 = S2 = S3 = Z2 and R = the even-parity subgroup,
    // strict, with round-tripping defining formulas.
    let t3 = corpus::template_t(3);
    let outcome = helly_pipeline(&t3, &corpus::witness_t3(), &PipelineOptions::default())
        .unwrap()
        .expect("bundled ternary witness yields an anomaly");
    let adp = &outcome.adp;
    for s in &adp.s {
        assert_eq!(s.members(), &[vec![0], vec![1]], "S_i must be all of Z2");
    }
    let even: Vec<Tuple> = adp
        .h
        .ambient()
        .elements()
        .filter(|t| t.iter().sum::<usize>() % 2 == 0)
        .collect();
    assert_eq!(adp.r_in_carriers.members(), even.as_slice());
    assert_eq!(adp.class, AdpClass::StrictAdp);
    let formulas = [
        (&adp.witnesses.s1, &adp.s[0]),
        (&adp.witnesses.s2, &adp.s[1]),
        (&adp.witnesses.s3, &adp.s[2]),
        (&adp.witnesses.r, &adp.r_in_carriers),
        (&adp.witnesses.h, &adp.h),
    ];
    for (formula, expected) in formulas {
        let got = materialize(&t3, formula, &limits, ExecMode::default()).unwrap();
        assert_eq!(got.members(), expected.members(), "pp-witness round-trip");
    }
    // Quaternary witness: the reduction step fires and the final witness
    // re-verifies by brute force.
    let t4 = corpus::template_t(4);
    let outcome = helly_pipeline(&t4, &corpus::witness_t4(), &PipelineOptions::default())
        .unwrap()
        .expect("bundled quaternary witness yields an anomaly");
    assert!(outcome.reductions >= 1, "reduction lemma must fire");
    assert_eq!(outcome.shrunk, (3, 4));
    let bound = outcome.final_instance.bind(&t4).unwrap();
    assert!(is_anomaly(&bound, &outcome.final_h, 2, &limits).unwrap());
    assert_eq!(outcome.adp.class, AdpClass::StrictAdp);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 4 took {elapsed:?}");
    pass(
        4,
        &format!(
            "extraction on T3 and T4 witnesses, reduction fired, pp round-trips ({elapsed:.2?})"
        ),
    );
}

#[test]
fn criterion_05_torus_correctness() {
    let started = Instant::now();
    let t = corpus::template_t(3);
    let adp = corpus::adp_parity();
    let solver_limits = Limits::with_nodes(8_000_000);
    let nontrivial_shifts: Vec<Tuple> = adp
        .cosets_of_r()
        .into_iter()
        .filter(|c| c.members() != adp.r_in_carriers.members())
        .map(|c| c.representative().clone())
        .collect();
    assert_eq!(
        nontrivial_shifts.len(),
        1,
        "parity R has one nontrivial coset"
    );
    let mut twisted_checked = 0;
    for n in [2usize, 3, 4] {
        let all_r = TorusSpec::all_r(n, adp.clone());
        let instance = build_torus(&all_r, &t).unwrap();
        let bound = instance.bind(&t).unwrap();
        let solution = solve(&bound, &solver_limits)
            .unwrap()
            .expect("all-R torus solvable");
        assert_eq!(solution, bound.identity_presolution());
        assert_eq!(single_twist_certificate(&all_r), Certificate::NotApplicable);
        for slot in slots(n) {
            for shift in &nontrivial_shifts {
                let spec = all_r.twist(slot, shift).unwrap();
                assert_eq!(single_twist_certificate(&spec), Certificate::Unsolvable);
                if n == 2 {
                    let twisted = build_torus(&spec, &t).unwrap();
                    let tb = twisted.bind(&t).unwrap();
                    // Exhaustive 2^12 oracle and the solver must agree.
                    assert!(!brute_force_solvable(&tb));
                    assert!(solve(&tb, &solver_limits).unwrap().is_none());
                    twisted_checked += 1;
                } else if n == 3 {
                    let twisted = build_torus(&spec, &t).unwrap();
                    let tb = twisted.bind(&t).unwrap();
                    assert!(solve(&tb, &solver_limits).unwrap().is_none());
                    twisted_checked += 1;
                }
            }
        }
    }
    assert_eq!(twisted_checked, 8 + 18);
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "criterion 5 took {elapsed:?}"
    );
    pass(5, &format!("all-R tori n=2..4 solvable; all {twisted_checked} solver-checked twists unsolvable, certificates agree ({elapsed:.2?})"));
}

#[test]
fn criterion_06_telescoping_identity() {
    let started = Instant::now();
    let t = corpus::template_t(3);
    let adp = corpus::adp_parity();
    let q = r_quotient(&adp).unwrap();
    let mut checked = [0usize; 2];
    for (ix, n) in [2usize, 3].into_iter().enumerate() {
        let spec = TorusSpec::all_r(n, adp.clone());
        let omitted = Slot::new(coset_csp::torus::SlotKind::R, 0, 0);
        let instance = build_torus(&spec, &t).unwrap();
        let mut punctured = instance.clone();
        punctured.constraints.remove(0);
        let bound = punctured.bind(&t).unwrap();
        let set =
            all_solutions(&bound, &Limits::with_nodes(16_000_000), ExecMode::default()).unwrap();
        assert!(set.coset_certified);
        for h in &set.solutions {
            let product = telescoping_product(&spec, &t, h, omitted).unwrap();
            assert!(adp.r_in_carriers.contains(&product));
            let omitted_triple: Tuple = spec
                .slot_elements(omitted)
                .iter()
                .map(|name| h.get(instance.element_position(name).unwrap()).unwrap())
                .collect();
            assert_eq!(
                quotient_image(&adp, &q, &product).unwrap(),
                quotient_image(&adp, &q, &omitted_triple).unwrap(),
                "quotient images must match"
            );
            assert!(adp.r_in_carriers.contains(&omitted_triple));
            checked[ix] += 1;
        }
    }
    assert_eq!(checked[0], 32, "punctured 2-torus has 32 solutions");
    assert!(
        checked[1] >= 100,
        "need at least 100 solutions at n=3, got {}",
        checked[1]
    );
    let elapsed = started.elapsed();
    pass(
        6,
        &format!(
            "telescoping identity on {}+{} punctured-torus solutions ({elapsed:.2?})",
            checked[0], checked[1]
        ),
    );
}

#[test]
fn criterion_07_small_triangulation() {
    let started = Instant::now();
    // Exhaustive over all removal sets of size <= 3 at n=4.
    let n = 4;
    let all = slots(n);
    let mut cases = 0;
    let mut stack: Vec<Vec<usize>> = (0..all.len()).map(|i| vec![i]).collect();
    while let Some(indices) = stack.pop() {
        let removed: BTreeSet<Slot> = indices.iter().map(|&i| all[i]).collect();
        let size = largest_component_after_removal(n, &removed);
        let j = removed.len();
        assert!(
            size >= 2 * n * n - j * j,
            "bound fails at n=4, removed {removed:?}"
        );
        cases += 1;
        if indices.len() < 3 {
            for next in indices.last().unwrap() + 1..all.len() {
                let mut bigger = indices.clone();
                bigger.push(next);
                stack.push(bigger);
            }
        }
    }
    assert_eq!(cases, 32 + 496 + 4960);
    // 1000 seeded random removal sets at each of n = 6 and n = 8.
    for n in [6usize, 8] {
        let all = slots(n);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + n as u64);
        for _ in 0..1000 {
            let j = rng.gen_range(1..n);
            let mut removed = BTreeSet::new();
            while removed.len() < j {
                removed.insert(all[rng.gen_range(0..all.len())]);
            }
            let size = largest_component_after_removal(n, &removed);
            assert!(size >= 2 * n * n - j * j, "bound fails at n={n}, j={j}");
        }
    }
    let elapsed = started.elapsed();
    pass(7, &format!("component bound: {cases} exhaustive cases at n=4, 1000 samples each at n=6,8 ({elapsed:.2?})"));
}

#[test]
fn criterion_08_equivariance_and_action() {
    let started = Instant::now();
    let pool = corpus::campaign_pool();
    let equivariance = equivariance_campaign(&pool, 2, 3, 2024, 100, ExecMode::default()).unwrap();
    assert!(
        equivariance.all_passed(),
        "equivariance failures: {:?}",
        equivariance.failures
    );
    assert_eq!(equivariance.total, 100);
    let action =
        action_solution_campaign(&pool, 2024, 1000, &Limits::default(), ExecMode::default())
            .unwrap();
    assert!(
        action.all_passed(),
        "action failures: {:?}",
        action.failures
    );
    assert_eq!(action.total, 1000);
    let elapsed = started.elapsed();
    pass(
        8,
        &format!("100 equivariance pairs and 1000 action triples, zero exceptions ({elapsed:.2?})"),
    );
}

#[test]
fn criterion_09_fooling_demonstration() {
    let started = Instant::now();
    let t = corpus::template_t(3);
    let adp = corpus::adp_parity();
    let report = fooling_experiment(
        &t,
        &adp,
        2,
        3,
        2..=6,
        &Limits::with_nodes(8_000_000),
        ExecMode::default(),
    )
    .unwrap();
    let minimal = report
        .minimal_fooling_n
        .expect("a fooling n must exist for n <= 6");
    assert!(minimal <= 6);
    let record = report
        .records
        .iter()
        .find(|r| r.n == minimal && r.variant == "twisted")
        .unwrap();
    assert_eq!(record.consistency, "accept");
    assert_eq!(record.certificate, "unsolvable");
    assert_eq!(
        record.solver, "unsat",
        "solver must prove unsolvability at the minimal fooling n"
    );
    for r in report.records.iter().filter(|r| r.variant == "all_r") {
        assert_eq!(r.solver, "sat");
        assert_eq!(r.consistency, "accept");
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "criterion 9 took {elapsed:?}"
    );
    pass(9, &format!("minimal fooling n = {minimal}; consistency accepts what solver and certificate refute ({elapsed:.2?})"));
}

#[test]
fn criterion_10_consistency_internal_claims() {
    let started = Instant::now();
    let pool = corpus::campaign_pool();
    let mut accepting = 0;
    for case in &pool {
        let instance: &Instance = &case.instance;
        let bound = instance.bind(&case.template).unwrap();
        let (outcome, families) = run_kl_consistency(&bound, 2, 3).unwrap();
        // The two verdict computations agree at every fixpoint.
        assert_eq!(
            outcome.all_nonempty, outcome.union_nonempty,
            "verdict divergence on {}",
            case.name
        );
        if !outcome.accept {
            continue;
        }
        accepting += 1;
        assert!(
            outcome.all_nonempty,
            "accepting fixpoint with an empty family on {}",
            case.name
        );
        // H_X · s = H_X for sampled pre-solutions fixing X.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let keys: Vec<Vec<usize>> = families.keys().cloned().collect();
        for x in &keys {
            for _ in 0..3 {
                let mut s = bound.random_presolution(&mut rng);
                for &e in x {
                    s.set(e, bound.template.carrier(bound.carriers[e]).identity());
                }
                let moved = act_families(&bound, &families, &s);
                assert_eq!(
                    moved.family(x),
                    families.family(x),
                    "family at {x:?} moved under a fixing pre-solution on {}",
                    case.name
                );
            }
        }
    }
    assert!(accepting >= 3, "corpus must include accepting fixpoints");
    let elapsed = started.elapsed();
    pass(10, &format!("{accepting} accepting fixpoints: families nonempty and fixed under X-fixing pre-solutions ({elapsed:.2?})"));
}
