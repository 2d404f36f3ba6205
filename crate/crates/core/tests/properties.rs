//! Property tests for the algebraic invariants: Malcev classification
//! against the literal triple oracle, translate closure, the pre-solution
//! action laws, materialization invariance, and solver determinism.

use std::sync::Arc;

use proptest::collection::vec;
use proptest::prelude::*;

use coset_csp::action::{act_assignment, act_instance};
use coset_csp::corpus;
use coset_csp::coset::CosetSet;
use coset_csp::group::{FiniteGroup, ProductGroup, Tuple};
use coset_csp::instance::{Assignment, Constraint, Instance};
use coset_csp::pp::{materialize, PpAtom, PpFormula};
use coset_csp::solver::{all_solutions, extends_to_solution, solve, Limits};
use coset_csp::ExecMode;

fn small_product() -> impl Strategy<Value = ProductGroup> {
    // Products of order at most 16 drawn from the bundled generators.
    prop_oneof![
        Just(vec![2usize]),
        Just(vec![2, 2]),
        Just(vec![2, 2, 2]),
        Just(vec![4, 2]),
        Just(vec![4, 4]),
        Just(vec![2, 2, 2, 2]),
    ]
    .prop_map(|orders| {
        ProductGroup::new(
            orders
                .into_iter()
                .map(|n| Arc::new(FiniteGroup::cyclic(n)))
                .collect(),
        )
    })
}

fn subset_of(ambient: &ProductGroup) -> impl Strategy<Value = Vec<Tuple>> {
    let elements: Vec<Tuple> = ambient.elements().collect();
    let n = elements.len();
    vec(0..n, 1..=n).prop_map(move |picks| picks.into_iter().map(|i| elements[i].clone()).collect())
}

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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn classification_matches_triple_oracle(
        (ambient, members) in small_product().prop_flat_map(|p| {
            let subsets = subset_of(&p);
            (Just(p), subsets)
        })
    ) {
        let c = CosetSet::classify(ambient.clone(), members).unwrap();
        prop_assert_eq!(c.is_coset_or_subgroup(), malcev_closed(&ambient, c.members()));
        // Coset/subgroup distinction: subgroups contain the identity.
        if c.is_subgroup() {
            prop_assert!(c.contains(&ambient.identity()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn translates_of_generated_subgroups_are_cosets(
        (ambient, gens, shift_ix) in small_product().prop_flat_map(|p| {
            let n = p.order();
            (Just(p), vec(0..n, 0..3), 0..n)
        })
    ) {
        let elements: Vec<Tuple> = ambient.elements().collect();
        let gens: Vec<Tuple> = gens.into_iter().map(|i| elements[i].clone()).collect();
        let sub = CosetSet::generate(ambient.clone(), &gens).unwrap();
        prop_assert!(sub.is_subgroup());
        let shift = &elements[shift_ix];
        let t = sub.translate(shift).unwrap();
        prop_assert!(t.is_coset_or_subgroup());
        // Reclassification agrees and the inverse shift returns home.
        let again = CosetSet::classify(ambient.clone(), t.members().to_vec()).unwrap();
        prop_assert_eq!(again.kind(), t.kind());
        prop_assert_eq!(t.translate(&ambient.inv(shift)).unwrap(), sub);
    }
}

/// Random instances over the ternary parity template.
fn parity_instance(max_elements: usize) -> impl Strategy<Value = Instance> {
    (3..=max_elements)
        .prop_flat_map(|n| {
            let constraint = prop_oneof![
                (0..n, 0..n, 0..n).prop_map(|(a, b, c)| (0usize, vec![a, b, c])),
                (0..n, 0..n, 0..n).prop_map(|(a, b, c)| (1usize, vec![a, b, c])),
                (0..n).prop_map(|a| (2usize, vec![a])),
                (0..n).prop_map(|a| (3usize, vec![a])),
            ];
            vec(constraint, 1..=6).prop_map(move |constraints| (n, constraints))
        })
        .prop_map(|(n, constraints)| {
            let elements: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
            let rels = ["R_even", "R_odd", "1@Z2", "pi@Z2"];
            let constraints = constraints
                .into_iter()
                .map(|(rel, args)| Constraint {
                    rel: rels[rel].into(),
                    args: args.into_iter().map(|a| format!("e{a}")).collect(),
                })
                .collect();
            Instance::new(elements, constraints)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn action_laws_on_random_instances(
        instance in parity_instance(6),
        raw_s in vec(0..2usize, 6),
        raw_s2 in vec(0..2usize, 6),
    ) {
        let template = corpus::template_t(3);
        let instance = instance.normalize(&template).unwrap();
        let bound = instance.bind(&template).unwrap();
        let n = bound.element_count();
        let s = Assignment::total(raw_s[..n].to_vec());
        let s2 = Assignment::total(raw_s2[..n].to_vec());
        // Action law: (I·s)·s' = I·(s·s').
        let step = act_instance(&bound, &s).unwrap();
        let step_bound = step.bind(&template).unwrap();
        let twice = act_instance(&step_bound, &s2).unwrap();
        let merged = act_assignment(&bound, &s, &s2);
        let direct = act_instance(&bound, &merged).unwrap();
        prop_assert_eq!(twice, direct);
        // Solvability transfers both ways.
        let limits = Limits::default();
        let here = solve(&bound, &limits).unwrap();
        let there_bound_instance = act_instance(&bound, &s).unwrap();
        let there_bound = there_bound_instance.bind(&template).unwrap();
        let there = solve(&there_bound, &limits).unwrap();
        prop_assert_eq!(here.is_some(), there.is_some());
        if let Some(h) = here {
            let hs = act_assignment(&bound, &h, &s);
            prop_assert!(there_bound.is_partial_solution(&hs));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn first_solution_is_lexicographically_least(instance in parity_instance(5)) {
        let template = corpus::template_t(3);
        let instance = instance.normalize(&template).unwrap();
        let bound = instance.bind(&template).unwrap();
        let limits = Limits::default();
        let first = solve(&bound, &limits).unwrap();
        let set = all_solutions(&bound, &limits, ExecMode::default()).unwrap();
        match first {
            None => prop_assert!(set.solutions.is_empty()),
            Some(h) => prop_assert_eq!(&h, set.solutions.first().unwrap()),
        }
        // The tuple view of a nonempty solution set passes the coset test.
        prop_assert!(set.coset_certified);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn extension_oracle_matches_enumeration(
        instance in parity_instance(5),
        raw_h in vec((0..5usize, 0..2usize), 0..4),
    ) {
        let template = corpus::template_t(3);
        let instance = instance.normalize(&template).unwrap();
        let bound = instance.bind(&template).unwrap();
        let n = bound.element_count();
        let h = Assignment::from_pairs(raw_h.into_iter().filter(|(e, _)| *e < n));
        let limits = Limits::default();
        let fast = extends_to_solution(&bound, &h, &limits).unwrap();
        let set = all_solutions(&bound, &limits, ExecMode::default()).unwrap();
        let slow = set.solutions.iter().any(|s| h.agrees_with(s));
        prop_assert_eq!(fast, slow);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn materialization_is_invariant_under_atom_permutation(
        permutation_seed in 0u64..1000,
    ) {
        let template = corpus::template_t(3);
        let mut atoms = vec![
            PpAtom { rel: "R_even".into(), vars: vec![0, 1, 3] },
            PpAtom { rel: "R_even".into(), vars: vec![3, 2, 4] },
            PpAtom { rel: "1@Z2".into(), vars: vec![4] },
        ];
        // Deterministic permutation from the seed.
        let mut seed = permutation_seed;
        for i in (1..atoms.len()).rev() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            atoms.swap(i, (seed >> 33) as usize % (i + 1));
        }
        let formula = PpFormula { free: 3, bound: 2, atoms };
        let got = materialize(&template, &formula, &Limits::default(), ExecMode::default()).unwrap();
        let expected: Vec<Tuple> = got
            .ambient()
            .elements()
            .filter(|t| t.iter().sum::<usize>() % 2 == 0)
            .collect();
        prop_assert_eq!(got.members(), expected.as_slice());
    }
}
