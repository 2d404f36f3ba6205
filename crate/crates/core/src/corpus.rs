//! Bundled corpus: the parity template family, its witness instances, and
//! the two reference almost-direct products. The JSON files under `corpus/`
//! are embedded so binaries stay self-contained; the builders here construct
//! the same objects programmatically, and tests pin the two in sync.

use crate::anomaly::AdpExtraction;
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, Tuple};
use crate::instance::Instance;
use crate::template::CosetTemplate;

pub const TEMPLATE_T2: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/template_t2.json"
));
pub const TEMPLATE_T3: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/template_t3.json"
));
pub const TEMPLATE_T4: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/template_t4.json"
));
pub const TEMPLATE_Z4: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/template_z4.json"
));
pub const INSTANCE_EXAMPLE3: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/instance_example3.json"
));
pub const INSTANCE_T2_CYCLE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/instance_t2_cycle.json"
));
pub const WITNESS_T3: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/witness_t3_parity5.json"
));
pub const WITNESS_T4: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/witness_t4_parity6.json"
));
pub const ADP_PARITY_Z2: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/adp_parity_z2.json"
));
pub const ADP_SUMZERO_Z4: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../corpus/adp_sumzero_z4.json"
));

/// Embedded file for a corpus name, e.g. `t3` or `witness_t3`.
pub fn embedded(name: &str) -> Option<&'static str> {
    match name {
        "t2" => Some(TEMPLATE_T2),
        "t3" => Some(TEMPLATE_T3),
        "t4" => Some(TEMPLATE_T4),
        "z4" => Some(TEMPLATE_Z4),
        "example3" => Some(INSTANCE_EXAMPLE3),
        "t2_cycle" => Some(INSTANCE_T2_CYCLE),
        "witness_t3" => Some(WITNESS_T3),
        "witness_t4" => Some(WITNESS_T4),
        "parity_z2" => Some(ADP_PARITY_Z2),
        "sumzero_z4" => Some(ADP_SUMZERO_Z4),
        _ => None,
    }
}

/// On-disk file name for a corpus entry, for `COSETCSP_CORPUS` overrides.
pub fn file_name(name: &str) -> Option<&'static str> {
    match name {
        "t2" => Some("template_t2.json"),
        "t3" => Some("template_t3.json"),
        "t4" => Some("template_t4.json"),
        "z4" => Some("template_z4.json"),
        "example3" => Some("instance_example3.json"),
        "t2_cycle" => Some("instance_t2_cycle.json"),
        "witness_t3" => Some("witness_t3_parity5.json"),
        "witness_t4" => Some("witness_t4_parity6.json"),
        "parity_z2" => Some("adp_parity_z2.json"),
        "sumzero_z4" => Some("adp_sumzero_z4.json"),
        _ => None,
    }
}

pub fn names() -> Vec<&'static str> {
    vec![
        "t2",
        "t3",
        "t4",
        "z4",
        "example3",
        "t2_cycle",
        "witness_t3",
        "witness_t4",
        "parity_z2",
        "sumzero_z4",
    ]
}

/// The parity template: carrier Z2, singleton relations for both elements,
/// and the n-ary even/odd parity relations.
pub fn template_t(n: usize) -> CosetTemplate {
    assert!(n >= 2, "parity templates start at arity 2");
    let mut t = CosetTemplate::new(vec![FiniteGroup::cyclic(2)]).expect("fresh template");
    t.add_relation("1@Z2", &["Z2"], vec![vec![0]]).unwrap();
    t.add_relation("pi@Z2", &["Z2"], vec![vec![1]]).unwrap();
    let signature: Vec<&str> = vec!["Z2"; n];
    let tuples = |parity: usize| -> Vec<Tuple> {
        (0..1usize << n)
            .map(|mask| (0..n).map(|b| (mask >> (n - 1 - b)) & 1).collect::<Tuple>())
            .filter(|t| t.iter().sum::<usize>() % 2 == parity)
            .collect()
    };
    t.add_relation("R_even", &signature, tuples(0)).unwrap();
    t.add_relation("R_odd", &signature, tuples(1)).unwrap();
    t
}

/// Carrier Z4 with the ternary sum-zero relation.
pub fn template_z4() -> CosetTemplate {
    let mut t = CosetTemplate::new(vec![FiniteGroup::cyclic(4)]).expect("fresh template");
    t.add_relation("1@Z4", &["Z4"], vec![vec![0]]).unwrap();
    let tuples: Vec<Tuple> = (0..4)
        .flat_map(|x| (0..4).map(move |y| vec![x, y, (8 - x - y) % 4]))
        .collect();
    t.add_relation("R_sum0", &["Z4", "Z4", "Z4"], tuples)
        .unwrap();
    t
}

pub fn instance_example3() -> Instance {
    Instance::from_json_str(INSTANCE_EXAMPLE3).expect("bundled instance parses")
}

pub fn instance_t2_cycle() -> Instance {
    Instance::from_json_str(INSTANCE_T2_CYCLE).expect("bundled instance parses")
}

/// The five-element parity instance over the ternary template; its
/// restriction (pi,pi,pi) on the three free elements is the canonical
/// (2,3)-anomaly.
pub fn witness_t3() -> Instance {
    Instance::from_json_str(WITNESS_T3).expect("bundled instance parses")
}

/// The six-element parity instance over the 4-ary template. The shared
/// auxiliary pair keeps every three-element extendable set full, so its
/// least anomaly is the (3,4)-anomaly on the four free elements and the
/// reduction step demonstrably fires.
pub fn witness_t4() -> Instance {
    Instance::from_json_str(WITNESS_T4).expect("bundled instance parses")
}

/// The even-parity product extracted from the bundled ternary witness by the
/// full pipeline. Deterministic.
pub fn adp_parity() -> AdpExtraction {
    let t = template_t(3);
    let outcome = crate::anomaly::helly_pipeline(
        &t,
        &witness_t3(),
        &crate::anomaly::PipelineOptions::default(),
    )
    .expect("bundled witness pipeline succeeds")
    .expect("bundled witness yields an anomaly");
    outcome.adp
}

/// The sum-zero product over Z4: carriers are the whole group, the relation
/// is directly pp-definable by its own atom.
pub fn adp_sumzero_z4() -> AdpExtraction {
    let t = template_z4();
    AdpExtraction::from_relation(&t, "R_sum0")
        .expect("bundled relation is an almost-direct product")
}

/// Resolve a bundled product by name.
pub fn adp_by_name(name: &str) -> Result<AdpExtraction> {
    match name {
        "parity_z2" => Ok(adp_parity()),
        "sumzero_z4" => Ok(adp_sumzero_z4()),
        other => Err(Error::Parse(format!("unknown bundled adp {other:?}"))),
    }
}

/// A named (template, instance) pair for the seeded campaigns.
pub struct CorpusCase {
    pub name: &'static str,
    pub template: CosetTemplate,
    pub instance: Instance,
}

/// Instances the random campaigns draw from. Small instances only; the
/// campaigns run complete solver checks on each.
pub fn campaign_pool() -> Vec<CorpusCase> {
    let mut pool = vec![
        CorpusCase {
            name: "witness_t3",
            template: template_t(3),
            instance: witness_t3(),
        },
        CorpusCase {
            name: "witness_t4",
            template: template_t(4),
            instance: witness_t4(),
        },
        CorpusCase {
            name: "example3",
            template: template_t(3),
            instance: instance_example3(),
        },
        CorpusCase {
            name: "t2_cycle",
            template: template_t(2),
            instance: instance_t2_cycle(),
        },
    ];
    let adp = adp_parity();
    let template = template_t(3);
    let all_r = crate::torus::TorusSpec::all_r(2, adp.clone());
    let torus_instance = crate::torus::build_torus(&all_r, &template).expect("torus builds");
    pool.push(CorpusCase {
        name: "torus2_all_r",
        template: template.clone(),
        instance: torus_instance,
    });
    let twisted = all_r
        .twist(
            crate::torus::Slot::new(crate::torus::SlotKind::R, 0, 0),
            &adp.first_nonmember_shift(),
        )
        .expect("twist applies");
    let twisted_instance = crate::torus::build_torus(&twisted, &template).expect("torus builds");
    pool.push(CorpusCase {
        name: "torus2_twisted",
        template,
        instance: twisted_instance,
    });
    pool
}
