//! The action of pre-solutions on assignments and on instances.
//!
//! Acting on an assignment multiplies pointwise in each element's
//! constraining group; acting on an instance right-translates each
//! constraint's relation by the tuple of action values at its arguments.
//! Solvability is invariant: h solves I iff h·s solves I·s.

use crate::error::Result;
use crate::instance::{Assignment, Bound, Constraint, Instance};

/// Pointwise product (h·s)(a) = h(a)·s(a) on dom(h); `s` must be total.
pub fn act_assignment(bound: &Bound, h: &Assignment, s: &Assignment) -> Assignment {
    Assignment::from_pairs(h.iter().map(|(e, v)| {
        let g = bound.template.carrier(bound.carriers[e]);
        (e, g.op(v, s.get(e).expect("total pre-solution")))
    }))
}

/// The instance I·s: same elements, each constraint's relation translated by
/// the tuple of s-values at its arguments. Constraining groups are
/// preserved. Translated relations are materialized in the template.
pub fn act_instance(bound: &Bound, s: &Assignment) -> Result<Instance> {
    let mut constraints = Vec::with_capacity(bound.constraints.len());
    for (c, raw) in bound.constraints.iter().zip(&bound.instance.constraints) {
        let shift: Vec<usize> = c
            .args
            .iter()
            .map(|&e| s.get(e).expect("total pre-solution"))
            .collect();
        let name = bound.template.translated_relation(&raw.rel, &shift)?;
        constraints.push(Constraint {
            rel: name,
            args: raw.args.clone(),
        });
    }
    Ok(Instance {
        elements: bound.instance.elements.clone(),
        constraints,
    })
}
