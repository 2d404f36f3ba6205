//! Constraint satisfaction over coset templates.
//!
//! The carrier of a coset template is a disjoint union of finite groups and
//! every relation is a (right) coset in a product of carrier groups, closed
//! under translation and containing the identity singleton of each carrier.
//! This crate provides:
//!
//! - exact Cayley-table group arithmetic, coset classification, kernels,
//!   quotients, and almost-direct-product analysis ([`group`], [`coset`],
//!   [`adp`]);
//! - templates, instances, assignments, the pre-solution action, a complete
//!   deterministic backtracking solver, pp-definable relation
//!   materialization, and majority-polymorphism search ([`template`],
//!   [`instance`], [`action`], [`solver`], [`pp`], [`polymorphism`]);
//! - anomaly detection and the reduction chain extracting a pp-definable
//!   almost-direct product from any non-2-Helly witness ([`anomaly`]);
//! - the (k,l)-consistency algorithm with deterministic schedules and
//!   equivariance checks ([`consistency`]);
//! - the n-torus instance family whose single-twist variants are unsolvable
//!   yet locally consistent ([`torus`]);
//! - a bundled corpus of templates, witness instances, and extracted
//!   products ([`corpus`]), plus seeded property campaigns ([`campaign`]).
//!
//! The `parallel` feature (default) backs the embarrassingly-parallel sweeps
//! with rayon; without it the crate runs fully sequentially.
//!
//! # Example
//!
//! The bundled five-element parity instance is solvable, yet the assignment
//! sending its three free elements to the nonidentity is a (2,3)-anomaly,
//! and the extraction pipeline turns it into a strict almost-direct product:
//!
//! ```
//! use coset_csp::anomaly::{helly_pipeline, PipelineOptions};
//! use coset_csp::adp::AdpClass;
//! use coset_csp::consistency::run_kl_consistency;
//! use coset_csp::corpus;
//! use coset_csp::solver::{solve, Limits};
//!
//! let template = corpus::template_t(3);
//! let instance = corpus::witness_t3();
//! let bound = instance.bind(&template)?;
//!
//! let solution = solve(&bound, &Limits::default())?;
//! assert!(solution.is_some());
//! let (outcome, _) = run_kl_consistency(&bound, 2, 3)?;
//! assert!(outcome.accept);
//!
//! let extracted = helly_pipeline(&template, &instance, &PipelineOptions::default())?
//!     .expect("the witness carries an anomaly");
//! assert_eq!(extracted.adp.class, AdpClass::StrictAdp);
//! assert_eq!(extracted.adp.r_in_carriers.len(), 4);
//! # Ok::<(), coset_csp::Error>(())
//! ```

pub mod action;
pub mod adp;
pub mod anomaly;
pub mod campaign;
pub mod consistency;
pub mod corpus;
pub mod coset;
pub mod error;
pub mod exec;
pub mod group;
pub mod instance;
pub mod polymorphism;
pub mod pp;
pub mod solver;
pub mod template;
pub mod torus;

pub use error::{Error, Result};
pub use exec::ExecMode;
