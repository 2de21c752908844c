//! Robust convex feasibility by online dual-subgradient play.
//!
//! A robust program asks for `x ∈ D` with `f_i(x, u) ≤ 0` for every noise
//! vector `u` in an uncertainty set `U` and every constraint `i`. This crate
//! solves it as a game: a noise player adapts each `u_i` by projected
//! stochastic subgradient ascent ([`ogd`]), and a decision player answers
//! each noise assignment with an optimization oracle ([`inner_oracle`]).
//! The average decision is `3ε`-robust-feasible with probability `1 − δ`,
//! or some oracle call proves the robust problem infeasible ([`meta`]).
//!
//! Two gradient oracles drive the noise player ([`sampling`]): exact
//! gradients of every constraint, and an `s`-sample ℓ1-importance estimator
//! whose query cost scales with `√(s·m·d)` rather than `m·d`. A
//! [`QueryLedger`] records the charged queries of each run.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use rand::SeedableRng;
//! use robopt::applications::lp::{lp_constants, worst_case_lp_violation, RobustLpInstance};
//! use robopt::inner_oracle::oracle_for_lp;
//! use robopt::meta::solve_robust_exact;
//! use robopt::projections::SetDescriptor;
//!
//! // x₁ + 0.2 u₁ x₁ ≤ 0.3 for all ‖u‖₂ ≤ 1, over the unit ℓ1 ball
//! let inst = RobustLpInstance::new(
//!     vec![DVector::from_column_slice(&[1.0, 0.0])],
//!     DVector::from_element(1, 0.3),
//!     vec![DMatrix::from_row_slice(2, 1, &[0.2, 0.0])],
//!     SetDescriptor::L1Ball { dim: 2, radius: 1.0 },
//! )?;
//! let bounds = lp_constants(&inst)?;
//! let mut oracle = oracle_for_lp(&inst, 0.05)?;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let out = solve_robust_exact(&inst, &bounds, &mut oracle, 0.05, 0.1, &mut rng)?;
//! let x = out.x_bar().expect("feasible instance");
//! assert!(worst_case_lp_violation(&inst, x)[0] <= 0.15);
//! # Ok::<(), robopt::Error>(())
//! ```

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod applications;
pub mod error;
pub mod inner_oracle;
pub mod ledger;
pub mod linalg;
pub mod meta;
pub mod ogd;
pub mod outcome;
pub mod problem;
pub mod projections;
pub mod sampling;

pub use error::{Error, Result};
pub use ledger::QueryLedger;
pub use outcome::{RunOutcome, RunResult, RunStatus};
pub use problem::{Bounds, NoiseMemory, RobustProblem, UncertaintySet};
pub use projections::SetDescriptor;
