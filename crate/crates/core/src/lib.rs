//! Non-homogeneous sequential hypothesis testing.
//!
//! A decision maker picks among actions with different positive costs, each
//! producing a sample whose law depends on the unknown hypothesis, and stops
//! once the posterior of some hypothesis exceeds `1 - delta`. The goal is to
//! minimize the expected total paid cost under the average error constraint.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: observation models, problem instances, the KL-divergence
//!   tensor (bits) and assumption checks.
//! - [`fracprog`]: a small dense simplex solver, the simplex-constrained
//!   maximin LP and the maximin linear-fractional program solved through the
//!   Charnes-Cooper change of variables.
//! - [`policies`]: guiding action distributions for the classic Chernoff,
//!   cost-aware Chernoff and bit-per-buck schemes.
//! - [`engine`]: the log-domain posterior recursion and a single sequential
//!   trial.
//! - [`bounds`]: asymptotic lower and upper bounds on the expected cost.
//!
//! All numerical code is generic over [`Real`] (implemented for `f32` and
//! `f64`); the `*F64` / `*F32` aliases below name the concrete types.

// `!(x > 0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod engine;
pub mod error;
pub mod fracprog;
pub mod model;
pub mod policies;
pub mod scalar;

pub use bounds::{BoundsReport, EtaRule};
pub use engine::{Observation, PosteriorState, Termination, TrialRecord};
pub use error::{Error, Result};
pub use fracprog::{FractionalProblem, MaximinProblem, SimplexSolution, SolveStatus};
pub use model::{AssumptionReport, KldTensor, ObservationModel, ProblemInstance};
pub use policies::{GuidingPolicy, Scheme};
pub use scalar::Real;

pub type ObservationModelF64 = ObservationModel<f64>;
pub type ProblemInstanceF64 = ProblemInstance<f64>;
pub type KldTensorF64 = KldTensor<f64>;
pub type AssumptionReportF64 = AssumptionReport<f64>;
pub type GuidingPolicyF64 = GuidingPolicy<f64>;
pub type SimplexSolutionF64 = SimplexSolution<f64>;
pub type PosteriorStateF64 = PosteriorState<f64>;
pub type TrialRecordF64 = TrialRecord<f64>;
pub type BoundsReportF64 = BoundsReport<f64>;

pub type ObservationModelF32 = ObservationModel<f32>;
pub type ProblemInstanceF32 = ProblemInstance<f32>;
pub type KldTensorF32 = KldTensor<f32>;
pub type GuidingPolicyF32 = GuidingPolicy<f32>;
pub type SimplexSolutionF32 = SimplexSolution<f32>;
pub type TrialRecordF32 = TrialRecord<f32>;
