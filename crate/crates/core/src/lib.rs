//! Augmented Lagrangian method with block coordinate descent for 0/1
//! integer programs `min cᵀx s.t. Ax ≤ b, x_j ∈ X_j`.
//!
//! Everything numeric is generic over [`Scalar`], implemented for `f32`,
//! `f64` and the exact [`Rational`].

pub mod alfunc;
pub mod alm;
pub mod bcd;
pub mod error;
pub mod model;
pub mod oracle;
pub mod random;
pub mod refine;
pub mod scalar;
pub mod sparse;
pub mod ttp;

pub use alfunc::{al_value, lr_dual_value, DualState};
pub use alm::{alm_solve, AlmConfig, AlmOutcome, PenaltyMode, StepSchedule};
pub use bcd::{bcd_solve, BcdConfig, Tau, UpdateKind};
pub use error::{Error, Result};
pub use model::{Assignment, Block, BlockProblem, BlockSpec};
pub use oracle::{build_oracles, BlockOracle, LinearOracle};
pub use scalar::{Rational, Scalar};

/// Instance with exact rational data.
pub type ExactProblem = BlockProblem<Rational>;
/// Instance with `f64` data.
pub type FloatProblem = BlockProblem<f64>;
