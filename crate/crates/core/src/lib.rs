//! Dynamic stochastic TSP laboratory: dynamics models, agility estimation,
//! hierarchical cell covers, the collection game, tour construction, bound
//! evaluation and concentration checks.
//!
//! Field and bound code is generic over [`scalar::Real`]; the collection game
//! costs over [`scalar::Scalar`], which includes exact rationals. The aliases
//! below fix the usual choices.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agility;
pub mod bounds;
pub mod cbo;
pub mod dynamics;
pub mod field;
pub mod hcp;
pub mod hcs;
pub mod planner;
pub mod rng;
pub mod scalar;
pub mod stats;

/// Double-precision grid field.
pub type Field = field::GridField<f64>;
/// Single-precision grid field.
pub type Field32 = field::GridField<f32>;
/// Exact collection-game cost.
pub type ExactCost = num_rational::Ratio<i64>;
/// Exact cost without overflow.
pub type BigCost = num_rational::BigRational;
