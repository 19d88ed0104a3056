//! Modelling toolkit for badge reward systems in social networks.
//!
//! The crate covers the full analysis loop: a dataset model with a seeded
//! synthetic generator, sequential-pattern mining of achievement orders,
//! the three badge value functions and their convex combination, inference
//! of effort budgets, abilities and thresholds, a best-response effort
//! allocation game, designer-side mechanism sweeps, and an AUC evaluation
//! protocol.
//!
//! Numeric modules are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the pipelines use.

// Negated comparisons reject NaN parameters; index loops follow the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod eval;
pub mod game;
pub mod inference;
pub mod mechanism;
pub mod mining;
pub mod scalar;
pub mod values;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PeerLeadershipModel = values::PeerLeadershipModel<f64>;
pub type PeerCurvePoints = values::PeerCurvePoints<f64>;
pub type ValueWeights = values::ValueWeights<f64>;
pub type ValueModel = values::ValueModel<f64>;
pub type InferredParams = inference::InferredParams<f64>;
pub type Strategy = game::Strategy<f64>;
pub type Profile = game::Profile<f64>;
pub type Game = game::Game<f64>;
pub type EquilibriumResult = game::EquilibriumResult<f64>;
pub type ContributionReport = mechanism::ContributionReport<f64>;
pub type SweepCurve = mechanism::SweepCurve<f64>;
pub use eval::EvalReport;
