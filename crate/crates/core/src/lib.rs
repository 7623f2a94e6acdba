//! Calibration of probabilistic noiseless linear amplifiers.
//!
//! The crate computes every Fisher-information figure of merit for estimating
//! the gain `g` of a heralded amplifier with integer threshold `p`, checks
//! them against brute-force oracles, and simulates the sequential
//! herald-then-detect experiment to test Cramér-Rao saturation.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x <= tol)` is used on purpose: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fisher;
pub mod fock;
pub mod instrument;
pub mod measurements;
pub mod montecarlo;
pub mod oracles;
pub mod probes;
pub mod scalar;

pub use error::{NlaError, Result};
pub use instrument::{Branch, MeterState};
pub use scalar::Real;

pub type FockVector64 = fock::FockVector<f64>;
pub type DensityOperator64 = fock::DensityOperator<f64>;
pub type NlaParams64 = instrument::NlaParams<f64>;
pub type ConditionalState64 = instrument::ConditionalState<f64>;
pub type JointState64 = instrument::JointState<f64>;
pub type MeterState64 = instrument::MeterState<f64>;
pub type FisherBreakdown64 = fisher::FisherBreakdown<f64>;
pub type QuadratureGrid64 = fock::QuadratureGrid<f64>;

pub type FockVector32 = fock::FockVector<f32>;
pub type NlaParams32 = instrument::NlaParams<f32>;
