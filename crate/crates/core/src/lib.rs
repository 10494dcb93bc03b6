//! Random walks on `Z^2` whose horizontal layers carry a random orientation
//! and a random probability of staying on the layer.
//!
//! Modules, bottom-up:
//!
//! * [`env`]: lazily generated environments and the limit-theorem constants.
//! * [`walk`]: direct and embedded simulators plus an exact small-horizon oracle.
//! * [`stats`]: local times, the drift/martingale decomposition, variance and
//!   spread curves, exponent fits and return counts.
//! * [`limit`]: stable increments, Brownian local time and the Kesten-Spitzer
//!   integral `Delta_t`, with two-sample comparison tools.
//! * [`experiment`]: config parsing, deterministic parallel runs and reports.

pub mod env;
pub mod error;
pub mod experiment;
pub mod limit;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use env::{
    make_environment, theoretical_constants, Environment, LevelRecord, Orientation,
    OrientationScheme, StayProbLaw, TheoreticalConstants,
};
pub use error::{Error, Result};
pub use scalar::{Probability, Real};
pub use walk::{EmbeddedPath, WalkerState};

/// Exact transition-kernel oracle over rationals.
pub type ExactDistributionQ = walk::ExactDistribution<num_rational::BigRational>;
pub type ExactDistribution64 = walk::ExactDistribution<f64>;

pub type CurvePoint64 = stats::CurvePoint<f64>;
pub type ScalingEstimate64 = stats::ScalingEstimate<f64>;
pub type StableSpec64 = limit::StableSpec<f64>;
pub type StableSpec32 = limit::StableSpec<f32>;
pub type GridLocalTime64 = limit::GridLocalTime<f64>;
pub type LimitSample64 = limit::LimitSample<f64>;
pub type Comparison64 = limit::Comparison<f64>;
