//! Integer mutation distributions and Integer Evolution Strategies.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: single-variable discrete mutation laws (discrete
//!   uniform, shifted binomial, truncated normal, double geometric), their
//!   step-size calibration and entropies.
//! * [`correlate`]: correlated lattice mutations built from plane rotations,
//!   and the forced-normal covariance path.
//! * [`problems`]: integer Sphere and the quadratic benchmark family.
//! * [`strategies`]: the (1+1) and population-based integer evolution
//!   strategies.
//! * [`experiments`]: scans that regenerate the tabular data behind the
//!   calibration, rotation, entropy and benchmark studies.
//! * [`output`]: CSV and line-delimited JSON writers shared by the CLI.
//!
//! All randomness flows through an explicit [`RandomSource`]; nothing in the
//! crate touches global state.

pub mod correlate;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod output;
pub mod problems;
pub mod rng;
pub mod stats;
pub mod strategies;

pub use correlate::{AngleVector, CovarianceMatrix, IntegerVector, StepSizeVector};
pub use distributions::{DistParam, DistributionKind};
pub use error::{Error, Result};
pub use problems::{HessianKind, Objective, QuadraticInstance};
pub use rng::RandomSource;
pub use strategies::{EsConfig, EsVariant, RunRecord};
