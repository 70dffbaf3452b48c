//! Orthogonal matching pursuit (OMP) experiments: sparse signal generation,
//! the pursuit itself, lower bounds on its exact-recovery probability that
//! account for how unevenly a signal's energy is spread across its support,
//! and a Monte Carlo harness that checks those bounds.

pub mod bounds;
pub mod error;
pub mod montecarlo;
pub mod numeric;
pub mod omp;
pub mod optimize;
pub mod phi;
pub mod signals;

pub use bounds::{bound_curve, new_bound, tropp_bound, BoundKind, BoundQuery, BoundResult};
pub use error::{Error, Result};
pub use montecarlo::{run_experiment, ErrorPolicy, ExperimentConfig, ExperimentResult, PointResult};
pub use omp::{run_omp, OmpResult};
pub use phi::{PhiFunction, PhiValidationReport};
pub use signals::{SensingMatrix, SignalCase, SparseSignal, StreamKey};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
