//! Periodic spectral toolkit for Littlewood–Paley analysis.
//!
//! The crate models functions on a torus of configurable period, builds
//! dyadic partitions of adjustable size, applies paradifferential operators
//! and the global paracomposition, and measures the smoothing orders of the
//! associated remainders through log-slope fits.
pub mod dyadic;
pub mod error;
pub mod paracomp;
pub mod paradiff;
pub mod report;
pub mod spectral;
pub mod suites;
pub mod waterwave;
pub mod wkb;

pub use dyadic::{CutoffProfile, DyadicSystem};
pub use error::{Error, Result};
pub use paradiff::{CutoffPair, SeparableSymbol};
pub use report::DecayReport;
pub use spectral::{FrequencyProfile, GridFunction, NormKind, TrigSum};
