//! Finite metric-space toolkit for the accuracy/privacy tradeoff of
//! metric-private mechanisms: packing numbers, entropic and diametric scales,
//! exponential and relaxed mechanisms, exact audits, and an experiment harness.

pub mod error;
pub mod gallery;
pub mod harness;
pub mod mechanism;
pub mod metric;
pub mod packing;
pub mod rng;
pub mod scales;

pub use error::{Error, Result};
pub use mechanism::{Mechanism, MechanismKind};
pub use metric::{DistanceMatrix, FiniteBimetricSpace, Label, Metric, PointId};
