//! Sweeps, verification suites and the command line.

pub mod cli;
pub mod config;
pub mod suite;
pub mod sweep;

pub use config::{AlphaGrid, SpaceSource, SweepConfig};
pub use suite::{run_verification_suite, PropertyResult, SuiteOptions, SuiteReport};
pub use sweep::{run_sweep, sweep_space, TradeoffCurve, TradeoffRow, CSV_COLUMNS};

/// The standard grid `alpha = 2^-3, 2^-2, ..., 2^6`.
pub fn standard_alphas() -> Vec<f64> {
    (-3..=6).map(|k| 2f64.powi(k)).collect()
}
