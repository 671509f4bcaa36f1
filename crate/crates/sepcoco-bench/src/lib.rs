//! Experiment harness: config files, suite runner, CSV output and the
//! invariant checks behind `selftest`.

pub mod checks;
pub mod config;
pub mod suite;
pub mod tradeoff;

pub use config::{format_config, parse_config, ConfigError, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] sepcoco_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
