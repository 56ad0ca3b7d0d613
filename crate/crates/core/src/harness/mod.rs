//! Dataset ingestion, the proxy corpus, sweeps and the three experiments.

pub mod config;
pub mod corpus;
pub mod dataset;
pub mod experiments;
pub mod sweep;

pub use config::{ConfigError, SweepGrid, TrialConfig};
pub use dataset::{ingest_dataset, DatasetError, DatasetIndex, FileDataset, DESK_WORDS, WORDS};
pub use experiments::{run_raw_experiment, run_synthetic_experiment, SyntheticReport};
pub use sweep::{read_csv, run_sweep, run_trial, write_csv, CsvRow, TrialResult, CSV_HEADER};
