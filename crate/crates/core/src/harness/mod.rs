//! Monte Carlo simulation harness.

pub mod config;
pub mod metrics;
pub mod results;
pub mod sweep;
pub mod trial;

pub use config::{AnalysisConfig, CodeConfig, NoiseMode, SimConfig, SystemConfig};
pub use metrics::{compute_metrics, RateAccumulator, TrialMetrics};
pub use results::{read_results, write_results, MetricsRow, MetricsTable, OutputFormat, CSV_HEADER};
pub use sweep::{run_sweep, TrialFailure};
pub use trial::{run_trial, DecoderOutcome, SlotStats, SystemSetup, TrialResult};
