//! Experiment drivers: configuration, sweeps, batch statistics, persistence
//! of coincidence records, curve fits, and the command-line front end.

pub mod cli;
pub mod config;
pub mod fringe;
pub mod records;
pub mod sweep;

pub use cli::run_cli;
pub use config::{ConfigError, ConfigOverlay, InputSpec, Mode, RunConfig, SweepRange};
pub use fringe::{
    fit_fringe, fit_fringe_samples, fit_overlap, phase_difference_deg, FringeFit, OverlapFit,
};
pub use records::{filter_pair, parse_csv, to_csv, write_csv, CoincidenceRecord, CSV_HEADER};
pub use sweep::{
    joint_rate, run_baseline_batch, run_bell_decompose, run_teleport_batch, sweep_analyzer,
    sweep_overlap, BatchStats,
};
