//! Configuration, seeded runs, sweeps, gradient checks and file output.

pub mod config;
pub mod fit;
pub mod gradcheck;
pub mod io;
pub mod plot;
pub mod runner;

pub use config::{Algorithm, ExperimentConfig, InitStrategy, InputDistName};
pub use gradcheck::{gradcheck, GradCheckReport};
pub use plot::{emit_plot, Series};
pub use runner::{
    rate_sweep, run_experiment, select_best, write_experiment, write_sweep, ConfigSummary,
    Experiment, SeedRun, Sweep, SweepResult,
};
