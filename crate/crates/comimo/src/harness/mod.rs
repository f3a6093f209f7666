//! Scenario configuration, Monte-Carlo experiment drivers, and output
//! persistence.

pub mod experiment;
pub mod output;
pub mod scenario;

pub use experiment::{
    run_distance_sweep, run_histogram_experiment, run_snr_sweep, run_trajectory_experiment,
};
pub use output::{emit_outputs, Cell, ExperimentOutput, Table};
pub use scenario::ScenarioSpec;
