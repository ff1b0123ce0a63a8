//! Experiment harness: configuration, runs, convergence studies and output.

pub mod config;
pub mod experiments;
pub mod snapshot;

pub use config::{Example, ExperimentConfig, InitialProfile, PotentialChoice};
pub use experiments::{
    initial_data, initial_field, observed_rates, random_field, reference_solution, run_batch,
    run_convergence, run_convergence_against, run_simulation, simulate, write_convergence_csv,
    ConvergenceRow, ConvergenceStudy, ConvergenceTable, RunStatus, SimulationOutcome, StepRecord,
};
pub use snapshot::{read_snapshot, write_snapshot};
