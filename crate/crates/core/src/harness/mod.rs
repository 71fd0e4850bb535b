//! Scenario ingestion, end-to-end runs, comparison reports and their
//! persisted artifacts.

pub mod config;
pub mod report;
pub mod run;

pub use config::{Exponent, FieldSpec, LorentzPair, ScenarioConfig};
pub use report::{
    decay_report, lorentz_dominance_report, verify_concentration_dominance, ComparisonReport, DecayTable,
    DominanceReport, LorentzRow,
};
pub use run::{run_elliptic, run_scenario, run_scenario_file, EllipticComparison, RunOutcome};

/// Process exit codes of the command-line runner.
pub mod exit_code {
    pub const PASS: i32 = 0;
    pub const VERIFICATION_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const SOLVER_FAILURE: i32 = 3;
}

/// Maps a library error to the runner's exit code.
pub fn error_exit_code(err: &crate::Error) -> i32 {
    if err.is_solver_failure() {
        exit_code::SOLVER_FAILURE
    } else {
        exit_code::CONFIG_ERROR
    }
}
