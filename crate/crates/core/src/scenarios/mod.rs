//! Config-driven experiments: transient QFI curves, steady-state sweeps,
//! the local-temperature heatmap and the validation suite.

pub mod config;
pub mod runner;
pub mod validation;

pub use config::{BetaAxis, Scenario, ScenarioConfig, ScenarioKind};
pub use runner::{
    run_heatmap, run_steady_sweep, run_transient, write_heatmap_csv, write_sweep_csv, write_transient_csv, HeatCell,
    HeatmapResult, Region, SweepResult,
};
pub use validation::{bundled, checks, run_checks, CheckOutcome, BUNDLED};
