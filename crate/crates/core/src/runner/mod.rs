//! Scenario configuration, presets, deterministic execution and file
//! outputs (series table, one report per check, manifest), plus sweeps.

mod config;
mod output;
mod presets;
mod run;
mod sweep;
mod verify;

pub use config::{
    CheckName, CheckParams, Conventions, ExtensionParams, FunctionalSettings, GeometryConfig, MeanValueParams, Mode,
    Perturbation, PerturbationConfig, QuadraticParams, ScenarioConfig,
};
pub use output::{
    fmt_f64, manifest_without_timestamp, series_anchor, series_csv, CheckSummary, Manifest, TrajectoryInfo,
    MANIFEST_FILE, REPORT_DIR, SERIES_FILE,
};
pub use presets::{preset, preset_forcing, PRESETS};
pub use run::{
    exit_code, initial_state, run_check, run_scenario, run_scenario_status, simulate, RunOutcome, EXIT_ERROR, EXIT_FAIL,
    EXIT_PASS, EXIT_VACUOUS,
};
pub use sweep::{expand_grid, points_from_configs, sweep, SweepAxis, SweepPoint, SweepRow, SweepTable};
pub use verify::{verify_path, verify_report_text, ReportCheck};
