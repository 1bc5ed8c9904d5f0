//! JSON run descriptions, task execution and file output.

mod output;
mod recipes;
mod run;
mod runspec;

pub use output::{fmt_f64, FileRecord};
pub use recipes::{reproduce, Recipe, RecipeOptions};
pub use run::{
    config_hash, min_abs_transmission, run, run_in, sweep, winding_summary, RunReport, SweepResult, SweepRow,
    SweepThreshold, TaskStatus, WindingSummary, DEFAULT_OUTPUT_DIR, MANIFEST_NAME,
};
pub use runspec::{
    linspace, load_runspec, AtomSpec, CustomEnsemble, EnsembleSpec, GridSpec, PresetParams, ReservoirSpec,
    ResolvedPreset, RunSpec, SweepParameter, SweepTask, TaskSpec, ToleranceSpec, DEFAULT_GAMMA_TOT, DEFAULT_OMEGA_EG,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PHOTON_BOUND_OUT_DIR";
