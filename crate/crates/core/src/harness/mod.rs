//! Convergence experiments: reference solutions, temporal errors, fitted
//! orders, multiplier and exercise-region exports, and plots.

mod experiment;
mod exports;
mod metrics;
mod plot;
mod reference;
mod spec;

pub use experiment::{
    run_experiment, run_on, run_on_observed, with_jobs, ErrorReport, ErrorRow, MethodFit, RunOptions,
};
pub use exports::{exercise_flags, export_exercise_region, export_multipliers, MultiplierExport, RegionExport};
pub use metrics::{fit_order, temporal_error, FitWindow, OrderFit};
pub use plot::render_plot;
pub use reference::{compute_reference, reference_method, ReferenceCache, ReferenceMeta};
pub use spec::{ExperimentSpec, GridSpec, Problem, BUNDLED_SPECS};
