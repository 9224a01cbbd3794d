//! Deterministic simulator and analysis toolkit for a two-variable
//! differentiation–synthesis model of cultural evolution.
//!
//! Cultures evolve a concept count D and a synthesis level S under an
//! exogenous, linearly growing concept hierarchy, optionally exchanging D and
//! S with other cultures. The crate integrates scenarios with fixed-step RK4,
//! classifies trajectories into cultural regimes, sweeps parameter grids into
//! regime maps, bisects regime boundaries, and fits coefficients to observed
//! trajectories by simulation-based least squares. The `culturedyn` binary
//! exposes all of it on the command line.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod export;
pub mod figures;
pub mod integrator;
pub mod model;
pub mod scenario_file;
pub mod sweep;

pub use analysis::{
    classify_regime, cycle_averages, find_extrema, relative_amplitude, ClassifierThresholds,
    ExtremaList, RegimeLabel, RegimeReport,
};
pub use error::{Error, Result};
pub use export::{
    export_regime_map_csv, export_trajectory_csv, format_significant, parse_trajectory_csv,
    render_svg_plot, SeriesRef, SeriesSelection, Variable,
};
pub use figures::{
    expected_label, preset_scenario, reproduce_figure, FigureId, FigureReproduction,
};
pub use integrator::{
    integrate, refine_until_converged, CultureSeries, EventKind, TrajectoryEvent, TrajectorySet,
};
pub use model::{
    eval_derivatives, eval_growth_factor, hierarchy_level, CouplingMatrices, CultureParams,
    CultureRates, CultureSetup, CultureState, DerivativeVector, Scenario,
};
pub use scenario_file::{parse_scenario, parse_thresholds, serialize_scenario};
pub use sweep::{
    fit_parameters, run_sweep, trace_regime_boundary, AxisSpec, FitResult, ParamPath, RegimeMap,
    SweepOptions,
};
