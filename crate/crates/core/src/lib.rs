//! Bat algorithm optimizer together with two analysis tools: empirical
//! global-convergence checks (monotone best fitness, hit probability on the
//! optimality region) and the reduced linear model of a bat's motion whose
//! dynamic matrix yields the stable `(l, m)` parameter triangle.
//!
//! Data-parallel loops (replica fan-out, grid rasterization) run on rayon when
//! the `parallel` feature is enabled (the default) and sequentially otherwise.
//! Results are assembled in index order either way, so outputs never depend on
//! scheduling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod dynamics;
pub mod engine;
mod error;
pub mod objective;
pub mod parallel;

pub use convergence::{
    check_monotone, estimate_hit_probability, optimal_state_hit, ConvergenceTarget,
    HitProbabilityCurve, Monotonicity,
};
pub use dynamics::{
    dynamic_matrix, eigenvalues, iterate_trajectory, rasterize_region, recursion_residual,
    region_verdict, DynamicParams, RegionRaster, StabilityReport, Trajectory, TrajectoryState,
    Verdict,
};
pub use engine::{run, BaParams, BatState, RunTrace, SwarmState, TraceRecord};
pub use error::{Error, Result};
pub use objective::{list_suite, Objective, ObjectiveSpec};
