//! Analytic limit targets, empirical verification over measure sequences,
//! local rate estimates and the conjugate curve.

mod corollary;
mod l0;
mod target;
mod verify;

pub use corollary::{
    check_curve_hypotheses, corollary_curve, curve_grid, solve_t_z, z_range, CurvePoint,
    CurveReport,
};
pub use l0::{default_eps_grid, l0_estimate, L0Estimate};
pub use target::{grid_inf_positive, ps_limit_target, ps_limit_target_with, LimitTarget};
pub use verify::{
    extrapolate, verify_theorem, Diagnostics, IntervalKind, PerN, Scenario, SeqRule, Verdict,
    VerificationReport, DEFAULT_N_GRID,
};
