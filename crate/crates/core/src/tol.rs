//! Centralized solver tolerances.
//!
//! Every threshold used by the solvers is defined here with its rationale,
//! so that no module carries ad-hoc magic numbers. Grid-dependent bands
//! (anything scaling with h or Δt) are expressed as functions.

/// Relative tolerance for conjugate-gradient Poisson solves.
///
/// The linear system is symmetric positive definite and well below grid
/// error at this level; 1e-10 leaves the discretization error dominant.
pub const CG_REL_TOL: f64 = 1e-10;

/// Hard iteration cap for CG; reached only on ill-posed inputs.
pub const CG_MAX_ITERS: usize = 200_000;

/// Bisection tolerance for closed-form shell radii.
///
/// Moment equations are evaluated in exact piecewise-polynomial arithmetic,
/// so the bisection can be driven to near machine precision.
pub const BISECTION_TOL: f64 = 1e-13;

/// Residual bound stored with a `TargetShell`: the defining moment
/// equations must be satisfied to this accuracy.
pub const SHELL_RESIDUAL_TOL: f64 = 1e-10;

/// Default relative duality-gap tolerance for the primal-dual solve.
pub const GAP_TOL: f64 = 1e-6;

/// Default iteration cap for the primal-dual solve.
pub const PD_MAX_ITERS: usize = 200_000;

/// Potential positivity band: `tol_v(h, f_max)` bounds how negative a
/// discrete potential of an admissible pair may dip, and how large it may
/// be outside U. Quadratic in h because the continuum potential decays
/// quadratically off its zero set.
pub fn tol_v(h: f64, f_max: f64) -> f64 {
    10.0 * h * h * f_max.max(1.0)
}

/// Mass tolerance for closed-form (exactly balanced) density pairs.
pub const MASS_TOL_EXACT: f64 = 1e-8;

/// Mass tolerance for pairs where ν came from a binarized grid solve:
/// the threshold step can displace up to about a cell-width of mass along
/// the free boundary.
pub fn mass_tol_binarized(h: f64, perimeter: f64) -> f64 {
    (2.0 * h * perimeter).max(MASS_TOL_EXACT)
}

/// Obstacle-step freezing threshold. With backward Euler the potential
/// decreases by about Δt/2 per step where the target density is 1, so a
/// Δt/4 threshold is crossed within one step of the true freezing time.
pub fn tol_w(dt: f64) -> f64 {
    0.25 * dt
}

/// Factor above `tol_w` at which an unfrozen node at T_max is classified
/// as never-freezing rather than undecided.
pub const NEVER_FREEZE_FACTOR: f64 = 100.0;

/// PSOR complementarity tolerance per obstacle step, relative to Δt.
///
/// The step residual has magnitude ~1/2 on active cells, so 1e-10/Δt-scaled
/// slack keeps complementarity far below the freezing threshold.
pub fn psor_tol(dt: f64) -> f64 {
    1e-10 / dt
}

/// Cap on PSOR sweeps within one implicit step.
pub const PSOR_MAX_SWEEPS: usize = 2_000;

/// Fraction of |Σ| above which primal/dual disagreement on the transition
/// zone flags an unconverged solve.
pub const AMBIGUITY_FRACTION: f64 = 0.05;

/// Fraction of unstopped paths above which a Monte Carlo batch is flagged.
pub const MC_UNSTOPPED_FRACTION: f64 = 1e-3;
