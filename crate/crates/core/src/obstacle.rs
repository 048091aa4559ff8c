//! Time stepping of the parabolic obstacle problem for the potential
//! variable, recovery of the freezing map, nucleation detection, and
//! trajectory gluing.
//!
//! Each implicit step solves
//!
//!   w⁺ = argmin over {0 ≤ z ≤ w}  of  ‖z − w‖²/(2Δt) + ¼‖∇z‖² + ½⟨ν, z⟩,
//!
//! a backward-Euler step of ∂_t w − ½Δw = −½ν·χ_{w>0} with the freezing
//! constraint handled by projection (PSOR sweeps with red-black ordering).
//! The upper obstacle z ≤ w enforces the monotone-in-time property of the
//! potential exactly, which also keeps the support from growing.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{CellSet, Grid};
use crate::tol;

/// Sentinel stored in freezing maps for cells that never freeze.
pub const NEVER_FROZEN: f64 = f64::INFINITY;

#[derive(Debug, Clone)]
pub struct ObstacleOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Stop early once max w drops below the freezing threshold.
    pub stop_when_frozen: bool,
    /// Stop once no cell has crossed the freezing threshold for this much
    /// time. Stopping while the never-region still holds a decisively
    /// positive potential is what gives the ∞-sentinel meaning; running to
    /// T_max instead would let exponential decay freeze everything.
    pub stop_after_quiet: Option<f64>,
    /// Snapshot cadence in steps (0 = only requested times).
    pub snapshot_stride: usize,
    /// Exact times at which (w, η) snapshots are required.
    pub snapshot_times: Vec<f64>,
}

impl ObstacleOptions {
    pub fn with_resolution(h: f64, t_max: f64) -> Self {
        ObstacleOptions {
            dt: 0.5 * h * h,
            t_max,
            stop_when_frozen: true,
            stop_after_quiet: Some(0.01),
            snapshot_stride: 0,
            snapshot_times: Vec::new(),
        }
    }
}

/// One stored time slice.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub w: ScalarField,
    /// η at this time recovered by the backward difference −2Δw/Δt.
    pub eta: ScalarField,
}

/// Nucleation / topology events of the active set.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TopologyEvent {
    pub time: f64,
    pub step: usize,
    pub components_before: usize,
    pub components_after: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum EventKind {
    /// Active set split into more components.
    Nucleation,
    /// An interior component (diameter > 2 cells) vanished in one step.
    Jump,
}

#[derive(Debug, Clone)]
pub struct ObstacleTrajectory {
    pub grid: Grid,
    pub dt: f64,
    pub tol_w: f64,
    pub steps_taken: usize,
    pub final_time: f64,
    /// First time w(x) dropped to the threshold, per cell (∞-sentinel for
    /// cells still active at the end).
    pub freeze_step: Vec<f64>,
    pub w_initial: ScalarField,
    pub w_final: ScalarField,
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<TopologyEvent>,
    /// max over steps of the node-wise monotonicity violation (should be 0
    /// by construction).
    pub monotone_violation: f64,
    /// max complementarity residual across steps.
    pub complementarity_violation: f64,
    /// max over steps of |A_{k+1} \ A_k| in cells (tol-band leakage).
    pub nesting_violation_cells: usize,
    /// ∫∫ η dt dx over the simulated window, accumulated exactly as
    /// 2(∫w_0 − ∫w_end). The backward-difference recovery of η makes
    /// occupation + 2∫w_end = 2∫w_0 an exact identity; for trajectories
    /// run to full decay the occupation alone approaches 2∫w_0.
    pub occupation: f64,
    pub initial_potential_mass: f64,
    pub final_potential_mass: f64,
}

impl ObstacleTrajectory {
    /// Relative residual of the occupation identity
    /// |∫∫η + 2∫w_end − 2∫w_0| / (2∫w_0).
    pub fn occupation_identity_residual(&self) -> f64 {
        let total = 2.0 * self.initial_potential_mass;
        if total <= 0.0 {
            return 0.0;
        }
        ((self.occupation + 2.0 * self.final_potential_mass - total) / total).abs()
    }
}

/// Evolve the obstacle problem from w(0) = Δ⁻¹(ν−μ).
///
/// `w0` must be the (clipped, nonnegative) initial potential; ν is the
/// target density. The equation sees no domain boundary: the upper
/// obstacle keeps the support inside {w0 > 0} automatically.
pub fn run_obstacle(
    w0: &ScalarField,
    nu: &ScalarField,
    opts: &ObstacleOptions,
) -> Result<ObstacleTrajectory> {
    let g = w0.grid;
    assert_eq!(g, nu.grid);
    let dt = opts.dt;
    let tol_w = tol::tol_w(dt);
    let psor_tol = tol::psor_tol(dt);
    let n = g.n_cells();
    let inv_h2 = 1.0 / (g.h * g.h);
    let two_d = if g.dim == 1 { 2.0 } else { 4.0 };
    // A = I/Δt + ½(-Δ_h): diagonal and off-diagonal coefficients.
    let diag = 1.0 / dt + 0.5 * two_d * inv_h2;
    let off = 0.5 * inv_h2;
    let omega = if g.dim == 1 { 1.5 } else { 1.7 };

    let mut w: Vec<f64> = w0.values.iter().map(|&x| x.max(0.0)).collect();
    let w_init = ScalarField::from_values(g, w.clone());
    let init_mass = w_init.integral();
    let mut freeze_step = vec![NEVER_FROZEN; n];
    for (p, &x) in w.iter().enumerate() {
        if x <= tol_w {
            freeze_step[p] = 0.0;
        }
    }
    let mut prev_active: Vec<bool> = w.iter().map(|&x| x > tol_w).collect();
    let (_, mut prev_components) = CellSet { grid: g, bits: prev_active.clone() }.components(None);

    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut events = Vec::new();
    let mut monotone_violation = 0.0f64;
    let mut complementarity_violation = 0.0f64;
    let mut nesting_violation_cells = 0usize;

    let mut z = w.clone();
    let max_steps = (opts.t_max / dt).round() as usize;
    let mut step = 0usize;
    let mut last_crossing = 0.0f64;
    let mut want_snapshot: Vec<f64> = opts.snapshot_times.clone();
    want_snapshot.sort_by(|a, b| a.partial_cmp(b).unwrap());

    while step < max_steps {
        step += 1;
        let t = step as f64 * dt;
        // Will this step be recorded? Snapshot steps need the previous w
        // for the backward-difference η.
        let stride_hit = opts.snapshot_stride > 0 && step % opts.snapshot_stride == 0;
        let time_hit = want_snapshot.first().map_or(false, |&ts| t + 1e-12 >= ts);
        let record = stride_hit || time_hit || step == max_steps;
        let w_prev = if record { Some(w.clone()) } else { None };
        // PSOR sweeps for the constrained backward-Euler step, warm-started
        // at the previous level (red-black ordering keeps the sweep
        // deterministic under any parallel split).
        let mut sweeps = 0usize;
        loop {
            sweeps += 1;
            for color in 0..2 {
                for j in 0..g.ny {
                    let row = j * g.nx;
                    let start = (color + j) % 2;
                    let mut i = start;
                    while i < g.nx {
                        let p = row + i;
                        let cap = w[p];
                        if cap > 0.0 {
                            let mut nbr = 0.0;
                            if i > 0 {
                                nbr += z[p - 1];
                            }
                            if i + 1 < g.nx {
                                nbr += z[p + 1];
                            }
                            if g.dim == 2 {
                                if j > 0 {
                                    nbr += z[p - g.nx];
                                }
                                if j + 1 < g.ny {
                                    nbr += z[p + g.nx];
                                }
                            }
                            let rhs = w[p] / dt - 0.5 * nu.values[p] + off * nbr;
                            let gs = rhs / diag;
                            let relaxed = z[p] + omega * (gs - z[p]);
                            z[p] = relaxed.clamp(0.0, cap);
                        }
                        i += 2;
                    }
                }
            }
            // Projected-residual convergence check every few sweeps.
            if sweeps % 4 == 0 || sweeps >= tol::PSOR_MAX_SWEEPS {
                let mut worst = 0.0f64;
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let p = j * g.nx + i;
                        let cap = w[p];
                        if cap <= 0.0 {
                            continue;
                        }
                        let mut nbr = 0.0;
                        if i > 0 {
                            nbr += z[p - 1];
                        }
                        if i + 1 < g.nx {
                            nbr += z[p + 1];
                        }
                        if g.dim == 2 {
                            if j > 0 {
                                nbr += z[p - g.nx];
                            }
                            if j + 1 < g.ny {
                                nbr += z[p + g.nx];
                            }
                        }
                        // residual of A z = b (≥ 0 at the lower obstacle,
                        // ≤ 0 at the upper obstacle, 0 in between).
                        let res = w[p] / dt - 0.5 * nu.values[p] + off * nbr - diag * z[p];
                        let viol = if z[p] <= 0.0 {
                            (res).max(0.0) // pushing below zero is fine
                        } else if z[p] >= cap {
                            (-res).max(0.0)
                        } else {
                            res.abs()
                        };
                        worst = worst.max(viol);
                    }
                }
                if worst <= psor_tol {
                    break;
                }
                if sweeps >= tol::PSOR_MAX_SWEEPS {
                    return Err(Error::SolveDidNotConverge { residual: worst, iters: sweeps });
                }
            }
        }
        complementarity_violation = complementarity_violation.max(step_complementarity(
            g, &w, &z, nu, dt, diag, off,
        ));
        // Adopt the step; track monotonicity and freezing crossings.
        let mut max_w = 0.0f64;
        let mut crossed = false;
        for p in 0..n {
            let newv = z[p];
            monotone_violation = monotone_violation.max(newv - w[p]);
            if freeze_step[p].is_infinite() && newv <= tol_w {
                freeze_step[p] = t;
                crossed = true;
            }
            w[p] = newv;
            max_w = max_w.max(newv);
        }
        if crossed {
            last_crossing = t;
        }
        // Active-set nesting and topology events.
        let active: Vec<bool> = w.iter().map(|&x| x > tol_w).collect();
        for p in 0..n {
            if active[p] && !prev_active[p] {
                nesting_violation_cells += 1;
            }
        }
        let active_set = CellSet { grid: g, bits: active.clone() };
        let (labels, comps) = active_set.components(None);
        if comps > prev_components {
            events.push(TopologyEvent {
                time: t,
                step,
                components_before: prev_components,
                components_after: comps,
                kind: EventKind::Nucleation,
            });
        } else if comps < prev_components {
            // A component vanished: classify as a jump when an interior
            // component of diameter > 2 cells disappeared within one step.
            let prev_set = CellSet { grid: g, bits: prev_active.clone() };
            let (prev_labels, prev_comps) = prev_set.components(None);
            let mut survived = vec![false; prev_comps];
            let mut extent: Vec<(usize, usize, usize, usize)> =
                vec![(usize::MAX, 0, usize::MAX, 0); prev_comps];
            for p in 0..n {
                if prev_active[p] {
                    let l = prev_labels[p];
                    if active[p] {
                        survived[l] = true;
                    }
                    let (i, j) = (p % g.nx, p / g.nx);
                    let e = &mut extent[l];
                    e.0 = e.0.min(i);
                    e.1 = e.1.max(i);
                    e.2 = e.2.min(j);
                    e.3 = e.3.max(j);
                }
            }
            let big_vanished = (0..prev_comps).any(|l| {
                !survived[l] && (extent[l].1 - extent[l].0 > 2 || extent[l].3 - extent[l].2 > 2)
            });
            if big_vanished {
                events.push(TopologyEvent {
                    time: t,
                    step,
                    components_before: prev_components,
                    components_after: comps,
                    kind: EventKind::Jump,
                });
            }
        }
        let _ = labels;
        prev_components = comps;
        prev_active = active;

        // Snapshots: η is the backward difference of the adopted step,
        // which preserves the time-integral identity exactly.
        if let Some(prev) = w_prev {
            if time_hit {
                want_snapshot.remove(0);
            }
            let eta_vals: Vec<f64> =
                (0..n).map(|p| 2.0 * (prev[p] - w[p]) / dt).collect();
            snapshots.push(Snapshot {
                step,
                time: t,
                w: ScalarField::from_values(g, w.clone()),
                eta: ScalarField::from_values(g, eta_vals),
            });
        }
        if max_w <= tol_w && opts.stop_when_frozen {
            break;
        }
        if let Some(quiet) = opts.stop_after_quiet {
            // Do not stop while snapshots are still pending.
            if t - last_crossing >= quiet && want_snapshot.is_empty() {
                break;
            }
        }
    }

    let w_final = ScalarField::from_values(g, w);
    let final_mass = w_final.integral();
    let occupation = 2.0 * (init_mass - final_mass);
    Ok(ObstacleTrajectory {
        grid: g,
        dt,
        tol_w,
        steps_taken: step,
        final_time: step as f64 * dt,
        freeze_step,
        w_initial: w_init,
        w_final,
        snapshots,
        events,
        monotone_violation,
        complementarity_violation,
        nesting_violation_cells,
        occupation,
        initial_potential_mass: init_mass,
        final_potential_mass: final_mass,
    })
}

fn step_complementarity(
    g: Grid,
    w: &[f64],
    z: &[f64],
    nu: &ScalarField,
    dt: f64,
    diag: f64,
    off: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = j * g.nx + i;
            let mut nbr = 0.0;
            if i > 0 {
                nbr += z[p - 1];
            }
            if i + 1 < g.nx {
                nbr += z[p + 1];
            }
            if g.dim == 2 {
                if j > 0 {
                    nbr += z[p - g.nx];
                }
                if j + 1 < g.ny {
                    nbr += z[p + g.nx];
                }
            }
            let res = diag * z[p] - (w[p] / dt - 0.5 * nu.values[p] + off * nbr);
            worst = worst.max((z[p] * res).abs().min(res.abs()));
        }
    }
    worst * dt
}

/// Freezing map recovered from a trajectory: per-cell first time the
/// potential crossed the freezing threshold, with the ∞-sentinel for
/// never-freezing cells (promoted with a flag when the trajectory ended
/// before the value decayed decisively).
#[derive(Debug, Clone)]
pub struct FreezingMap {
    pub grid: Grid,
    /// s(x): first threshold crossing; NEVER_FROZEN for the sentinel.
    pub s: Vec<f64>,
    /// Cells with s = 0 (already frozen in the initial data), inside U.
    pub initial_freezing: CellSet,
    /// Cells with 0 < s < ∞.
    pub sigma: CellSet,
    /// Cells carrying the ∞-sentinel.
    pub never: CellSet,
    /// Cells undecided at T_max (between tol_w and the promotion level),
    /// promoted to the sentinel and flagged here.
    pub undecided: CellSet,
}

pub fn freezing_map(traj: &ObstacleTrajectory, u_set: &CellSet) -> FreezingMap {
    let g = traj.grid;
    let promotion = tol::NEVER_FREEZE_FACTOR * traj.tol_w;
    let mut s = traj.freeze_step.clone();
    let mut initial = CellSet::empty(g);
    let mut sigma = CellSet::empty(g);
    let mut never = CellSet::empty(g);
    let mut undecided = CellSet::empty(g);
    for p in 0..g.n_cells() {
        if !u_set.bits[p] {
            continue;
        }
        if s[p] == 0.0 {
            initial.bits[p] = true;
        } else if s[p].is_finite() {
            sigma.bits[p] = true;
        } else {
            never.bits[p] = true;
            if traj.w_final.values[p] <= promotion {
                undecided.bits[p] = true;
            }
            s[p] = NEVER_FROZEN;
        }
    }
    FreezingMap { grid: g, s, initial_freezing: initial, sigma, never, undecided }
}

/// Nucleation events of a trajectory (count increases of the active set's
/// component count).
pub fn nucleation_events(traj: &ObstacleTrajectory) -> Vec<&TopologyEvent> {
    traj.events.iter().filter(|e| e.kind == EventKind::Nucleation).collect()
}

/// Glued trajectory data: potential slices of the concatenation of a base
/// run with a continuation started at t1, plus the consistency report
/// against a direct run for the glued target.
#[derive(Debug, Clone)]
pub struct GluedTrajectory {
    pub t1: f64,
    /// Freezing map of the glued evolution: s0 where s0 ≤ t1, else
    /// t1 + s1.
    pub s: Vec<f64>,
    /// Glued target ν1 = ν̃1 + ν0·χ_{s0 ≤ t1}.
    pub nu_glued: ScalarField,
    /// w(0) of the glued solution: w0(0) − w0(t1) + w1(0).
    pub w0_glued: ScalarField,
    /// sup-norm difference of glued vs direct potentials at the compared
    /// times (empty when no direct run was provided).
    pub direct_diffs: Vec<(f64, f64)>,
}

/// Glue a base trajectory with a continuation starting at t1.
///
/// Preconditions checked cell-wise: the continuation's active start set
/// must sit inside the base run's active set at t1.
pub fn glue_trajectories(
    base: &ObstacleTrajectory,
    base_nu: &ScalarField,
    t1: f64,
    cont: &ObstacleTrajectory,
    cont_nu: &ScalarField,
) -> Result<GluedTrajectory> {
    let g = base.grid;
    assert_eq!(g, cont.grid);
    let n = g.n_cells();
    // Inclusion: {s1 > 0} ⊂ {s0 > t1}, checked cell-wise via the initial
    // potential support of the continuation.
    let mut violations = 0usize;
    for p in 0..n {
        let s1_active = cont.w_initial.values[p] > cont.tol_w;
        let s0_alive = base.freeze_step[p] > t1 + 1e-12;
        if s1_active && !s0_alive {
            violations += 1;
        }
    }
    if violations > 0 {
        return Err(Error::GluingPrecondition { violating_cells: violations });
    }
    // Glued freezing map.
    let mut s = vec![0.0f64; n];
    for p in 0..n {
        let s0 = base.freeze_step[p];
        if s0 <= t1 {
            s[p] = s0;
        } else if cont.freeze_step[p].is_finite() {
            s[p] = t1 + cont.freeze_step[p];
        } else {
            s[p] = NEVER_FROZEN;
        }
    }
    // Glued target: the continuation's target plus the mass already frozen
    // by the base run at t1.
    let mut nu_glued = cont_nu.clone();
    for p in 0..n {
        if base.freeze_step[p] <= t1 && base.freeze_step[p] > 0.0
            || (base.freeze_step[p] == 0.0 && base_nu.values[p] > 0.0)
        {
            nu_glued.values[p] += base_nu.values[p];
        }
    }
    for v in nu_glued.values.iter_mut() {
        *v = v.min(1.0);
    }
    // w at time 0 of the glued solution.
    let w0_t1 = base
        .snapshots
        .iter()
        .min_by(|a, b| {
            (a.time - t1).abs().partial_cmp(&(b.time - t1).abs()).unwrap()
        })
        .map(|snap| snap.w.clone())
        .unwrap_or_else(|| base.w_final.clone());
    let w0_glued = base
        .w_initial
        .minus(&w0_t1)
        .plus(&cont.w_initial);
    Ok(GluedTrajectory { t1, s, nu_glued, w0_glued, direct_diffs: Vec::new() })
}

/// Compare a glued trajectory against a direct run for the glued target:
/// sup-norm differences of the potentials at matching times.
pub fn glue_consistency(
    glued: &GluedTrajectory,
    base: &ObstacleTrajectory,
    cont: &ObstacleTrajectory,
    direct: &ObstacleTrajectory,
) -> Vec<(f64, f64)> {
    let mut diffs = Vec::new();
    // At time 0.
    let d0 = glued
        .w0_glued
        .values
        .iter()
        .zip(&direct.w_initial.values)
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    diffs.push((0.0, d0));
    // At each continuation snapshot time t1 + t', glued w = w1(t').
    for snap in &cont.snapshots {
        let t = glued.t1 + snap.time;
        if let Some(dsnap) = direct
            .snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().partial_cmp(&(b.time - t).abs()).unwrap())
        {
            if (dsnap.time - t).abs() <= 1.5 * direct.dt {
                let d = snap
                    .w
                    .values
                    .iter()
                    .zip(&dsnap.w.values)
                    .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
                diffs.push((t, d));
            }
        }
    }
    let _ = base;
    diffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, DomainKind, DomainSpec};
    use crate::potential::{check_subharmonic_order, SubharmonicTols};

    /// Helper: μ = c·χ_(0,1), ν its closed-form shells, w0 the potential.
    fn interval_setup(n: usize, c: f64) -> (crate::grid::Domain, ScalarField, ScalarField, ScalarField) {
        let d = build_domain(&DomainSpec::new(DomainKind::Interval, n)).unwrap();
        let mu = ScalarField::shell_indicator(d.grid, 0.0, 1.0, 1).scaled(c).with_cap(1.0);
        let shells =
            crate::radial::targets_1d(&crate::radial::RadialDensity::constant(1, 0.0, c)).unwrap();
        let (a, b) = match shells.kind {
            crate::radial::ShellKind::Interval { a, b } => (a, b),
            _ => unreachable!(),
        };
        let nu = ScalarField::shell_indicator(d.grid, 0.0, a, 16)
            .plus(&ScalarField::shell_indicator(d.grid, b, 1.0, 16))
            .with_cap(1.0);
        let (_, pot) =
            check_subharmonic_order(&mu, &nu, &d.cells, SubharmonicTols::default()).unwrap();
        let mut w0 = pot.field;
        for v in w0.values.iter_mut() {
            *v = v.max(0.0);
        }
        (d, mu, nu, w0)
    }

    #[test]
    fn identical_pair_freezes_instantly() {
        let d = build_domain(&DomainSpec::new(DomainKind::Interval, 64)).unwrap();
        let mu = ScalarField::shell_indicator(d.grid, 0.0, 1.0, 1).scaled(0.5);
        let w0 = ScalarField::zeros(d.grid);
        let opts = ObstacleOptions::with_resolution(d.grid.h, 0.01);
        let traj = run_obstacle(&w0, &mu, &opts).unwrap();
        let fm = freezing_map(&traj, &d.cells);
        assert_eq!(fm.sigma.count(), 0);
        assert_eq!(fm.initial_freezing.count(), d.cells.count());
        assert!(traj.occupation.abs() < 1e-12);
    }

    #[test]
    fn occupation_identity_holds() {
        let (_d, _mu, nu, w0) = interval_setup(200, 0.5);
        // Quiescent stop: the identity includes the residual potential.
        let opts = ObstacleOptions::with_resolution(w0.grid.h, 2.0);
        let traj = run_obstacle(&w0, &nu, &opts).unwrap();
        assert!(
            traj.occupation_identity_residual() < 1e-12,
            "identity residual {}",
            traj.occupation_identity_residual()
        );
        assert!(traj.monotone_violation <= 0.0 + 1e-15);
        assert_eq!(traj.nesting_violation_cells, 0);
        // Full decay: the occupation alone converges to 2∫w0. The oracle
        // for ∫w0 is the exact piecewise integral 1/64.
        let mut opts_full = ObstacleOptions::with_resolution(w0.grid.h, 3.0);
        opts_full.stop_after_quiet = None;
        let full = run_obstacle(&w0, &nu, &opts_full).unwrap();
        let expect = 2.0 * full.initial_potential_mass;
        assert!(
            (full.occupation - expect).abs() <= 0.02 * expect,
            "occupation {} vs 2∫w0 {}",
            full.occupation,
            expect
        );
        assert!((full.initial_potential_mass - 1.0 / 64.0).abs() < 1e-4);
    }

    #[test]
    fn subcritical_half_density_freezes_monotonically_from_ends() {
        let (d, _mu, nu, w0) = interval_setup(200, 0.5);
        let opts = ObstacleOptions::with_resolution(w0.grid.h, 2.0);
        let traj = run_obstacle(&w0, &nu, &opts).unwrap();
        let fm = freezing_map(&traj, &d.cells);
        assert!(nucleation_events(&traj).is_empty(), "events: {:?}", traj.events);
        // s increasing on (0, a), decreasing on (b, 1); the never region
        // sits strictly inside.
        let g = d.grid;
        let s_at = |x: f64| -> f64 {
            let (i, j) = g.locate(x, 0.0).unwrap();
            fm.s[g.idx(i, j)]
        };
        assert!(s_at(0.05) < s_at(0.12) && s_at(0.12) < s_at(0.2), "left monotone");
        assert!(s_at(0.8) > s_at(0.88) && s_at(0.88) > s_at(0.95), "right monotone");
        assert!(fm.never.contains(g.locate(0.5, 0.0).unwrap().0, 0), "center never freezes");
        // Boundary saturation screen: every boundary cell of U sees Σ
        // within 3 cells.
        let near = fm.sigma.dilate(3);
        for idx in d.cells.boundary_cells().iter_cells() {
            assert!(near.bits[idx], "boundary cell {idx} has no Σ within 3h");
        }
    }

    #[test]
    fn complementarity_within_tolerance() {
        let (_d, _mu, nu, w0) = interval_setup(128, 0.5);
        let opts = ObstacleOptions::with_resolution(w0.grid.h, 0.05);
        let traj = run_obstacle(&w0, &nu, &opts).unwrap();
        assert!(
            traj.complementarity_violation <= 1e-6,
            "complementarity {}",
            traj.complementarity_violation
        );
    }

    #[test]
    fn degenerate_glue_times() {
        let (d, _mu, nu, w0) = interval_setup(128, 0.5);
        let mut opts = ObstacleOptions::with_resolution(w0.grid.h, 1.0);
        opts.snapshot_stride = 100;
        let traj = run_obstacle(&w0, &nu, &opts).unwrap();
        // t1 = 0: the glued evolution is the continuation itself.
        let glued0 = glue_trajectories(&traj, &nu, 0.0, &traj, &nu).unwrap();
        for p in d.cells.iter_cells() {
            if traj.freeze_step[p] > 0.0 {
                assert!(
                    (glued0.s[p] - traj.freeze_step[p]).abs() < 1e-12
                        || (glued0.s[p].is_infinite() && traj.freeze_step[p].is_infinite())
                );
            }
        }
        // t1 beyond total freezing: the base run determines everything that
        // ever freezes.
        let t_late = traj.final_time + 1.0;
        let frozen_zero = ScalarField::zeros(d.grid);
        let cont_opts = ObstacleOptions::with_resolution(w0.grid.h, 0.01);
        let cont = run_obstacle(&frozen_zero, &nu, &cont_opts).unwrap();
        let glued1 = glue_trajectories(&traj, &nu, t_late, &cont, &ScalarField::zeros(d.grid))
            .unwrap();
        for p in d.cells.iter_cells() {
            if traj.freeze_step[p].is_finite() {
                assert!((glued1.s[p] - traj.freeze_step[p]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn glued_equals_direct_run() {
        // Base run for μ = ½χ; cut at t1, continue with the maximal target
        // of the remaining active density, compare against the direct run.
        let (d, mu, nu, w0) = interval_setup(200, 0.5);
        let g = d.grid;
        let t1 = 0.01;
        let mut opts = ObstacleOptions::with_resolution(g.h, 1.0);
        opts.snapshot_times = vec![t1];
        opts.snapshot_stride = 200;
        let base = run_obstacle(&w0, &nu, &opts).unwrap();
        let snap = base
            .snapshots
            .iter()
            .find(|s| (s.time - t1).abs() <= 1.5 * base.dt)
            .expect("t1 snapshot");
        // Continuation initial data: the active density at t1.
        let mu1 = snap.eta.clone();
        // Its maximal target: LP on the active set.
        let active = snap.w.support_mask(base.tol_w);
        let w = crate::primal_dual::WeightSpec::new(
            crate::primal_dual::WeightKind::QuadraticRadial {
                amplitude: 2.0,
                curvature: 1.0,
                center: (0.5, 0.0),
            },
            &active,
        )
        .unwrap();
        let mu1_c = mu1.restricted_to(&active).with_cap(2.0);
        let (p1, _d1, rep) = crate::primal_dual::solve_primal_dual(
            &mu1_c,
            &w,
            &active,
            &crate::primal_dual::SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.status, crate::primal_dual::SolveStatus::Converged);
        let mut opts1 = ObstacleOptions::with_resolution(g.h, 1.0);
        opts1.snapshot_stride = 200;
        let mut w1_0 = p1.v.clone();
        for v in w1_0.values.iter_mut() {
            *v = v.max(0.0);
        }
        let cont = run_obstacle(&w1_0, &p1.nu, &opts1).unwrap();
        let glued = glue_trajectories(&base, &nu, t1, &cont, &p1.nu).unwrap();
        // Direct run with the glued target.
        let f = glued.nu_glued.minus(&mu);
        let pot = crate::potential::newtonian_potential(&f, None).unwrap();
        let mut w0_direct = pot.field;
        for v in w0_direct.values.iter_mut() {
            *v = v.max(0.0);
        }
        let mut opts_direct = ObstacleOptions::with_resolution(g.h, 1.0);
        opts_direct.snapshot_stride = 200;
        let direct = run_obstacle(&w0_direct, &glued.nu_glued, &opts_direct).unwrap();
        let diffs = glue_consistency(&glued, &base, &cont, &direct);
        let worst = diffs.iter().fold(0.0f64, |m, &(_, dv)| m.max(dv));
        let band = 2.0 * (g.h + base.dt);
        assert!(worst <= band, "glued-vs-direct sup diff {worst} > {band} ({diffs:?})");
    }
}

