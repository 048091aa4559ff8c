//! Canned end-to-end experiments producing pass/fail reports.
//!
//! Every expected quantity in a report carries an oracle description: a
//! closed form, an exact rational, an independent quadrature, or a
//! cross-module computation. All tolerances are pinned here.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::field::ScalarField;
use crate::grid::{
    build_domain, dyadic_decompose, rasterize_null_set, CellSet, DomainKind, DomainSpec,
    NullSegment,
};
use crate::obstacle::{
    freezing_map, glue_trajectories, nucleation_events, run_obstacle,
    ObstacleOptions,
};
use crate::primal_dual::{
    extract_transition_zone, moment_audit, solve_primal_dual, PrimalSolution, SolveOptions, TransitionZone, WeightKind, WeightSpec,
};
use crate::radial::{nucleation_quartic, targets_1d, targets_annulus, targets_ball, RadialDensity, ShellKind};

#[derive(Debug, Clone, serde::Serialize)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// Direction of the comparison: true means `measured <= bound`.
    pub upper: bool,
    pub oracle: String,
    pub pass: bool,
}

impl Criterion {
    fn le(name: &str, measured: f64, bound: f64, oracle: &str) -> Self {
        Criterion {
            name: name.into(),
            measured,
            bound,
            upper: true,
            oracle: oracle.into(),
            pass: measured <= bound,
        }
    }

    fn ge(name: &str, measured: f64, bound: f64, oracle: &str) -> Self {
        Criterion {
            name: name.into(),
            measured,
            bound,
            upper: false,
            oracle: oracle.into(),
            pass: measured >= bound,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, Default)]
pub struct ScenarioReport {
    pub id: String,
    pub inputs: BTreeMap<String, String>,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl ScenarioReport {
    fn new(id: &str) -> Self {
        ScenarioReport { id: id.into(), ..Default::default() }
    }

    fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.insert(key.into(), value.to_string());
    }

    fn push(&mut self, c: Criterion) {
        self.criteria.push(c);
    }

    fn finish(mut self) -> Self {
        self.passed = self.criteria.iter().all(|c| c.pass);
        self
    }
}

/// Fields a scenario wants persisted (the front end decides the format).
#[derive(Debug, Default)]
pub struct ScenarioArtifacts {
    pub fields: Vec<(String, ScalarField)>,
    pub sets: Vec<(String, CellSet)>,
}

pub struct ScenarioOutput {
    pub report: ScenarioReport,
    pub artifacts: ScenarioArtifacts,
}

fn quad_weight(u_set: &CellSet, center: (f64, f64)) -> Result<WeightSpec> {
    WeightSpec::new(
        WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center },
        u_set,
    )
}

/// LP solve wrapper: restrict μ to U and solve with scenario options.
fn lp(
    mu: &ScalarField,
    weight: &WeightSpec,
    u_set: &CellSet,
    opts: &SolveOptions,
) -> Result<(PrimalSolution, crate::primal_dual::DualCertificate, crate::primal_dual::PdReport, TransitionZone)>
{
    let mu_r = mu.restricted_to(u_set);
    let (p, d, rep) = solve_primal_dual(&mu_r, weight, u_set, opts)?;
    let tz = extract_transition_zone(&p, &d, weight, u_set);
    Ok((p, d, rep, tz))
}

/// Grid perimeter-scaled band for symmetric differences of rasterized
/// regions: 4h times the continuum perimeter of the expected region.
fn perimeter_band(h: f64, perimeter: f64) -> f64 {
    4.0 * h * perimeter
}

// ---------------------------------------------------------------------
// Radial / annulus baseline scenario.
// ---------------------------------------------------------------------

pub enum RadialDomain {
    Ball,
    Annulus { rho: f64 },
}

/// Radial baseline: closed-form shells vs the optimization, positivity of
/// the initial potential, and weight-independence of the transition zone.
pub fn scenario_radial(domain: RadialDomain, mu_level: f64, n: usize) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("radial");
    report.input("mu_level", mu_level);
    report.input("n", n);
    let spec = match domain {
        RadialDomain::Ball => DomainSpec::new(DomainKind::Ball, n),
        RadialDomain::Annulus { rho } => DomainSpec::new(DomainKind::Annulus { rho }, n),
    };
    let d = build_domain(&spec)?;
    let g = d.grid;
    let h = g.h;
    let (rho, kind_name) = match domain {
        RadialDomain::Ball => (0.0, "ball"),
        RadialDomain::Annulus { rho } => (rho, "annulus"),
    };
    report.input("domain", kind_name);

    // Closed-form shells.
    let density = RadialDensity::constant(2, rho, mu_level);
    let shell = match domain {
        RadialDomain::Ball => targets_ball(&density)?,
        RadialDomain::Annulus { .. } => targets_annulus(&density)?,
    };
    let (expected_set, perimeter, shell_desc) = match shell.kind {
        ShellKind::Ball { r_tilde } => (
            ScalarField::shell_indicator(g, r_tilde, 1.0, 16).support_mask(0.5),
            2.0 * std::f64::consts::PI * (1.0 + r_tilde),
            format!("shell ({r_tilde:.6}, 1) from the mass equation"),
        ),
        ShellKind::Annulus { r1, r2 } => (
            ScalarField::shell_indicator(g, rho, r1, 16)
                .plus(&ScalarField::shell_indicator(g, r2, 1.0, 16))
                .support_mask(0.5),
            2.0 * std::f64::consts::PI * (rho + r1 + r2 + 1.0),
            format!("shells ({rho:.4},{r1:.6}) ∪ ({r2:.6},1) from the moment equations"),
        ),
        ShellKind::Interval { .. } => unreachable!("radial scenario is 2D"),
    };
    report.push(Criterion::le(
        "shell residuals",
        shell.residuals.0.max(shell.residuals.1),
        crate::tol::SHELL_RESIDUAL_TOL,
        "nested bisection on exact moment integrals",
    ));
    if let ShellKind::Ball { r_tilde } = shell.kind {
        if (mu_level - 0.5).abs() < 1e-12 {
            report.push(Criterion::le(
                "closed-form inner radius vs 1/sqrt(2)",
                (r_tilde - std::f64::consts::FRAC_1_SQRT_2).abs(),
                1e-9,
                "mass equation solved exactly: 1 - r^2 = 1/2",
            ));
        }
    }

    // Optimization with the default weight.
    let mu = ScalarField::shell_indicator(g, rho, 1.0, 16).scaled(mu_level).with_cap(1.0);
    let w1 = quad_weight(&d.cells, (0.0, 0.0))?;
    let opts = SolveOptions { gap_tol: 1e-5, ..Default::default() };
    let (p1, d1, rep1, tz1) = lp(&mu, &w1, &d.cells, &opts)?;
    report.input("lp_status", format!("{:?}", rep1.status));
    report.push(Criterion::le("duality gap", rep1.gap, 1e-5 * p1.objective.max(1.0), "certified dual bound"));
    let sym = tz1.sigma.sym_diff(&expected_set.intersection(&d.cells)).measure();
    report.push(Criterion::le(
        "|Σ Δ closed-form shell|",
        sym,
        perimeter_band(h, perimeter),
        &shell_desc,
    ));
    if let ShellKind::Ball { r_tilde } = shell.kind {
        let never = d.cells.difference(&tz1.sigma).measure();
        let r_est = (never / std::f64::consts::PI).sqrt();
        report.push(Criterion::le(
            "inner radius estimate error",
            (r_est - r_tilde).abs(),
            2.0 * h,
            "area of the complement of Σ",
        ));
    }
    // No initial freezing: the potential is strictly positive inside.
    let interior = d.cells.erode(2);
    let mut min_v = f64::INFINITY;
    for idx in interior.iter_cells() {
        min_v = min_v.min(p1.v.values[idx]);
    }
    report.push(Criterion::ge(
        "min potential on eroded U",
        min_v,
        f64::MIN_POSITIVE,
        "positivity of the initial potential (empty initial freezing)",
    ));

    // Universality: a different radial weight gives the same zone.
    let w2 = WeightSpec::new(
        WeightKind::QuadraticRadial { amplitude: 3.0, curvature: 0.5, center: (0.0, 0.0) },
        &d.cells,
    )?;
    let (_p2, _d2, _rep2, tz2) = lp(&mu, &w2, &d.cells, &opts)?;
    report.push(Criterion::le(
        "|Σ(u1) Δ Σ(u2)| (universality)",
        tz1.sigma.sym_diff(&tz2.sigma).measure(),
        perimeter_band(h, perimeter),
        "radial weights share the optimizer",
    ));

    let mut artifacts = ScenarioArtifacts::default();
    artifacts.sets.push(("sigma".into(), tz1.sigma.clone()));
    artifacts.fields.push(("nu".into(), p1.nu.clone()));
    artifacts.fields.push(("v".into(), p1.v.clone()));
    artifacts.fields.push(("psi".into(), d1.psi.clone()));
    Ok(ScenarioOutput { report: report.finish(), artifacts })
}

// ---------------------------------------------------------------------
// Non-universality of the weight.
// ---------------------------------------------------------------------

/// The analytic counterexample weight 1 − 15x⁴y⁴ − ε|x|² against the
/// radial weight: the harmonic-extension probe at (1,0) and the symmetric
/// difference of the two transition zones.
pub fn scenario_non_universality(eps: f64, n: usize) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("non_universality");
    report.input("eps", eps);
    report.input("n", n);
    let d = build_domain(&DomainSpec::new(DomainKind::Ball, n))?;
    let g = d.grid;
    let h = g.h;
    if eps >= 90.0 / 2048.0 {
        report.notes.push(format!(
            "eps = {eps} is at or above 90/2048; the boundary-point sign argument degenerates"
        ));
    }

    // (a) Harmonic extension of the weight's trace on the circle of radius
    // 1/√2, continued to (1,0) as a harmonic polynomial. The weight is
    // sampled from the grid, so the probe carries O(h²) interpolation
    // error. The closed-form value of the probe is -45/2048 + eps/2.
    let kind = WeightKind::QuarticCross { eps };
    let u_field = ScalarField::from_fn(g, |x, y| kind.eval(x, y));
    let radius = std::f64::consts::FRAC_1_SQRT_2;
    let m = 4096usize;
    let max_mode = 16usize;
    let mut coeffs = vec![0.0f64; max_mode + 1];
    for s in 0..m {
        let th = 2.0 * std::f64::consts::PI * s as f64 / m as f64;
        let val = u_field.interp(radius * th.cos(), radius * th.sin());
        coeffs[0] += val / m as f64;
        for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
            *c += 2.0 * val * (k as f64 * th).cos() / m as f64;
        }
    }
    // Continuation of Σ c_k (r/R)^k cos kθ to r = 1, θ = 0.
    let mut psi_10 = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        psi_10 += c * (1.0 / radius).powi(k as i32);
    }
    let u_10 = kind.eval(1.0, 0.0);
    let probe = psi_10 - u_10;
    let expect = -45.0 / 2048.0 + eps / 2.0;
    report.push(Criterion::le(
        "harmonic extension probe at (1,0)",
        (probe - expect).abs(),
        5e-3,
        "trace extension of the quartic weight: closed form -45/2048 + eps/2",
    ));

    // (b) The two optimizations genuinely differ.
    let mu = ScalarField::shell_indicator(g, 0.0, 1.0, 16).scaled(0.5).with_cap(1.0);
    let w1 = quad_weight(&d.cells, (0.0, 0.0))?;
    let w2 = WeightSpec::new(kind, &d.cells)?;
    let opts = SolveOptions { dual_modes: 16, ..Default::default() };
    let (p1, _d1, rep1, tz1) = lp(&mu, &w1, &d.cells, &opts)?;
    let (p2, _d2, rep2, tz2) = lp(&mu, &w2, &d.cells, &opts)?;
    report.input("lp_status_radial", format!("{:?}", rep1.status));
    report.input("lp_status_quartic", format!("{:?}", rep2.status));
    report.push(Criterion::le(
        "gap (radial weight)",
        rep1.gap,
        crate::tol::GAP_TOL * p1.objective.max(1.0),
        "certified dual bound",
    ));
    report.push(Criterion::le(
        "gap (quartic weight)",
        rep2.gap,
        crate::tol::GAP_TOL * p2.objective.max(1.0),
        "certified dual bound",
    ));
    let perimeter = 2.0 * std::f64::consts::PI * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
    report.push(Criterion::ge(
        "|Σ(u1) Δ Σ(u2)| (non-universality)",
        tz1.sigma.sym_diff(&tz2.sigma).measure(),
        10.0 * perimeter_band(h, perimeter),
        "the quartic weight moves the zone by more than rasterization noise",
    ));

    let mut artifacts = ScenarioArtifacts::default();
    artifacts.sets.push(("sigma_radial".into(), tz1.sigma.clone()));
    artifacts.sets.push(("sigma_quartic".into(), tz2.sigma.clone()));
    artifacts.fields.push(("nu_quartic".into(), p2.nu.clone()));
    Ok(ScenarioOutput { report: report.finish(), artifacts })
}

// ---------------------------------------------------------------------
// Fourier mode / waiting time scenario.
// ---------------------------------------------------------------------

/// Single tangential mode on the ball: k-fold transition zone with
/// waiting-time pockets near the boundary.
pub fn scenario_fourier(k: usize, delta0: f64, n: usize) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("fourier");
    report.input("k", k);
    report.input("delta0", delta0);
    report.input("n", n);
    let d = build_domain(&DomainSpec::new(DomainKind::Ball, n))?;
    let g = d.grid;
    let h = g.h;
    let mu = ScalarField::from_fn_on(g, &d.cells, |x, y| {
        let r = (x * x + y * y).sqrt();
        let th = y.atan2(x);
        0.5 + delta0 * r.powi(k as i32) * (k as f64 * th).cos()
    })
    .with_cap(1.0);
    let w = quad_weight(&d.cells, (0.0, 0.0))?;
    let opts = SolveOptions {
        gap_tol: 1e-5,
        dual_modes: (2 * k + 2).max(16),
        ..Default::default()
    };
    let (p, _dual, rep, tz) = lp(&mu, &w, &d.cells, &opts)?;
    report.input("lp_status", format!("{:?}", rep.status));
    report.push(Criterion::le("duality gap", rep.gap, 1e-4 * p.objective.max(1.0), "certified dual bound"));

    // k-fold symmetry: rotating Σ by 2π/k changes it by at most the
    // rasterization band.
    let rot = 2.0 * std::f64::consts::PI / k as f64;
    let rotated = CellSet::from_fn(g, |x, y| {
        let (xr, yr) = (x * rot.cos() + y * rot.sin(), -x * rot.sin() + y * rot.cos());
        if let Some((i, j)) = g.locate(xr, yr) {
            tz.sigma.contains(i, j)
        } else {
            false
        }
    });
    let perimeter = 4.0 * std::f64::consts::PI;
    report.push(Criterion::le(
        "|Σ Δ rot_{2π/k} Σ| (k-fold pattern)",
        tz.sigma.sym_diff(&rotated).measure(),
        perimeter_band(h, perimeter),
        "the zone inherits the k-fold symmetry of the density",
    ));
    // The zone is genuinely non-annular.
    let never = d.cells.difference(&tz.sigma).measure();
    let r_eq = (never / std::f64::consts::PI).sqrt();
    let annulus_eq = ScalarField::shell_indicator(g, r_eq, 1.0, 8).support_mask(0.5);
    report.push(Criterion::ge(
        "|Σ Δ area-matched annulus|",
        tz.sigma.sym_diff(&annulus_eq.intersection(&d.cells)).measure(),
        10.0 * h,
        "lobed zone differs from any annulus beyond grid noise",
    ));

    // Waiting time: near-boundary cells that never freeze.
    for eps in [0.02, 0.05, 0.1] {
        let band = d.near_boundary_band(eps);
        let missing = band.difference(&tz.sigma).measure();
        report.push(Criterion::ge(
            &format!("|U_{eps} \\ Σ|"),
            missing,
            f64::MIN_POSITIVE,
            "waiting-time pockets persist near the boundary",
        ));
    }

    // Harmonic moment audit: mass, first moment, and the k-th mode.
    let rows = moment_audit(&tz.sigma, &mu.restricted_to(&d.cells), &[k]);
    for row in &rows {
        report.push(Criterion::le(
            &format!("moment audit {}", row.name),
            row.residual,
            2.0 * h,
            "quadrature of both sides of the harmonic balance",
        ));
    }
    // Exact value of the k-th moment of the single-mode density:
    // delta0 · π / (2k+2).
    let exact = delta0 * std::f64::consts::PI / (2.0 * k as f64 + 2.0);
    let mu_side = rows.last().map(|r| r.mu_side).unwrap_or(f64::NAN);
    report.push(Criterion::le(
        "μ-side k-th moment vs closed form",
        (mu_side - exact).abs(),
        2.0 * h,
        "∫ r^k cos kθ dμ = δ0 π / (2k+2) by orthogonality",
    ));

    // The tangential-decay ledger for the annulus construction with the
    // full e^{-√k} series: the k-th moment of μ equals
    // δ0 π e^{-√k}(1-2^{-(k+2)})/(k+2), while a zone missing the outer
    // ε-band could carry at most 2π(1-ε)^{k+2}/(k+2). Report the first
    // mode where the moment wins (forcing waiting time) for ε = 0.05.
    let eps_chain = 0.05f64;
    let mut k_star = None;
    for kk in 1..=2000usize {
        let lhs = delta0
            * std::f64::consts::PI
            * (-(kk as f64).sqrt()).exp()
            * (1.0 - 0.5f64.powi(kk as i32 + 2))
            / (kk as f64 + 2.0);
        let rhs = 2.0 * std::f64::consts::PI * (1.0 - eps_chain).powi(kk as i32 + 2)
            / (kk as f64 + 2.0);
        if lhs > rhs {
            k_star = Some(kk);
            break;
        }
    }
    if let Some(ks) = k_star {
        report.notes.push(format!(
            "series construction: moment bound forces |U_0.05 \\ Σ| > 0 from mode {ks} on \
             (sub-exponential e^{{-√k}} decay beats the (1-ε)^k geometric envelope)"
        ));
    }

    let mut artifacts = ScenarioArtifacts::default();
    artifacts.sets.push(("sigma".into(), tz.sigma.clone()));
    artifacts.fields.push(("nu".into(), p.nu.clone()));
    artifacts.fields.push(("mu".into(), mu));
    Ok(ScenarioOutput { report: report.finish(), artifacts })
}

// ---------------------------------------------------------------------
// One-dimensional nucleation scenario.
// ---------------------------------------------------------------------

/// The quartic density whose maximal evolution nucleates: exact shell
/// rationals, nonnegative closed-form potential, freezing-time bounds, a
/// topology event, and the linearization sandwich.
pub fn scenario_nucleation_1d(n: usize, t_max: f64) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("nucleation_1d");
    report.input("n", n);
    report.input("t_max", t_max);
    let d = build_domain(&DomainSpec::new(DomainKind::Interval, n))?;
    let g = d.grid;
    let poly = nucleation_quartic();
    let shell = targets_1d(&poly)?;
    let (a, b) = match shell.kind {
        ShellKind::Interval { a, b } => (a, b),
        _ => unreachable!(),
    };
    report.input("a", format!("{a:.12}"));
    report.input("b", format!("{b:.12}"));
    report.push(Criterion::le(
        "a vs 12397/100500",
        (a - 12397.0 / 100500.0).abs(),
        1e-9,
        "exact rational root of the mass/moment system",
    ));
    report.push(Criterion::le(
        "b vs 30353/100500",
        (b - 30353.0 / 100500.0).abs(),
        1e-9,
        "exact rational root of the mass/moment system",
    ));

    // Closed-form potential v = ∫∫(ν − μ): the μ side integrates to
    // (77/1500)x³(32 − 70x + 70x² − 25x³).
    let int_mu = |x: f64| -> f64 {
        (77.0 / 1500.0) * x.powi(3) * (32.0 - 70.0 * x + 70.0 * x * x - 25.0 * x.powi(3))
    };
    let int_nu = |x: f64| -> f64 {
        if x <= 0.0 {
            0.0
        } else if x < a {
            x * x / 2.0
        } else if x < b {
            a * x - a * a / 2.0
        } else {
            x * x / 2.0 + (a - b) * x + (b * b - a * a) / 2.0
        }
    };
    let v_closed = |x: f64| int_nu(x) - int_mu(x);
    let mut min_v = f64::INFINITY;
    for i in 0..=200_000 {
        let x = i as f64 / 200_000.0;
        min_v = min_v.min(v_closed(x));
    }
    report.push(Criterion::ge(
        "min of closed-form v on (0,1)",
        min_v,
        -1e-12,
        "double integrals of both densities in closed form",
    ));
    // Cross-check the closed form against the radial quadrature route.
    let prof = crate::radial::radial_potential(&poly, &shell, 40_001);
    let mut worst_cross = 0.0f64;
    for &x in &[0.25, 0.5, 0.8] {
        worst_cross = worst_cross.max((prof.eval(x) - v_closed(x)).abs());
    }
    report.push(Criterion::le(
        "closed-form v vs quadrature at {0.25, 0.5, 0.8}",
        worst_cross,
        1e-8,
        "independent cumulative-quadrature of the same densities",
    ));

    // Obstacle evolution.
    let w0 = ScalarField::from_fn(g, |x, _| {
        if x <= 0.0 || x >= 1.0 { 0.0 } else { v_closed(x).max(0.0) }
    });
    let nu = ScalarField::shell_indicator(g, 0.0, a, 16)
        .plus(&ScalarField::shell_indicator(g, b, 1.0, 16));
    let mut opts = ObstacleOptions::with_resolution(g.h, t_max);
    opts.stop_after_quiet = None;
    let traj = run_obstacle(&w0, &nu, &opts)?;
    let fm = freezing_map(&traj, &d.cells);
    let s_at = |x: f64| -> f64 {
        let (i, j) = g.locate(x, 0.0).unwrap();
        fm.s[g.idx(i, j)]
    };
    let dt = traj.dt;
    report.input("dt", format!("{dt:.3e}"));
    let (s05, s08) = (s_at(0.5), s_at(0.8));
    report.push(Criterion::le(
        "s(0.5)",
        s05,
        0.0025 + 2.0 * dt,
        "linearized collapse bound from the cutoff comparison",
    ));
    report.push(Criterion::ge(
        "s(0.8)",
        s08,
        0.006 - 2.0 * dt,
        "linearized persistence bound from the curvature comparison",
    ));
    report.push(Criterion::le("s(0.5) < s(0.8)", s05, s08, "non-monotone freezing order"));
    let nuc = nucleation_events(&traj);
    let in_window = nuc.iter().filter(|e| e.time > 0.0 && e.time <= s08 + 2.0 * dt).count();
    report.push(Criterion::ge(
        "nucleation events in (0, s(0.8)]",
        in_window as f64,
        1.0,
        "interior split of the active set",
    ));
    report.push(Criterion::le(
        "occupation identity residual",
        traj.occupation_identity_residual(),
        0.02,
        "telescoped time integral vs twice the potential mass",
    ));

    // Linearization sandwich on (b, 0.8) while the upper bound applies:
    //   v − (t/2)μ − (‖μ''‖/8) t² ≤ w(t) ≤ v − (t/2)ζμ + (‖(ζμ)''‖/8) t²
    // with ζ the normalized parabola cutoff on (b, 0.8).
    let mu_dd_max = 2926.0 / 25.0;
    let c_norm = 1.0 / ((0.8 - b) / 2.0 * ((0.8 - b) / 2.0));
    let zeta = |x: f64| (c_norm * (x - b) * (0.8 - x)).clamp(0.0, 1.0);
    // ‖(ζμ)''‖ on (b, 0.8) sampled densely from the closed forms.
    let zeta_mu_dd = |x: f64| -> f64 {
        let e = 1e-5;
        let f = |x: f64| zeta(x) * poly.eval(x);
        (f(x + e) - 2.0 * f(x) + f(x - e)) / (e * e)
    };
    let mut zmdd = 0.0f64;
    for i in 0..=2000 {
        let x = b + (0.8 - b) * i as f64 / 2000.0;
        if x > b + 1e-4 && x < 0.8 - 1e-4 {
            zmdd = zmdd.max(zeta_mu_dd(x).abs());
        }
    }
    report.push(Criterion::le(
        "‖(ζμ)''‖ on (b, 0.8)",
        zmdd,
        71.0,
        "second derivative of the cutoff-density product",
    ));
    let t_first_event = nuc.first().map(|e| e.time).unwrap_or(s08);
    let mut sandwich_violation = 0.0f64;
    for snap in &traj.snapshots {
        if snap.time > t_first_event {
            break;
        }
        for i in 0..g.nx {
            let (x, _) = g.center(i, 0);
            if x <= b + 2.0 * g.h || x >= 0.8 - 2.0 * g.h {
                continue;
            }
            let wv = snap.w.values[g.idx(i, 0)];
            let lower = v_closed(x) - snap.time / 2.0 * poly.eval(x)
                - mu_dd_max / 8.0 * snap.time * snap.time;
            let upper = v_closed(x) - snap.time / 2.0 * zeta(x) * poly.eval(x)
                + zmdd / 8.0 * snap.time * snap.time;
            sandwich_violation = sandwich_violation.max(lower - wv).max(wv - upper);
        }
    }
    report.push(Criterion::le(
        "linearization sandwich violation",
        sandwich_violation,
        1e-4,
        "sub/supersolution comparison evaluated on trajectory snapshots",
    ));

    let mut artifacts = ScenarioArtifacts::default();
    artifacts.fields.push(("w0".into(), w0));
    let mut s_field = ScalarField::zeros(g);
    for (p, &sv) in fm.s.iter().enumerate() {
        s_field.values[p] = if sv.is_finite() { sv } else { -1.0 };
    }
    artifacts.fields.push(("freezing_time".into(), s_field));
    Ok(ScenarioOutput { report: report.finish(), artifacts })
}

// ---------------------------------------------------------------------
// Programmed freezing on a null set.
// ---------------------------------------------------------------------

/// Solve on the square with a midline null segment removed, directly at
/// T = 0 or glued at a positive time T: the potential vanishes along the
/// segment, which therefore freezes exactly at T.
pub fn scenario_fractal_freezing(t_glue: f64, n: usize) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("fractal_freezing");
    report.input("T", t_glue);
    report.input("n", n);
    let d = build_domain(&DomainSpec::new(DomainKind::Square, n))?;
    let g = d.grid;
    let h = g.h;
    let mu_level = 0.75;
    let mu = ScalarField::indicator(&d.cells).scaled(mu_level).with_cap(1.0);
    let weight = quad_weight(&d.cells, (0.5, 0.5))?;
    let segment = NullSegment::Vertical { at: 0.5, from: 0.25, to: 0.75 };
    let sub_opts = SolveOptions { gap_tol: 1e-4, max_iters: 4000, ..Default::default() };

    // The base evolution (no null set): the maximal solve on the square.
    let (p0, _d0, rep0, _tz0) = lp(&mu, &weight, &d.cells, &sub_opts)?;
    report.input("lp_status_base", format!("{:?}", rep0.status));
    let mut w0 = p0.v.clone();
    for v in w0.values.iter_mut() {
        *v = v.max(0.0);
    }
    let dt = 0.5 * h * h;

    let (active_at_t, mu_t, base_traj) = if t_glue > 0.0 {
        let mut opts = ObstacleOptions::with_resolution(h, 4.0 * t_glue);
        opts.snapshot_times = vec![t_glue];
        opts.stop_after_quiet = None;
        let traj = run_obstacle(&w0, &p0.nu, &opts)?;
        let snap = traj
            .snapshots
            .iter()
            .find(|s| (s.time - t_glue).abs() <= 1.5 * dt)
            .expect("snapshot at the gluing time")
            .clone();
        // Cell-wise subcritical check of the evolved density.
        let max_mu_t = snap.eta.values.iter().fold(0.0f64, |m, &x| m.max(x));
        report.push(Criterion::le(
            "max active density at T",
            max_mu_t,
            1.0 - (1.0 - mu_level) + 1e-6,
            "comparison principle keeps the density below its initial maximum",
        ));
        (snap.w.support_mask(traj.tol_w), snap.eta.clone(), Some(traj))
    } else {
        (d.cells.clone(), mu.clone(), None)
    };

    // Null set inside the active region.
    let faces = rasterize_null_set(&d, &[segment])?;
    report.push(Criterion::le(
        "null-set cell measure",
        faces.cell_measure(),
        0.0,
        "face-based rasterization occupies no cells",
    ));
    let f_cells = faces.adjacent_cells();
    let f_inside = f_cells.intersection(&active_at_t);
    report.push(Criterion::ge(
        "segment-adjacent cells inside the active region",
        (f_inside.count() == f_cells.count()) as usize as f64,
        1.0,
        "the segment must sit in still-active water at the gluing time",
    ));

    // Dyadic decomposition of the active region minus the segment, and
    // per-cube solves.
    let cubes = dyadic_decompose(&active_at_t, &faces);
    report.input("cubes", cubes.len());
    let mut nu_comb = ScalarField::zeros(g);
    let mut v_comb = ScalarField::zeros(g);
    let mut covered = 0usize;
    for cube in &cubes {
        let mask = cube.mask(g);
        covered += mask.count();
        let mu_c = mu_t.restricted_to(&mask).with_cap(1.0);
        if mu_c.integral() <= 0.0 {
            continue;
        }
        if cube.size <= 2 {
            // Single cells and 2x2 blocks cannot diffuse on the grid: the
            // honest sub-solution keeps the mass in place.
            for idx in mask.iter_cells() {
                nu_comb.values[idx] += mu_c.values[idx];
            }
            continue;
        }
        let (pc, _dc, _repc, _tzc) = lp(&mu_c, &weight, &mask, &sub_opts)?;
        for idx in mask.iter_cells() {
            nu_comb.values[idx] += pc.nu.values[idx];
            v_comb.values[idx] += pc.v.values[idx].max(0.0);
        }
    }
    report.push(Criterion::le(
        "decomposition covers the active region",
        (active_at_t.count() - covered) as f64,
        0.0,
        "disjoint dyadic cubes tile the masked region",
    ));

    // The combined potential vanishes along the segment.
    let mut max_v_on_f = 0.0f64;
    for idx in f_cells.iter_cells() {
        max_v_on_f = max_v_on_f.max(v_comb.values[idx]);
    }
    report.push(Criterion::le(
        "max potential on segment-adjacent cells",
        max_v_on_f,
        crate::tol::tol_v(h, 1.0),
        "per-cube potentials vanish on cube boundaries",
    ));

    // Continuation run and the glued freezing map.
    let mut opts1 = ObstacleOptions::with_resolution(h, 0.2);
    opts1.snapshot_stride = ((0.002 / dt) as usize).max(1);
    let cont = run_obstacle(&v_comb, &nu_comb, &opts1)?;
    let (s_glued, tol_band) = if let Some(base) = &base_traj {
        let glued = glue_trajectories(base, &p0.nu, t_glue, &cont, &nu_comb)?;
        (glued.s, dt)
    } else {
        (cont.freeze_step.clone(), dt)
    };
    let mut worst_s_on_f = 0.0f64;
    for idx in f_cells.iter_cells() {
        let s = s_glued[idx];
        let dev = (s - t_glue).abs();
        worst_s_on_f = worst_s_on_f.max(dev);
    }
    report.push(Criterion::le(
        "max |s - T| on segment-adjacent cells",
        worst_s_on_f,
        tol_band + 1e-12,
        "zero potential on the segment freezes it within one time step",
    ));

    let mut artifacts = ScenarioArtifacts::default();
    artifacts.fields.push(("nu_continuation".into(), nu_comb));
    artifacts.fields.push(("v_continuation".into(), v_comb));
    Ok(ScenarioOutput { report: report.finish(), artifacts })
}

// ---------------------------------------------------------------------
// Stability and its sharp counterexample.
// ---------------------------------------------------------------------

/// Convergent perturbations shrink the zone difference monotonically;
/// punctured domains do not converge to the solid-ball zone.
pub fn scenario_stability(n: usize) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("stability");
    report.input("n", n);
    let opts = SolveOptions { gap_tol: 1e-4, ..Default::default() };

    // (a) Convergent sequence on the ball: μ_m = 1/2 + 1/m.
    let d = build_domain(&DomainSpec::new(DomainKind::Ball, n))?;
    let g = d.grid;
    let h = g.h;
    let w = quad_weight(&d.cells, (0.0, 0.0))?;
    let mu_limit = ScalarField::shell_indicator(g, 0.0, 1.0, 16).scaled(0.5).with_cap(1.0);
    let (_pl, _dl, _repl, tz_limit) = lp(&mu_limit, &w, &d.cells, &opts)?;
    let mut diffs = Vec::new();
    for m in [4.0f64, 8.0, 16.0] {
        let mu_m = ScalarField::shell_indicator(g, 0.0, 1.0, 16)
            .scaled(0.5 + 1.0 / m)
            .with_cap(1.0);
        let (_pm, _dm, _repm, tz_m) = lp(&mu_m, &w, &d.cells, &opts)?;
        diffs.push(tz_m.sigma.sym_diff(&tz_limit.sigma).measure());
    }
    report.input("zone_differences", format!("{diffs:?}"));
    report.push(Criterion::le(
        "|Σ_8 Δ Σ| < |Σ_4 Δ Σ|",
        diffs[1],
        diffs[0] - 1e-12,
        "mass perturbation π/m moves the inner radius accordingly",
    ));
    report.push(Criterion::le(
        "|Σ_16 Δ Σ| < |Σ_8 Δ Σ|",
        diffs[2],
        diffs[1] - 1e-12,
        "mass perturbation π/m moves the inner radius accordingly",
    ));
    // Oracle: the m-th difference is an annulus of area π/m between the
    // two inner radii.
    for (i, m) in [4.0f64, 8.0, 16.0].iter().enumerate() {
        let oracle = std::f64::consts::PI / m;
        report.push(Criterion::le(
            &format!("|Σ_{m} Δ Σ| vs π/m"),
            (diffs[i] - oracle).abs(),
            perimeter_band(h, 4.0 * std::f64::consts::PI),
            "area difference of the closed-form zones",
        ));
    }

    // (b) Counterexample: punctured balls. The zones converge to the
    // two-shell annulus limit, not to the solid-ball zone.
    let mut worst_gap_to_ball = f64::INFINITY;
    for m in 1..=3usize {
        let rho = 0.5f64.powi(m as i32);
        let spec = DomainSpec::new(DomainKind::Annulus { rho }, n);
        let da = build_domain(&spec)?;
        let mu_a = ScalarField::shell_indicator(da.grid, rho, 1.0, 16).scaled(0.5).with_cap(1.0);
        let wa = quad_weight(&da.cells, (0.0, 0.0))?;
        let (_pa, _da2, rep_a, tz_a) = lp(&mu_a, &wa, &da.cells, &opts)?;
        report.input(&format!("lp_status_annulus_{m}"), format!("{:?}", rep_a.status));
        // Distance to the solid-ball zone.
        let ball_zone = ScalarField::shell_indicator(da.grid, std::f64::consts::FRAC_1_SQRT_2, 1.0, 16)
            .support_mask(0.5);
        let d_ball = tz_a.sigma.sym_diff(&ball_zone.intersection(&da.cells)).measure();
        worst_gap_to_ball = worst_gap_to_ball.min(d_ball);
        // Match against the closed-form two-shell prediction.
        let shells = targets_annulus(&RadialDensity::constant(2, rho, 0.5))?;
        if let ShellKind::Annulus { r1, r2 } = shells.kind {
            let predicted = ScalarField::shell_indicator(da.grid, rho, r1, 16)
                .plus(&ScalarField::shell_indicator(da.grid, r2, 1.0, 16))
                .support_mask(0.5);
            let dd = tz_a.sigma.sym_diff(&predicted.intersection(&da.cells)).measure();
            let perimeter = 2.0 * std::f64::consts::PI * (rho + r1 + r2 + 1.0);
            report.push(Criterion::le(
                &format!("|Σ(ρ=2^-{m}) Δ two-shell prediction|"),
                dd,
                perimeter_band(da.grid.h, perimeter),
                "two-shell optimizer of the punctured domain",
            ));
        }
    }
    report.push(Criterion::ge(
        "min over the sequence of |Σ_m Δ Σ_ball|",
        worst_gap_to_ball,
        0.1,
        "zone difference bounded away from zero: puncturing is not a stable perturbation",
    ));

    Ok(ScenarioOutput { report: report.finish(), artifacts: ScenarioArtifacts::default() })
}

// ---------------------------------------------------------------------
// Monte Carlo experiments.
// ---------------------------------------------------------------------

/// Exit-time sanity: a path from 1/2 stopped on leaving (0,1) has mean
/// exit time 1/4 (from ½u'' = −1 with zero boundary values) and variance
/// 1/24. The Euler overshoot bias ~0.58√dt is folded into the band.
pub fn scenario_mc_exit(n_paths: usize, dt: f64, seed: u64) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("mc_exit");
    report.input("n_paths", n_paths);
    report.input("dt", format!("{dt:.2e}"));
    report.input("seed", seed);
    let d = build_domain(&DomainSpec::new(DomainKind::Interval, 200))?;
    let g = d.grid;
    let mut s = vec![0.0f64; g.n_cells()];
    for (p, v) in s.iter_mut().enumerate() {
        let (x, _) = g.center(p % g.nx, 0);
        if 0.0 < x && x < 1.0 {
            *v = f64::INFINITY;
        }
    }
    let fm = crate::obstacle::FreezingMap {
        grid: g,
        s,
        initial_freezing: CellSet::empty(g),
        sigma: CellSet::empty(g),
        never: CellSet::full(g),
        undecided: CellSet::empty(g),
    };
    let barrier = crate::stochastic::Barrier::from_freezing_map(&fm).with_cap(60.0);
    let delta = ScalarField::from_fn(g, |x, _| if (x - 0.5).abs() < g.h { 1.0 } else { 0.0 });
    let batch = crate::stochastic::sample_hitting(&delta, &barrier, n_paths, dt, seed);
    report.push(Criterion::le(
        "|E[τ] − 1/4|",
        (batch.mean_tau - 0.25).abs(),
        3.0 * batch.stderr_tau,
        "mean exit time of the unit interval from its midpoint",
    ));
    report.push(Criterion::le(
        "unstopped fraction",
        batch.unstopped as f64 / n_paths as f64,
        crate::tol::MC_UNSTOPPED_FRACTION,
        "horizon covers the exit-time tail",
    ));
    // Determinism: identical seed reproduces the batch bit-for-bit.
    let again = crate::stochastic::sample_hitting(&delta, &barrier, n_paths, dt, seed);
    report.push(Criterion::le(
        "seed determinism (mean τ difference)",
        (batch.mean_tau - again.mean_tau).abs(),
        0.0,
        "counter-based per-path streams with ordered reduction",
    ));
    // Weighted occupation with −Δu ≡ 2 doubles the mean stopping time.
    let occ = crate::stochastic::weighted_occupation(&delta, &barrier, n_paths, dt, seed, |_, _| 2.0);
    report.push(Criterion::le(
        "occupation vs 2E[τ]",
        (occ.mean - 2.0 * batch.mean_tau).abs(),
        1e-12,
        "path-wise identity for a constant weight Laplacian",
    ));
    Ok(ScenarioOutput { report: report.finish(), artifacts: ScenarioArtifacts::default() })
}

/// Pipeline pieces shared by the shell and gluing experiments: the
/// half-density interval problem solved through the obstacle route.
struct ShellPipeline {
    domain: crate::grid::Domain,
    mu: ScalarField,
    nu: ScalarField,
    traj: crate::obstacle::ObstacleTrajectory,
    fm: crate::obstacle::FreezingMap,
}

fn shell_pipeline(n: usize) -> Result<ShellPipeline> {
    let d = build_domain(&DomainSpec::new(DomainKind::Interval, n))?;
    let g = d.grid;
    let mu = ScalarField::shell_indicator(g, 0.0, 1.0, 1).scaled(0.5).with_cap(1.0);
    let shell = targets_1d(&RadialDensity::constant(1, 0.0, 0.5))?;
    let (a, b) = match shell.kind {
        ShellKind::Interval { a, b } => (a, b),
        _ => unreachable!(),
    };
    let nu = ScalarField::shell_indicator(g, 0.0, a, 16)
        .plus(&ScalarField::shell_indicator(g, b, 1.0, 16))
        .with_cap(1.0);
    let f = nu.minus(&mu);
    let pot = crate::potential::newtonian_potential(&f, None)?;
    let mut w0 = pot.field;
    for v in w0.values.iter_mut() {
        *v = v.max(0.0);
    }
    let mut opts = ObstacleOptions::with_resolution(g.h, 1.0);
    opts.snapshot_times = vec![0.01];
    opts.snapshot_stride = 0;
    opts.stop_after_quiet = Some(0.02);
    let traj = run_obstacle(&w0, &nu, &opts)?;
    let fm = freezing_map(&traj, &d.cells);
    Ok(ShellPipeline { domain: d, mu, nu, traj, fm })
}

/// Stopped law of the barrier built from the obstacle run vs the target
/// shells, in Kolmogorov distance.
pub fn scenario_mc_shell(n: usize, n_paths: usize, seed: u64) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("mc_shell");
    report.input("n", n);
    report.input("n_paths", n_paths);
    report.input("seed", seed);
    let pipe = shell_pipeline(n)?;
    let g = pipe.domain.grid;
    let dt_mc = (g.h / 4.0) * (g.h / 4.0);
    report.input("dt_mc", format!("{dt_mc:.2e}"));
    let barrier = crate::stochastic::Barrier::from_freezing_map(&pipe.fm);
    let batch = crate::stochastic::sample_hitting(&pipe.mu, &barrier, n_paths, dt_mc, seed);
    let dist = crate::stochastic::kolmogorov_distance_1d(&batch, &pipe.nu);
    let band = 2.0 / (n_paths as f64).sqrt() + 2.0 * g.h;
    report.push(Criterion::le(
        "Kolmogorov distance stopped law vs target shells",
        dist,
        band,
        "optimization/obstacle pipeline supplies the target law",
    ));
    report.push(Criterion::le(
        "E[τ] vs occupation identity",
        (batch.mean_tau - 2.0 * pipe.traj.initial_potential_mass / pipe.mu.integral()).abs(),
        3.0 * batch.stderr_tau + 2.0 * (g.h + dt_mc.sqrt()),
        "twice the potential mass over the total density mass",
    ));
    // Stopped mass concentrates on Σ and the initially frozen set.
    let allowed = pipe
        .fm
        .sigma
        .union(&pipe.fm.initial_freezing)
        .union(&pipe.domain.cells.boundary_cells())
        .dilate(2);
    let outside = crate::stochastic::stopped_mass_outside(&batch, &allowed);
    report.push(Criterion::le(
        "stopped mass outside Σ ∪ {s=0} (2-cell dilation)",
        outside,
        0.01 + 3.0 / (n_paths as f64).sqrt(),
        "paths stop on the barrier or at the initial frozen set",
    ));
    // Maximality audit: truncating the stopping rule at t1 can only lower
    // the weighted occupation, by the trajectory tail ∫∫(−Δu)η beyond t1.
    let t1 = 0.01;
    let occ_full =
        crate::stochastic::weighted_occupation(&pipe.mu, &barrier, n_paths, dt_mc, seed, |_, _| 2.0);
    let clipped = {
        let mut s_clip = pipe.fm.s.clone();
        for v in s_clip.iter_mut() {
            *v = v.min(t1);
        }
        crate::stochastic::Barrier::from_freezing_map(&crate::obstacle::FreezingMap {
            grid: g,
            s: s_clip,
            initial_freezing: CellSet::empty(g),
            sigma: CellSet::full(g),
            never: CellSet::empty(g),
            undecided: CellSet::empty(g),
        })
    };
    let occ_clip =
        crate::stochastic::weighted_occupation(&pipe.mu, &clipped, n_paths, dt_mc, seed, |_, _| 2.0);
    // Oracle for the tail: 2∫(−Δu) w(t1) = 4 ∫w(t1) per unit mass.
    let snap = pipe
        .traj
        .snapshots
        .iter()
        .find(|s| (s.time - t1).abs() <= 1.5 * pipe.traj.dt)
        .expect("t1 snapshot");
    let tail = 4.0 * snap.w.integral() / pipe.mu.integral();
    report.push(Criterion::le(
        "occupation drop of the truncated rule vs trajectory tail",
        ((occ_full.mean - occ_clip.mean) - tail).abs(),
        3.0 * (occ_full.stderr + occ_clip.stderr) + 4.0 * (g.h + dt_mc.sqrt()),
        "tail of the active-density time integral from the obstacle run",
    ));
    report.push(Criterion::ge(
        "maximality: full rule beats the truncated rule",
        occ_full.mean - occ_clip.mean,
        -3.0 * (occ_full.stderr + occ_clip.stderr),
        "the maximal rule maximizes the weighted occupation",
    ));
    Ok(ScenarioOutput { report: report.finish(), artifacts: ScenarioArtifacts::default() })
}

/// Concatenated stopping rule vs the direct glued-target law.
pub fn scenario_mc_glue(n: usize, n_paths: usize, seed: u64) -> Result<ScenarioOutput> {
    let mut report = ScenarioReport::new("mc_glue");
    report.input("n", n);
    report.input("n_paths", n_paths);
    report.input("seed", seed);
    let pipe = shell_pipeline(n)?;
    let g = pipe.domain.grid;
    let t1 = 0.01;
    let dt_mc = (g.h / 4.0) * (g.h / 4.0);
    // Continuation: maximal solve of the active density at t1.
    let snap = pipe
        .traj
        .snapshots
        .iter()
        .find(|s| (s.time - t1).abs() <= 1.5 * pipe.traj.dt)
        .expect("t1 snapshot")
        .clone();
    let active = snap.w.support_mask(pipe.traj.tol_w);
    let weight = quad_weight(&active, (0.5, 0.0))?;
    let mu1 = snap.eta.restricted_to(&active).with_cap(2.0);
    let (p1, _d1, _rep1, _tz1) =
        lp(&mu1, &weight, &active, &SolveOptions { gap_tol: 1e-5, ..Default::default() })?;
    let mut w1 = p1.v.clone();
    for v in w1.values.iter_mut() {
        *v = v.max(0.0);
    }
    let mut opts1 = ObstacleOptions::with_resolution(g.h, 1.0);
    opts1.stop_after_quiet = Some(0.02);
    let cont = run_obstacle(&w1, &p1.nu, &opts1)?;
    let fm1 = freezing_map(&cont, &active);
    let glued = glue_trajectories(&pipe.traj, &pipe.nu, t1, &cont, &p1.nu)?;

    let barrier0 = crate::stochastic::Barrier::from_freezing_map(&pipe.fm);
    let barrier1 = crate::stochastic::Barrier::from_freezing_map(&fm1);
    let batch =
        crate::stochastic::sample_glued(&pipe.mu, &barrier0, t1, &barrier1, n_paths, dt_mc, seed);
    let dist = crate::stochastic::kolmogorov_distance_1d(&batch, &glued.nu_glued);
    let band = 2.0 / (n_paths as f64).sqrt() + 2.0 * g.h;
    report.push(Criterion::le(
        "Kolmogorov distance glued rule vs glued target",
        dist,
        band,
        "glued target from the trajectory-gluing construction",
    ));
    report.push(Criterion::le(
        "unstopped fraction",
        batch.unstopped as f64 / n_paths as f64,
        crate::tol::MC_UNSTOPPED_FRACTION,
        "horizon covers both stages",
    ));
    Ok(ScenarioOutput { report: report.finish(), artifacts: ScenarioArtifacts::default() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_ball_scenario_passes_at_coarse_resolution() {
        let out = scenario_radial(RadialDomain::Ball, 0.5, 48).unwrap();
        assert!(out.report.passed, "{:#?}", out.report.criteria);
    }

    #[test]
    fn nucleation_scenario_passes_at_coarse_resolution() {
        let out = scenario_nucleation_1d(500, 0.012).unwrap();
        assert!(out.report.passed, "{:#?}", out.report.criteria);
    }

    #[test]
    fn fractal_scenario_t0_passes_at_coarse_resolution() {
        let out = scenario_fractal_freezing(0.0, 64).unwrap();
        assert!(out.report.passed, "{:#?}", out.report.criteria);
    }
}
