//! Closed-form optimal target shells for the interval, ball, and annulus,
//! with monotone-potential certificates.
//!
//! The defining moment equations are
//!   interval:  ∫μ = a + (1-b),          ∫xμ = a²/2 + (1-b²)/2
//!   ball:      ∫r^{d-1}μ = (1-r̃^d)/d
//!   annulus:   ∫r^{d-1}μ matching plus ∫φ(r)μ matching,
//!              φ(r) = r for d ≠ 2 and φ(r) = r·log r for d = 2.
//! Polynomial densities are integrated exactly so the bisections can be
//! driven to near machine precision; sampled densities go through composite
//! Simpson quadrature.

use crate::error::{Error, Result};
use crate::tol;

/// One polynomial piece on [lo, hi], coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySegment {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

/// Piecewise-polynomial function of one variable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewisePoly {
    pub segments: Vec<PolySegment>,
}

impl PiecewisePoly {
    pub fn constant(lo: f64, hi: f64, c: f64) -> Self {
        PiecewisePoly { segments: vec![PolySegment { lo, hi, coeffs: vec![c] }] }
    }

    pub fn from_coeffs(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        PiecewisePoly { segments: vec![PolySegment { lo, hi, coeffs }] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        for s in &self.segments {
            if x >= s.lo && x <= s.hi {
                return s.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
            }
        }
        0.0
    }

    /// ∫ x^k p(x) dx over [a, b] ∩ support, exactly.
    pub fn moment_power(&self, k: usize, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for s in &self.segments {
            let lo = s.lo.max(a);
            let hi = s.hi.min(b);
            if lo >= hi {
                continue;
            }
            for (m, &c) in s.coeffs.iter().enumerate() {
                let p = (m + k + 1) as f64;
                total += c * (hi.powf(p) - lo.powf(p)) / p;
            }
        }
        total
    }

    /// ∫ x log(x) p(x) dx over [a, b] ∩ support, exactly.
    /// Uses ∫ x^m log x dx = x^{m+1}(log x/(m+1) - 1/(m+1)²).
    pub fn moment_xlogx(&self, a: f64, b: f64) -> f64 {
        let prim = |m: f64, x: f64| -> f64 {
            if x <= 0.0 {
                return 0.0;
            }
            let p = m + 2.0;
            x.powf(p) * (x.ln() / p - 1.0 / (p * p))
        };
        let mut total = 0.0;
        for s in &self.segments {
            let lo = s.lo.max(a);
            let hi = s.hi.min(b);
            if lo >= hi {
                continue;
            }
            for (m, &c) in s.coeffs.iter().enumerate() {
                total += c * (prim(m as f64, hi) - prim(m as f64, lo));
            }
        }
        total
    }
}

/// Radial density on [rho, 1] (or [0,1] for ball / interval).
#[derive(Debug, Clone)]
pub struct RadialDensity {
    pub d: usize,
    pub rho: f64,
    pub repr: RadialRepr,
    pub cap: f64,
}

#[derive(Debug, Clone)]
pub enum RadialRepr {
    Poly(PiecewisePoly),
    /// Uniform samples on [rho, 1], Simpson-integrated (odd count).
    Sampled(Vec<f64>),
}

impl RadialDensity {
    pub fn poly(d: usize, rho: f64, p: PiecewisePoly) -> Self {
        RadialDensity { d, rho, repr: RadialRepr::Poly(p), cap: 1.0 }
    }

    pub fn constant(d: usize, rho: f64, c: f64) -> Self {
        Self::poly(d, rho, PiecewisePoly::constant(rho, 1.0, c))
    }

    pub fn from_fn(d: usize, rho: f64, f: impl Fn(f64) -> f64, samples: usize) -> Self {
        let n = if samples % 2 == 0 { samples + 1 } else { samples };
        let vals = (0..n)
            .map(|i| f(rho + (1.0 - rho) * i as f64 / (n - 1) as f64))
            .collect();
        RadialDensity { d, rho, repr: RadialRepr::Sampled(vals), cap: 1.0 }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.rho || r > 1.0 {
            return 0.0;
        }
        match &self.repr {
            RadialRepr::Poly(p) => p.eval(r),
            RadialRepr::Sampled(v) => {
                let t = (r - self.rho) / (1.0 - self.rho) * (v.len() - 1) as f64;
                let i = (t.floor() as usize).min(v.len() - 2);
                let frac = t - i as f64;
                v[i] * (1.0 - frac) + v[i + 1] * frac
            }
        }
    }

    /// ∫ w(r)·μ(r) dr over [rho,1] for w(r) = r^k.
    pub fn moment_power(&self, k: usize) -> f64 {
        match &self.repr {
            RadialRepr::Poly(p) => p.moment_power(k, self.rho, 1.0),
            RadialRepr::Sampled(v) => simpson(v, self.rho, 1.0, |r| r.powi(k as i32)),
        }
    }

    /// ∫ r log(r)·μ(r) dr over [rho,1].
    pub fn moment_rlogr(&self) -> f64 {
        match &self.repr {
            RadialRepr::Poly(p) => p.moment_xlogx(self.rho, 1.0),
            RadialRepr::Sampled(v) => {
                simpson(v, self.rho, 1.0, |r| if r > 0.0 { r * r.ln() } else { 0.0 })
            }
        }
    }

    /// Worst violation of 0 ≤ μ ≤ cap on a dense sample.
    pub fn bound_violation(&self) -> f64 {
        let m = 4096;
        let mut worst = 0.0f64;
        for i in 0..=m {
            let r = self.rho + (1.0 - self.rho) * i as f64 / m as f64;
            let v = self.eval(r);
            worst = worst.max((-v).max(v - self.cap));
        }
        worst
    }
}

/// Composite Simpson of w(r)·samples(r) over [lo, hi]; sample count is odd.
fn simpson(samples: &[f64], lo: f64, hi: f64, w: impl Fn(f64) -> f64) -> f64 {
    let n = samples.len();
    assert!(n >= 3 && n % 2 == 1);
    let h = (hi - lo) / (n - 1) as f64;
    let f = |i: usize| {
        let r = lo + i as f64 * h;
        w(r) * samples[i]
    };
    let mut acc = f(0) + f(n - 1);
    for i in 1..n - 1 {
        acc += f(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// φ-moment of the weight used by the annulus equations.
fn phi_moment(mu: &RadialDensity) -> f64 {
    if mu.d == 2 {
        mu.moment_rlogr()
    } else {
        mu.moment_power(1)
    }
}

/// ∫_a^b r^{d-1} dr.
fn shell_mass(d: usize, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let p = d as f64;
    (b.powf(p) - a.powf(p)) / p
}

/// ∫_a^b φ(r) dr for the annulus weight.
fn shell_phi(d: usize, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if d == 2 {
        let prim = |x: f64| if x > 0.0 { x * x / 2.0 * x.ln() - x * x / 4.0 } else { 0.0 };
        prim(b) - prim(a)
    } else {
        (b * b - a * a) / 2.0
    }
}

/// Closed-form target regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShellKind {
    /// ν = χ_(0,a) + χ_(b,1).
    Interval { a: f64, b: f64 },
    /// ν = χ_{r̃ < |x| < 1}.
    Ball { r_tilde: f64 },
    /// ν = χ_{ρ < |x| < r1} + χ_{r2 < |x| < 1}.
    Annulus { r1: f64, r2: f64 },
}

#[derive(Debug, Clone)]
pub struct TargetShell {
    pub kind: ShellKind,
    pub d: usize,
    pub rho: f64,
    /// Residuals of the defining (mass, φ-moment) equations.
    pub residuals: (f64, f64),
    /// Full-mass case ν = χ_U.
    pub degenerate: bool,
}

/// Residuals below this count as exact roots at bracket endpoints; the
/// moment scales here are O(1), so this is floating-point noise.
const BRACKET_EPS: f64 = 1e-11;

fn bisect(mut lo: f64, mut hi: f64, mut g_lo: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let g_hi = g(hi);
    if g_lo.abs() <= BRACKET_EPS {
        return Ok(lo);
    }
    if g_hi.abs() <= BRACKET_EPS {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NoRootBracket(format!(
            "g({lo}) = {g_lo:.3e}, g({hi}) = {g_hi:.3e} share a sign"
        )));
    }
    while hi - lo > tol::BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == g_lo.signum() {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Target shells on (0, 1): ν = χ_(0,a) + χ_(b,1) matching mass and first
/// moment of μ.
pub fn targets_1d(mu: &RadialDensity) -> Result<TargetShell> {
    let mass = mu.moment_power(0);
    let moment = mu.moment_power(1);
    if mass > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!("∫μ = {mass} exceeds |U| = 1")));
    }
    if (mass - 1.0).abs() <= 1e-12 {
        return Ok(TargetShell {
            kind: ShellKind::Interval { a: 0.5, b: 0.5 },
            d: 1,
            rho: 0.0,
            residuals: (0.0, 0.0),
            degenerate: true,
        });
    }
    // For fixed b, mass fixes a(b) = mass - 1 + b; the moment residual
    // g(b) = a²/2 + (1-b²)/2 - ∫xμ has g'(b) = a - b ≤ 0, so a single
    // bisection suffices.
    let b_lo = (1.0 - mass).max(0.0);
    let g = |b: f64| {
        let a = (mass - 1.0 + b).max(0.0);
        a * a / 2.0 + (1.0 - b * b) / 2.0 - moment
    };
    let b = bisect(b_lo, 1.0, g(b_lo), g)?;
    let a = (mass - 1.0 + b).max(0.0);
    let residuals = ((a + 1.0 - b - mass).abs(), g(b).abs());
    Ok(TargetShell {
        kind: ShellKind::Interval { a, b },
        d: 1,
        rho: 0.0,
        residuals,
        degenerate: false,
    })
}

/// Target shell on the unit ball: ν = χ_{r̃ < |x| < 1} matching the
/// d-weighted mass of μ.
pub fn targets_ball(mu: &RadialDensity) -> Result<TargetShell> {
    let d = mu.d;
    let mass = mu.moment_power(d - 1);
    let full = shell_mass(d, 0.0, 1.0);
    if mass > full + 1e-12 {
        return Err(Error::Infeasible(format!("weighted mass {mass} exceeds ball capacity {full}")));
    }
    let degenerate = (mass - full).abs() <= 1e-12;
    let g = |r: f64| shell_mass(d, r, 1.0) - mass;
    let r_tilde = if degenerate { 0.0 } else { bisect(0.0, 1.0, g(0.0), g)? };
    Ok(TargetShell {
        kind: ShellKind::Ball { r_tilde },
        d,
        rho: 0.0,
        residuals: (g(r_tilde).abs(), 0.0),
        degenerate,
    })
}

/// Target shells on the annulus {ρ < |x| < 1}: ν = χ_(ρ,r1) + χ_(r2,1)
/// matching mass and φ-moment via nested bisection.
pub fn targets_annulus(mu: &RadialDensity) -> Result<TargetShell> {
    let (d, rho) = (mu.d, mu.rho);
    assert!(rho > 0.0 && rho < 1.0, "annulus requires 0 < rho < 1");
    let mass = mu.moment_power(d - 1);
    let phi_mu = phi_moment(mu);
    let full = shell_mass(d, rho, 1.0);
    if mass > full + 1e-12 {
        return Err(Error::Infeasible(format!(
            "weighted mass {mass} exceeds annulus capacity {full}"
        )));
    }
    if (mass - full).abs() <= 1e-12 {
        return Ok(TargetShell {
            kind: ShellKind::Annulus { r1: 1.0, r2: 1.0 },
            d,
            rho,
            residuals: (0.0, 0.0),
            degenerate: true,
        });
    }
    // Inner solve: r1(r2) from the mass equation (monotone in r1).
    let r1_of = |r2: f64| -> Result<f64> {
        let target = mass - shell_mass(d, r2, 1.0);
        let g = |r1: f64| shell_mass(d, rho, r1) - target;
        if target <= 0.0 {
            return Ok(rho);
        }
        bisect(rho, r2, g(rho), g)
    };
    // Outer residual in the φ-moment; monotone in r2 because φ(r)/r^{d-1}
    // is monotone.
    let resid = |r2: f64| -> Result<f64> {
        let r1 = r1_of(r2)?;
        Ok(shell_phi(d, rho, r1) + shell_phi(d, r2, 1.0) - phi_mu)
    };
    // Bracket: r2 ∈ [r2_min, 1] where r2_min packs all mass into the outer
    // shell (r1 = ρ).
    let p = d as f64;
    let r2_min = (1.0 - p * mass).max(rho.powf(p)).powf(1.0 / p).max(rho);
    let g_lo = resid(r2_min)?;
    let r2 = {
        let mut lo = r2_min;
        let mut hi = 1.0;
        let g_hi = resid(hi)?;
        if g_lo.abs() <= BRACKET_EPS {
            lo
        } else if g_hi.abs() <= BRACKET_EPS {
            hi
        } else if g_lo.signum() == g_hi.signum() {
            return Err(Error::NoRootBracket(format!(
                "annulus moment residual does not change sign: g({lo}) = {g_lo:.3e}, g(1) = {g_hi:.3e}"
            )));
        } else {
            let mut gl = g_lo;
            while hi - lo > tol::BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                let gm = resid(mid)?;
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if gm.signum() == gl.signum() {
                    lo = mid;
                    gl = gm;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    let r1 = r1_of(r2)?;
    let res_mass = (shell_mass(d, rho, r1) + shell_mass(d, r2, 1.0) - mass).abs();
    let res_phi = (shell_phi(d, rho, r1) + shell_phi(d, r2, 1.0) - phi_mu).abs();
    Ok(TargetShell {
        kind: ShellKind::Annulus { r1, r2 },
        d,
        rho,
        residuals: (res_mass, res_phi),
        degenerate: false,
    })
}

/// Radial profile of the potential v = Δ⁻¹(ν − μ), integrating the radial
/// ODE (r^{d-1} v')' = r^{d-1}(ν - μ) twice from r to 1.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    /// min over samples (certificate: should be ≥ -1e-9·scale).
    pub min_v: f64,
}

pub fn radial_potential(mu: &RadialDensity, shell: &TargetShell, samples: usize) -> RadialProfile {
    let d = mu.d;
    let n = samples.max(1001) | 1;
    let lo = if matches!(shell.kind, ShellKind::Annulus { .. }) { mu.rho } else { 0.0 };
    let h = (1.0 - lo) / (n - 1) as f64;
    // ∫_s^1 t^{d-1} ν dt in closed form (ν is a shell indicator; the
    // degenerate case means ν ≡ 1 on the whole domain).
    let nu_mass_from = |s: f64| -> f64 {
        if shell.degenerate {
            return shell_mass(d, s.max(lo), 1.0);
        }
        match shell.kind {
            ShellKind::Interval { a, b } => shell_mass(1, s.min(a), a) + shell_mass(1, s.max(b), 1.0),
            ShellKind::Ball { r_tilde } => shell_mass(d, s.max(r_tilde), 1.0),
            ShellKind::Annulus { r1, r2 } => {
                shell_mass(d, s.max(lo).min(r1), r1) + shell_mass(d, s.max(r2), 1.0)
            }
        }
    };
    // ∫_s^1 t^{d-1} μ dt: exact for polynomial densities, cumulative
    // trapezoid of the continuous samples otherwise.
    let mu_mass_from: Vec<f64> = match &mu.repr {
        RadialRepr::Poly(p) => (0..n)
            .map(|i| {
                let s = lo + i as f64 * h;
                if d == 1 {
                    p.moment_power(0, s, 1.0)
                } else {
                    p.moment_power(d - 1, s, 1.0)
                }
            })
            .collect(),
        RadialRepr::Sampled(_) => {
            let f = |r: f64| mu.eval(r) * r.powi(d as i32 - 1);
            let mut acc = vec![0.0; n];
            for i in (0..n - 1).rev() {
                let r0 = lo + i as f64 * h;
                acc[i] = acc[i + 1] + 0.5 * h * (f(r0) + f(r0 + h));
            }
            acc
        }
    };
    // G(s) = ∫_s^1 t^{d-1}(ν-μ) dt, exact at the nodes up to the μ rule.
    let g_cum: Vec<f64> = (0..n)
        .map(|i| {
            let s = lo + i as f64 * h;
            nu_mass_from(s) - mu_mass_from[i]
        })
        .collect();
    // v(r) = ∫_r^1 G(s)/s^{d-1} ds. The integrand is regular at s = 0
    // because mass matching makes G(s) = O(s^d).
    let mut v = vec![0.0; n];
    let integrand = |i: usize| -> f64 {
        let s = lo + i as f64 * h;
        if s <= 0.0 {
            0.0
        } else {
            g_cum[i] / s.powi(d as i32 - 1)
        }
    };
    for i in (0..n - 1).rev() {
        v[i] = v[i + 1] + 0.5 * h * (integrand(i) + integrand(i + 1));
    }
    let r: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let min_v = v.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    RadialProfile { r, v, min_v }
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        let lo = self.r[0];
        let h = self.r[1] - self.r[0];
        let t = ((r - lo) / h).clamp(0.0, (self.r.len() - 1) as f64);
        let i = (t.floor() as usize).min(self.r.len() - 2);
        let frac = t - i as f64;
        self.v[i] * (1.0 - frac) + self.v[i + 1] * frac
    }

    /// Check a monotonicity pattern: v nondecreasing on [lo1, hi1] and
    /// nonincreasing on [lo2, hi2], with slack for quadrature noise.
    pub fn monotone_certificate(
        &self,
        rising: Option<(f64, f64)>,
        falling: Option<(f64, f64)>,
    ) -> bool {
        let slack = 1e-9 * (1.0 + self.v.iter().fold(0.0f64, |m, &x| m.max(x.abs())));
        let ok_rising = rising.map_or(true, |(lo, hi)| {
            self.r
                .windows(2)
                .zip(self.v.windows(2))
                .filter(|(rw, _)| rw[0] >= lo && rw[1] <= hi)
                .all(|(_, vw)| vw[1] >= vw[0] - slack)
        });
        let ok_falling = falling.map_or(true, |(lo, hi)| {
            self.r
                .windows(2)
                .zip(self.v.windows(2))
                .filter(|(rw, _)| rw[0] >= lo && rw[1] <= hi)
                .all(|(_, vw)| vw[1] <= vw[0] + slack)
        });
        ok_rising && ok_falling
    }
}

/// The certificate bundled by the target solvers: profile plus the
/// monotonicity pattern appropriate to the shell kind.
pub fn shell_certificate(mu: &RadialDensity, shell: &TargetShell) -> (RadialProfile, bool) {
    let prof = radial_potential(mu, shell, 20_001);
    let ok = match shell.kind {
        ShellKind::Interval { a, b } => {
            prof.monotone_certificate(Some((0.0, a)), Some((b, 1.0)))
        }
        ShellKind::Ball { r_tilde } => {
            let _ = r_tilde;
            prof.monotone_certificate(None, Some((0.0, 1.0)))
        }
        ShellKind::Annulus { r1, r2 } => {
            prof.monotone_certificate(Some((mu.rho, r1)), Some((r2, 1.0)))
        }
    };
    (prof, ok)
}

/// The Appendix-style quartic used by the nucleation experiment:
/// μ(x) = 154(-x⁴/4 + 7x³/15 - 7x²/25 + 8x/125) on (0,1).
pub fn nucleation_quartic() -> RadialDensity {
    let c = 154.0;
    let coeffs = vec![0.0, c * 8.0 / 125.0, -c * 7.0 / 25.0, c * 7.0 / 15.0, -c / 4.0];
    RadialDensity::poly(1, 0.0, PiecewisePoly::from_coeffs(0.0, 1.0, coeffs)).with_cap(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_density_shells_are_quarter_points() {
        let mu = RadialDensity::constant(1, 0.0, 0.5);
        let t = targets_1d(&mu).unwrap();
        match t.kind {
            ShellKind::Interval { a, b } => {
                assert!((a - 0.25).abs() < 1e-11, "a = {a}");
                assert!((b - 0.75).abs() < 1e-11, "b = {b}");
            }
            _ => panic!("wrong kind"),
        }
        assert!(t.residuals.0 < tol::SHELL_RESIDUAL_TOL);
        assert!(t.residuals.1 < tol::SHELL_RESIDUAL_TOL);
    }

    #[test]
    fn nucleation_quartic_matches_exact_rationals() {
        let mu = nucleation_quartic();
        // Mass 308/375 and first moment 462/1000, hence the two rationals.
        assert!((mu.moment_power(0) - 308.0 / 375.0).abs() < 1e-13);
        assert!((mu.moment_power(1) - 0.462).abs() < 1e-13);
        let t = targets_1d(&mu).unwrap();
        match t.kind {
            ShellKind::Interval { a, b } => {
                assert!(
                    (a - 12397.0 / 100500.0).abs() < 1e-9,
                    "a = {a:.12} vs {:.12}",
                    12397.0 / 100500.0
                );
                assert!(
                    (b - 30353.0 / 100500.0).abs() < 1e-9,
                    "b = {b:.12} vs {:.12}",
                    30353.0 / 100500.0
                );
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn full_mass_is_degenerate() {
        let mu = RadialDensity::constant(1, 0.0, 1.0);
        let t = targets_1d(&mu).unwrap();
        assert!(t.degenerate);
    }

    #[test]
    fn middle_bump_spreads_to_hand_computed_shells() {
        // μ = χ_(0.4,0.6): mass 0.2 and moment 0.1 give a = 0.1, b = 0.9.
        let mu = RadialDensity::poly(1, 0.0, PiecewisePoly::constant(0.4, 0.6, 1.0));
        let t = targets_1d(&mu).unwrap();
        match t.kind {
            ShellKind::Interval { a, b } => {
                assert!((a - 0.1).abs() < 1e-11, "a = {a}");
                assert!((b - 0.9).abs() < 1e-11, "b = {b}");
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn edge_indicator_collapses_onto_its_edges() {
        let mu = RadialDensity::poly(1, 0.0, PiecewisePoly::constant(0.0, 0.3, 1.0));
        let t = targets_1d(&mu).unwrap();
        match t.kind {
            ShellKind::Interval { a, b } => {
                assert!((a - 0.3).abs() < 1e-10, "a = {a}");
                assert!((b - 1.0).abs() < 1e-10, "b = {b}");
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn ball_half_density_radii() {
        let mu2 = RadialDensity::constant(2, 0.0, 0.5);
        let t2 = targets_ball(&mu2).unwrap();
        match t2.kind {
            ShellKind::Ball { r_tilde } => {
                assert!((r_tilde - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12, "r̃ = {r_tilde}");
            }
            _ => panic!("wrong kind"),
        }
        let mu3 = RadialDensity::constant(3, 0.0, 0.5);
        let t3 = targets_ball(&mu3).unwrap();
        match t3.kind {
            ShellKind::Ball { r_tilde } => {
                assert!((r_tilde - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-12, "r̃ = {r_tilde}");
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn vanishing_mass_pushes_shell_to_boundary() {
        let mu = RadialDensity::constant(2, 0.0, 1e-9);
        let t = targets_ball(&mu).unwrap();
        match t.kind {
            ShellKind::Ball { r_tilde } => assert!(r_tilde > 1.0 - 1e-6),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn annulus_shells_satisfy_equations() {
        let mu = RadialDensity::constant(2, 0.5, 0.5);
        let t = targets_annulus(&mu).unwrap();
        assert!(t.residuals.0 < tol::SHELL_RESIDUAL_TOL, "mass residual {:.2e}", t.residuals.0);
        assert!(t.residuals.1 < tol::SHELL_RESIDUAL_TOL, "phi residual {:.2e}", t.residuals.1);
        match t.kind {
            ShellKind::Annulus { r1, r2 } => {
                assert!(0.5 < r1 && r1 < r2 && r2 < 1.0, "r1 = {r1}, r2 = {r2}");
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn annulus_d1_reflection_matches_interval_targets() {
        // Map (0,1) with density μ to the even density on {1/2 < |x| < 1}
        // via x ↦ (x+1)/2; the d=1 annulus equations must reproduce the
        // interval shells.
        let mu = nucleation_quartic();
        let reflected =
            RadialDensity::from_fn(1, 0.5, |r| mu.eval(2.0 * r - 1.0), 8193).with_cap(2.0);
        let t_ann = targets_annulus(&reflected).unwrap();
        let t_int = targets_1d(&mu).unwrap();
        match (t_ann.kind, t_int.kind) {
            (ShellKind::Annulus { r1, r2 }, ShellKind::Interval { a, b }) => {
                assert!((2.0 * r1 - 1.0 - a).abs() < 1e-7, "{} vs {a}", 2.0 * r1 - 1.0);
                assert!((2.0 * r2 - 1.0 - b).abs() < 1e-7, "{} vs {b}", 2.0 * r2 - 1.0);
            }
            _ => panic!("wrong kinds"),
        }
    }

    #[test]
    fn sub_annulus_indicator_collapses() {
        let mu = RadialDensity::poly(2, 0.25, PiecewisePoly::constant(0.25, 0.6, 1.0));
        let t = targets_annulus(&mu).unwrap();
        match t.kind {
            ShellKind::Annulus { r1, r2 } => {
                assert!((r1 - 0.6).abs() < 1e-9, "r1 = {r1}");
                assert!(r2 > 1.0 - 1e-9, "r2 = {r2}");
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn shell_results_stable_under_quadrature_doubling() {
        let density = |r: f64| 0.4 + 0.3 * (3.0 * r).sin().powi(2);
        let coarse = RadialDensity::from_fn(2, 0.5, density, 10_001);
        let fine = RadialDensity::from_fn(2, 0.5, density, 20_001);
        let (tc, tf) = (targets_annulus(&coarse).unwrap(), targets_annulus(&fine).unwrap());
        match (tc.kind, tf.kind) {
            (ShellKind::Annulus { r1: a1, r2: a2 }, ShellKind::Annulus { r1: b1, r2: b2 }) => {
                assert!((a1 - b1).abs() < 1e-9, "r1 drift {:.2e}", (a1 - b1).abs());
                assert!((a2 - b2).abs() < 1e-9, "r2 drift {:.2e}", (a2 - b2).abs());
            }
            _ => panic!("wrong kinds"),
        }
    }

    #[test]
    fn symmetric_density_gives_symmetric_shells() {
        // μ(x) = μ(1-x) forces a = 1 - b.
        let density = PiecewisePoly::from_coeffs(0.0, 1.0, vec![0.2, 1.2, -1.2]);
        // 0.2 + 1.2x - 1.2x² = 0.2 + 1.2x(1-x): symmetric about 1/2.
        let mu = RadialDensity::poly(1, 0.0, density);
        let t = targets_1d(&mu).unwrap();
        match t.kind {
            ShellKind::Interval { a, b } => {
                assert!((a - (1.0 - b)).abs() < 1e-10, "a = {a}, 1-b = {}", 1.0 - b);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn interval_potential_oracle() {
        // μ = χ/2 on (0,1): v has max v(1/2) = 1/32 and vanishing ends.
        let mu = RadialDensity::constant(1, 0.0, 0.5);
        let shell = targets_1d(&mu).unwrap();
        let prof = radial_potential(&mu, &shell, 20_001);
        assert!((prof.eval(0.5) - 1.0 / 32.0).abs() < 1e-8, "v(1/2) = {}", prof.eval(0.5));
        assert!((prof.eval(0.25) - 1.0 / 64.0).abs() < 1e-8, "v(1/4) = {}", prof.eval(0.25));
        assert!(prof.min_v > -1e-10);
        assert!(prof.v[0].abs() < 1e-10 && prof.v.last().unwrap().abs() < 1e-10);
    }

    #[test]
    fn identical_pair_gives_zero_potential() {
        // Full-mass μ = χ: degenerate shell, ν = μ, v ≡ 0.
        let mu = RadialDensity::constant(1, 0.0, 1.0);
        let shell = targets_1d(&mu).unwrap();
        let prof = radial_potential(&mu, &shell, 5_001);
        assert!(prof.v.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn ball_potential_positive_and_monotone() {
        let mu = RadialDensity::constant(2, 0.0, 0.5);
        let shell = targets_ball(&mu).unwrap();
        let (prof, cert) = shell_certificate(&mu, &shell);
        assert!(cert, "monotone certificate failed");
        assert!(prof.eval(0.0) > 0.0, "v(0) = {}", prof.eval(0.0));
        // Independent quadrature oracle for v(0):
        // v(0) = ∫_0^1 s^{1-d} G(s) ds with G(s) = ∫_s^1 t(ν-μ) dt, d = 2.
        let r_t = std::f64::consts::FRAC_1_SQRT_2;
        let g = |s: f64| -> f64 {
            let nu_part = if s < r_t {
                0.5 * (1.0 - r_t * r_t)
            } else {
                0.5 * (1.0 - s * s)
            };
            let mu_part = 0.25 * (1.0 - s * s);
            nu_part - mu_part
        };
        let m = 200_000;
        let mut oracle = 0.0;
        for k in 0..m {
            let s0 = (k as f64 + 0.5) / m as f64;
            oracle += g(s0) / s0 * (1.0 / m as f64);
        }
        assert!(
            (prof.eval(0.0) - oracle).abs() < 1e-5,
            "v(0) = {} vs oracle {}",
            prof.eval(0.0),
            oracle
        );
    }

    #[test]
    fn annulus_certificate_holds() {
        let mu = RadialDensity::constant(2, 0.5, 0.5);
        let shell = targets_annulus(&mu).unwrap();
        let (_, cert) = shell_certificate(&mu, &shell);
        assert!(cert);
    }

    #[test]
    fn overfull_density_is_infeasible() {
        let mu = RadialDensity::constant(1, 0.0, 1.2).with_cap(2.0);
        assert!(matches!(targets_1d(&mu), Err(Error::Infeasible(_))));
    }
}
