//! Monte Carlo verification of the barrier picture: Brownian paths stopped
//! at the space-time barrier {t ≥ s(x)}, their stopped law, expected
//! stopping time, and weighted occupation.
//!
//! Reproducibility contract: every path draws from its own counter-based
//! stream keyed by (seed, path index), and all aggregation is performed in
//! path order, so batches are bit-identical for a fixed seed regardless of
//! the thread count.

use crate::field::ScalarField;
use crate::grid::{CellSet, Grid};
use crate::obstacle::FreezingMap;
use crate::tol;
use rayon::prelude::*;

/// Splitmix64 stream: cheap, statistically solid, and counter-friendly.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
    /// Cached second output of the polar normal pair.
    spare: Option<f64>,
}

impl CounterRng {
    pub fn for_path(seed: u64, path: u64) -> Self {
        // Decorrelate the per-path streams by hashing the pair.
        let mut s = seed ^ path.wrapping_mul(0x9e3779b97f4a7c15);
        s = (s ^ (s >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        CounterRng { state: s, spare: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via Marsaglia's polar method (pair-cached).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let a = 2.0 * self.uniform() - 1.0;
            let b = 2.0 * self.uniform() - 1.0;
            let s = a * a + b * b;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(b * f);
                return a * f;
            }
        }
    }
}

/// Space-time barrier {(t,x): t ≥ s(x)} built from a freezing map.
/// Outside U the barrier height is zero (exit means immediate stopping,
/// matching admissible times never leaving U).
#[derive(Debug, Clone)]
pub struct Barrier {
    pub grid: Grid,
    s: Vec<f64>,
    pub max_finite_s: f64,
    /// Optional deterministic cap: the barrier min(s, t_cap).
    pub cap: Option<f64>,
}

impl Barrier {
    pub fn from_freezing_map(fm: &FreezingMap) -> Self {
        let max_finite_s =
            fm.s.iter().filter(|x| x.is_finite()).fold(0.0f64, |m, &x| m.max(x));
        Barrier { grid: fm.grid, s: fm.s.clone(), max_finite_s, cap: None }
    }

    pub fn with_cap(mut self, t_cap: f64) -> Self {
        self.cap = Some(t_cap);
        // Capping turns infinite heights into t_cap, which then sets the
        // simulation horizon.
        self.max_finite_s = if self.s.iter().any(|x| x.is_infinite()) {
            t_cap
        } else {
            self.max_finite_s.min(t_cap)
        };
        self
    }

    /// Barrier height at a point: linear interpolation of s between cell
    /// centers, extended by zero outside the grid. Infinite values
    /// dominate any blend.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        let g = self.grid;
        let sample = |i: i64, j: i64| -> f64 {
            if i < 0 || j < 0 || i >= g.nx as i64 || j >= g.ny as i64 {
                0.0
            } else {
                self.s[g.idx(i as usize, j as usize)]
            }
        };
        let fx = (x - g.x0) / g.h - 0.5;
        let i0 = fx.floor();
        let tx = fx - i0;
        let raw = if g.dim == 1 {
            let (s0, s1) = (sample(i0 as i64, 0), (sample(i0 as i64 + 1, 0)));
            if s0.is_infinite() || s1.is_infinite() {
                if tx < 0.5 { s0 } else { s1 }
            } else {
                s0 * (1.0 - tx) + s1 * tx
            }
        } else {
            let fy = (y - g.y0) / g.h - 0.5;
            let j0 = fy.floor();
            let ty = fy - j0;
            let (i0, j0) = (i0 as i64, j0 as i64);
            let vals = [
                (sample(i0, j0), (1.0 - tx) * (1.0 - ty)),
                (sample(i0 + 1, j0), tx * (1.0 - ty)),
                (sample(i0, j0 + 1), (1.0 - tx) * ty),
                (sample(i0 + 1, j0 + 1), tx * ty),
            ];
            if vals.iter().any(|(v, w)| v.is_infinite() && *w > 0.25) {
                f64::INFINITY
            } else {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (v, w) in vals {
                    if v.is_finite() {
                        acc += v * w;
                        wsum += w;
                    }
                }
                if wsum > 0.0 { acc / wsum } else { f64::INFINITY }
            }
        };
        match self.cap {
            Some(c) => raw.min(c),
            None => raw,
        }
    }
}

/// A sampled batch of stopped Brownian paths.
#[derive(Debug, Clone)]
pub struct McBatch {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Total μ mass represented by the batch (the sampler normalizes).
    pub mu_mass: f64,
    pub mean_tau: f64,
    pub stderr_tau: f64,
    /// Histogram of stopped positions on the grid (counts).
    pub stopped_hist: Vec<u32>,
    pub grid: Grid,
    /// Paths still unstopped at the time horizon.
    pub unstopped: usize,
    pub flagged: bool,
    /// Stopped positions and times (kept for follow-up statistics).
    pub taus: Vec<f64>,
    pub stopped_xy: Vec<(f64, f64)>,
}

/// Simulate N stopped paths for the barrier.
pub fn sample_hitting(
    mu: &ScalarField,
    barrier: &Barrier,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> McBatch {
    let g = mu.grid;
    let mass: f64 = mu.integral();
    assert!(mass > 0.0, "initial measure has no mass");
    // Inverse-CDF table over cells.
    let mut cdf = Vec::with_capacity(g.n_cells());
    let mut acc = 0.0;
    for &v in &mu.values {
        acc += v.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let cdf = &cdf;
    let horizon = 4.0 * barrier.max_finite_s.max(dt);
    let sqrt_dt = dt.sqrt();

    let chunk = 4096usize;
    let results: Vec<(f64, f64, f64, u32)> = (0..n_paths.div_ceil(chunk))
        .into_par_iter()
        .flat_map_iter(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n_paths);
            (lo..hi).map(move |p| {
                let mut rng = CounterRng::for_path(seed, p as u64);
                // Initial cell by inverse CDF, uniform inside the cell.
                let target = rng.uniform() * total;
                let idx = match cdf.binary_search_by(|probe| {
                    probe.partial_cmp(&target).unwrap()
                }) {
                    Ok(i) | Err(i) => i.min(cdf.len() - 1),
                };
                let (ci, cj) = (idx % g.nx, idx / g.nx);
                let (cx, cy) = g.center(ci, cj);
                let mut x = cx + (rng.uniform() - 0.5) * g.h;
                let mut y = if g.dim == 2 { cy + (rng.uniform() - 0.5) * g.h } else { 0.0 };
                let mut t = 0.0f64;
                let mut stopped = 1u32;
                loop {
                    if t >= barrier.height(x, y) {
                        break;
                    }
                    if t >= horizon {
                        stopped = 0;
                        break;
                    }
                    x += sqrt_dt * rng.normal();
                    if g.dim == 2 {
                        y += sqrt_dt * rng.normal();
                    }
                    t += dt;
                }
                (t, x, y, stopped)
            })
        })
        .collect();

    let mut sum_tau = 0.0;
    let mut sum_tau2 = 0.0;
    let mut unstopped = 0usize;
    let mut hist = vec![0u32; g.n_cells()];
    let mut taus = Vec::with_capacity(n_paths);
    let mut stopped_xy = Vec::with_capacity(n_paths);
    for &(t, x, y, stopped) in &results {
        sum_tau += t;
        sum_tau2 += t * t;
        if stopped == 0 {
            unstopped += 1;
        }
        if let Some((i, j)) = g.locate(x, y) {
            hist[g.idx(i, j)] += 1;
        }
        taus.push(t);
        stopped_xy.push((x, y));
    }
    let mean = sum_tau / n_paths as f64;
    let var = (sum_tau2 / n_paths as f64 - mean * mean).max(0.0);
    let stderr = (var / n_paths as f64).sqrt();
    let flagged = (unstopped as f64) > tol::MC_UNSTOPPED_FRACTION * n_paths as f64;
    McBatch {
        n_paths,
        dt,
        seed,
        mu_mass: mass,
        mean_tau: mean,
        stderr_tau: stderr,
        stopped_hist: hist,
        grid: g,
        unstopped,
        flagged,
        taus,
        stopped_xy,
    }
}

/// Kolmogorov distance between the batch's stopped law and a density on
/// the same grid (1D: CDF sup-distance along x).
pub fn kolmogorov_distance_1d(batch: &McBatch, density: &ScalarField) -> f64 {
    let g = batch.grid;
    assert_eq!(g, density.grid);
    let total_d: f64 = density.values.iter().sum();
    let total_b: f64 = batch.stopped_hist.iter().map(|&c| c as f64).sum();
    let mut acc_d = 0.0;
    let mut acc_b = 0.0;
    let mut worst = 0.0f64;
    for i in 0..g.nx {
        acc_d += density.values[g.idx(i, 0)] / total_d;
        acc_b += batch.stopped_hist[g.idx(i, 0)] as f64 / total_b;
        worst = worst.max((acc_d - acc_b).abs());
    }
    worst
}

/// Total-variation distance between the stopped histogram and a density,
/// both normalized, over grid cells (the 2D comparison metric).
pub fn tv_distance(batch: &McBatch, density: &ScalarField) -> f64 {
    let total_d: f64 = density.values.iter().sum();
    let total_b: f64 = batch.stopped_hist.iter().map(|&c| c as f64).sum();
    0.5 * batch
        .stopped_hist
        .iter()
        .zip(&density.values)
        .map(|(&c, &d)| (c as f64 / total_b - d / total_d).abs())
        .sum::<f64>()
}

/// Mass fraction of stopped positions outside a cell set.
pub fn stopped_mass_outside(batch: &McBatch, allowed: &CellSet) -> f64 {
    let g = batch.grid;
    let mut outside = 0u64;
    let mut total = 0u64;
    for idx in 0..g.n_cells() {
        let c = batch.stopped_hist[idx] as u64;
        total += c;
        if !allowed.bits[idx] {
            outside += c;
        }
    }
    if total == 0 { 0.0 } else { outside as f64 / total as f64 }
}

/// Monte Carlo estimate of E[∫_0^τ (−Δu)(W_t) dt] by re-walking the paths
/// (identical streams) and accumulating the weight along the way.
pub struct OccupationEstimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn weighted_occupation(
    mu: &ScalarField,
    barrier: &Barrier,
    n_paths: usize,
    dt: f64,
    seed: u64,
    neg_lap_u: impl Fn(f64, f64) -> f64 + Sync,
) -> OccupationEstimate {
    let g = mu.grid;
    let mut cdf = Vec::with_capacity(g.n_cells());
    let mut acc = 0.0;
    for &v in &mu.values {
        acc += v.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let cdf = &cdf;
    let horizon = 4.0 * barrier.max_finite_s.max(dt);
    let sqrt_dt = dt.sqrt();
    let chunk = 4096usize;
    let vals: Vec<f64> = (0..n_paths.div_ceil(chunk))
        .into_par_iter()
        .flat_map_iter(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n_paths);
            let neg_lap_u = &neg_lap_u;
            (lo..hi).map(move |p| {
                let mut rng = CounterRng::for_path(seed, p as u64);
                let target = rng.uniform() * total;
                let idx = match cdf.binary_search_by(|probe| {
                    probe.partial_cmp(&target).unwrap()
                }) {
                    Ok(i) | Err(i) => i.min(cdf.len() - 1),
                };
                let (ci, cj) = (idx % g.nx, idx / g.nx);
                let (cx, cy) = g.center(ci, cj);
                let mut x = cx + (rng.uniform() - 0.5) * g.h;
                let mut y = if g.dim == 2 { cy + (rng.uniform() - 0.5) * g.h } else { 0.0 };
                let mut t = 0.0f64;
                let mut acc_w = 0.0f64;
                loop {
                    if t >= barrier.height(x, y) || t >= horizon {
                        break;
                    }
                    acc_w += neg_lap_u(x, y) * dt;
                    x += sqrt_dt * rng.normal();
                    if g.dim == 2 {
                        y += sqrt_dt * rng.normal();
                    }
                    t += dt;
                }
                acc_w
            })
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / n_paths as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_paths as f64;
    OccupationEstimate { mean, stderr: (var / n_paths as f64).sqrt() }
}

/// Concatenated stopping rule: follow barrier0 until t1, then barrier1
/// shifted by t1. Returns the batch of the glued rule.
pub fn sample_glued(
    mu: &ScalarField,
    barrier0: &Barrier,
    t1: f64,
    barrier1: &Barrier,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> McBatch {
    let g = mu.grid;
    let mass = mu.integral();
    let mut cdf = Vec::with_capacity(g.n_cells());
    let mut acc = 0.0;
    for &v in &mu.values {
        acc += v.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let cdf = &cdf;
    let horizon = t1 + 4.0 * barrier1.max_finite_s.max(dt) + 4.0 * barrier0.max_finite_s.max(dt);
    let sqrt_dt = dt.sqrt();
    let chunk = 4096usize;
    let results: Vec<(f64, f64, f64, u32)> = (0..n_paths.div_ceil(chunk))
        .into_par_iter()
        .flat_map_iter(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n_paths);
            (lo..hi).map(move |p| {
                let mut rng = CounterRng::for_path(seed, p as u64);
                let target = rng.uniform() * total;
                let idx = match cdf.binary_search_by(|probe| {
                    probe.partial_cmp(&target).unwrap()
                }) {
                    Ok(i) | Err(i) => i.min(cdf.len() - 1),
                };
                let (ci, cj) = (idx % g.nx, idx / g.nx);
                let (cx, cy) = g.center(ci, cj);
                let mut x = cx + (rng.uniform() - 0.5) * g.h;
                let mut y = if g.dim == 2 { cy + (rng.uniform() - 0.5) * g.h } else { 0.0 };
                let mut t = 0.0f64;
                let mut stopped = 1u32;
                loop {
                    let height = if t < t1 {
                        barrier0.height(x, y)
                    } else {
                        let h1 = barrier1.height(x, y);
                        if h1.is_finite() { t1 + h1 } else { f64::INFINITY }
                    };
                    if t >= height {
                        break;
                    }
                    if t >= horizon {
                        stopped = 0;
                        break;
                    }
                    x += sqrt_dt * rng.normal();
                    if g.dim == 2 {
                        y += sqrt_dt * rng.normal();
                    }
                    t += dt;
                }
                (t, x, y, stopped)
            })
        })
        .collect();

    let mut sum_tau = 0.0;
    let mut sum_tau2 = 0.0;
    let mut unstopped = 0usize;
    let mut hist = vec![0u32; g.n_cells()];
    let mut taus = Vec::with_capacity(n_paths);
    let mut stopped_xy = Vec::with_capacity(n_paths);
    for &(t, x, y, stopped) in &results {
        sum_tau += t;
        sum_tau2 += t * t;
        if stopped == 0 {
            unstopped += 1;
        }
        if let Some((i, j)) = g.locate(x, y) {
            hist[g.idx(i, j)] += 1;
        }
        taus.push(t);
        stopped_xy.push((x, y));
    }
    let mean = sum_tau / n_paths as f64;
    let var = (sum_tau2 / n_paths as f64 - mean * mean).max(0.0);
    McBatch {
        n_paths,
        dt,
        seed,
        mu_mass: mass,
        mean_tau: mean,
        stderr_tau: (var / n_paths as f64).sqrt(),
        stopped_hist: hist,
        grid: g,
        unstopped,
        flagged: (unstopped as f64) > tol::MC_UNSTOPPED_FRACTION * n_paths as f64,
        taus,
        stopped_xy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, DomainKind, DomainSpec};

    fn interval_grid(n: usize) -> Grid {
        build_domain(&DomainSpec::new(DomainKind::Interval, n)).unwrap().grid
    }

    #[test]
    fn identical_seeds_are_bitwise_identical() {
        let g = interval_grid(64);
        let mu = ScalarField::shell_indicator(g, 0.0, 1.0, 1).scaled(0.5);
        let mut s = vec![0.02f64; g.n_cells()];
        for (p, v) in s.iter_mut().enumerate() {
            let (x, _) = g.center(p % g.nx, 0);
            if !(0.0..1.0).contains(&x) {
                *v = 0.0;
            }
        }
        let fm = crate::obstacle::FreezingMap {
            grid: g,
            s,
            initial_freezing: CellSet::empty(g),
            sigma: CellSet::full(g),
            never: CellSet::empty(g),
            undecided: CellSet::empty(g),
        };
        let barrier = Barrier::from_freezing_map(&fm);
        let b1 = sample_hitting(&mu, &barrier, 2000, 1e-5, 7);
        let b2 = sample_hitting(&mu, &barrier, 2000, 1e-5, 7);
        assert_eq!(b1.taus, b2.taus);
        assert_eq!(b1.stopped_hist, b2.stopped_hist);
        let b3 = sample_hitting(&mu, &barrier, 2000, 1e-5, 8);
        assert_ne!(b1.taus, b3.taus);
    }

    #[test]
    fn zero_barrier_stops_instantly_with_initial_law() {
        let g = interval_grid(64);
        let mu = ScalarField::shell_indicator(g, 0.0, 1.0, 1).scaled(0.5);
        let fm = crate::obstacle::FreezingMap {
            grid: g,
            s: vec![0.0; g.n_cells()],
            initial_freezing: CellSet::full(g),
            sigma: CellSet::empty(g),
            never: CellSet::empty(g),
            undecided: CellSet::empty(g),
        };
        let barrier = Barrier::from_freezing_map(&fm);
        let n = 20_000;
        let batch = sample_hitting(&mu, &barrier, n, 1e-5, 3);
        assert!(batch.taus.iter().all(|&t| t == 0.0));
        let dist = kolmogorov_distance_1d(&batch, &mu);
        assert!(dist <= 2.0 / (n as f64).sqrt() + 2.0 * g.h, "K distance {dist}");
    }

    #[test]
    fn exit_time_from_unit_interval() {
        // No interior barrier: stop on leaving (0,1), start at 1/2.
        // Oracle: E[τ] solves ½u'' = −1, u(0)=u(1)=0, so u(1/2) = 1/4,
        // and Var[τ] = 1/24. Euler overshoot inflates the mean by
        // ~0.58·√dt, folded into the tolerance below.
        let g = interval_grid(200);
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
        let barrier = Barrier::from_freezing_map(&fm).with_cap(40.0);
        let delta = ScalarField::from_fn(g, |x, _| if (x - 0.5).abs() < g.h { 1.0 } else { 0.0 });
        let n = 20_000;
        let dt = 4e-6;
        let batch = sample_hitting(&delta, &barrier, n, dt, 11);
        let bias_allowance = 0.6 * dt.sqrt();
        let band = 3.0 * batch.stderr_tau + bias_allowance + 2.0 * g.h;
        assert!(
            (batch.mean_tau - 0.25).abs() <= band,
            "E[τ] = {} ± {} (band {band})",
            batch.mean_tau,
            batch.stderr_tau
        );
        assert_eq!(batch.unstopped, 0);
    }

    #[test]
    fn weighted_occupation_matches_two_e_tau() {
        // −Δu ≡ 2 for u = c − |x|² in 1D means the weighted occupation is
        // exactly 2·E[τ].
        let g = interval_grid(100);
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
        let barrier = Barrier::from_freezing_map(&fm).with_cap(40.0);
        let delta = ScalarField::from_fn(g, |x, _| if (x - 0.5).abs() < g.h { 1.0 } else { 0.0 });
        let n = 10_000;
        let dt = 1e-5;
        let batch = sample_hitting(&delta, &barrier, n, dt, 5);
        let occ = weighted_occupation(&delta, &barrier, n, dt, 5, |_, _| 2.0);
        assert!(
            (occ.mean - 2.0 * batch.mean_tau).abs() < 1e-12,
            "occupation {} vs 2E[τ] {}",
            occ.mean,
            2.0 * batch.mean_tau
        );
    }

    #[test]
    fn glued_rule_with_t1_zero_matches_single_barrier() {
        let g = interval_grid(64);
        let mu = ScalarField::shell_indicator(g, 0.0, 1.0, 1).scaled(0.5);
        let s: Vec<f64> = (0..g.n_cells())
            .map(|p| {
                let (x, _) = g.center(p % g.nx, 0);
                if 0.0 < x && x < 1.0 {
                    0.01 + 0.01 * (3.0 * x).sin().abs()
                } else {
                    0.0
                }
            })
            .collect();
        let fm = crate::obstacle::FreezingMap {
            grid: g,
            s,
            initial_freezing: CellSet::empty(g),
            sigma: CellSet::full(g),
            never: CellSet::empty(g),
            undecided: CellSet::empty(g),
        };
        let barrier = Barrier::from_freezing_map(&fm);
        let single = sample_hitting(&mu, &barrier, 3000, 1e-5, 21);
        let glued = sample_glued(&mu, &barrier, 0.0, &barrier, 3000, 1e-5, 21);
        assert_eq!(single.taus, glued.taus);
    }
}
