//! Grid functions: densities, potentials, weights.

use crate::grid::{CellSet, Grid};

/// A cell-centered scalar field. Densities carry a cap so that the
/// admissibility bound 0 ≤ value ≤ cap can be asserted.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub cap: Option<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.n_cells()], cap: None }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_cells());
        ScalarField { grid, values, cap: None }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.n_cells()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values[grid.idx(i, j)] = f(x, y);
            }
        }
        ScalarField { grid, values, cap: None }
    }

    /// Sampled on a cell set, zero elsewhere.
    pub fn from_fn_on(grid: Grid, set: &CellSet, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for idx in set.iter_cells() {
            let (i, j) = (idx % grid.nx, idx / grid.nx);
            let (x, y) = grid.center(i, j);
            out.values[idx] = f(x, y);
        }
        out
    }

    /// Indicator of a cell set.
    pub fn indicator(set: &CellSet) -> Self {
        let values = set.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        ScalarField { grid: set.grid, values, cap: Some(1.0) }
    }

    /// Area-weighted indicator of the radial shell {lo < |x| < hi}
    /// (interval (lo, hi) in 1D). Boundary cells get their covered
    /// fraction, so mass and low moments match the continuum shell to
    /// O(h^2/subsamples^2).
    pub fn shell_indicator(grid: Grid, lo: f64, hi: f64, subsamples: usize) -> Self {
        let mut out = Self::zeros(grid);
        out.cap = Some(1.0);
        let h = grid.h;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let idx = grid.idx(i, j);
                if grid.dim == 1 {
                    let xl = grid.x0 + i as f64 * h;
                    let xr = xl + h;
                    let cover = (xr.min(hi) - xl.max(lo)).max(0.0) / h;
                    out.values[idx] = cover;
                } else {
                    let (cx, cy) = grid.center(i, j);
                    let r = (cx * cx + cy * cy).sqrt();
                    let half_diag = h * std::f64::consts::SQRT_2 / 2.0;
                    if r + half_diag <= hi && r - half_diag >= lo {
                        out.values[idx] = 1.0;
                    } else if r - half_diag > hi || r + half_diag < lo {
                        out.values[idx] = 0.0;
                    } else {
                        // Boundary cell: subsample.
                        let s = subsamples.max(2);
                        let mut hit = 0usize;
                        for sj in 0..s {
                            for si in 0..s {
                                let x = cx - h / 2.0 + (si as f64 + 0.5) * h / s as f64;
                                let y = cy - h / 2.0 + (sj as f64 + 0.5) * h / s as f64;
                                let rr = (x * x + y * y).sqrt();
                                if rr > lo && rr < hi {
                                    hit += 1;
                                }
                            }
                        }
                        out.values[idx] = hit as f64 / (s * s) as f64;
                    }
                }
            }
        }
        out
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// ∫ f·g over the grid.
    pub fn integral_against(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// ∫ f over a cell set.
    pub fn integral_on(&self, set: &CellSet) -> f64 {
        assert_eq!(self.grid, set.grid);
        set.iter_cells().map(|i| self.values[i]).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// max |f| over cells outside the given set.
    pub fn max_abs_outside(&self, set: &CellSet) -> f64 {
        assert_eq!(self.grid, set.grid);
        self.values
            .iter()
            .zip(&set.bits)
            .filter(|(_, &inside)| !inside)
            .fold(0.0f64, |m, (&v, _)| m.max(v.abs()))
    }

    /// Cells where the field exceeds the threshold.
    pub fn support_mask(&self, threshold: f64) -> CellSet {
        let bits = self.values.iter().map(|&v| v > threshold).collect();
        CellSet { grid: self.grid, bits }
    }

    /// Zero the field outside a cell set.
    pub fn restricted_to(&self, set: &CellSet) -> ScalarField {
        assert_eq!(self.grid, set.grid);
        let values = self
            .values
            .iter()
            .zip(&set.bits)
            .map(|(&v, &inside)| if inside { v } else { 0.0 })
            .collect();
        ScalarField { grid: self.grid, values, cap: self.cap }
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        let values = self.values.iter().map(|&v| c * v).collect();
        ScalarField { grid: self.grid, values, cap: None }
    }

    /// self - other.
    pub fn minus(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        ScalarField { grid: self.grid, values, cap: None }
    }

    pub fn plus(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        ScalarField { grid: self.grid, values, cap: None }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    /// Check the density bounds 0 ≤ value ≤ cap; returns the worst
    /// violation (0 when clean).
    pub fn density_violation(&self) -> f64 {
        let cap = self.cap.unwrap_or(f64::INFINITY);
        self.values
            .iter()
            .fold(0.0f64, |m, &v| m.max((-v).max(v - cap)))
    }

    /// Bilinear interpolation at a point (linear in 1D). Outside the grid
    /// the field is extended by zero.
    pub fn interp(&self, x: f64, y: f64) -> f64 {
        let g = self.grid;
        let fx = (x - g.x0) / g.h - 0.5;
        let i0f = fx.floor();
        let tx = fx - i0f;
        let sample = |i: i64, j: i64| -> f64 {
            if i < 0 || j < 0 || i >= g.nx as i64 || j >= g.ny as i64 {
                0.0
            } else {
                self.values[g.idx(i as usize, j as usize)]
            }
        };
        if g.dim == 1 {
            let i0 = i0f as i64;
            return sample(i0, 0) * (1.0 - tx) + sample(i0 + 1, 0) * tx;
        }
        let fy = (y - g.y0) / g.h - 0.5;
        let j0f = fy.floor();
        let ty = fy - j0f;
        let (i0, j0) = (i0f as i64, j0f as i64);
        sample(i0, j0) * (1.0 - tx) * (1.0 - ty)
            + sample(i0 + 1, j0) * tx * (1.0 - ty)
            + sample(i0, j0 + 1) * (1.0 - tx) * ty
            + sample(i0 + 1, j0 + 1) * tx * ty
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, DomainKind, DomainSpec};

    #[test]
    fn indicator_mass_matches_measure() {
        let d = build_domain(&DomainSpec::new(DomainKind::Ball, 32)).unwrap();
        let f = ScalarField::indicator(&d.cells);
        assert!((f.integral() - d.cells.measure()).abs() < 1e-12);
    }

    #[test]
    fn antialiased_shell_mass_is_sharp() {
        let d = build_domain(&DomainSpec::new(DomainKind::Ball, 64)).unwrap();
        let shell = ScalarField::shell_indicator(d.grid, 0.5, 1.0, 16);
        let expect = std::f64::consts::PI * (1.0 - 0.25);
        // Subsampled coverage beats center-rasterization by orders of
        // magnitude; the bound here is h^2-level.
        assert!(
            (shell.integral() - expect).abs() < 2e-4,
            "mass {} vs {}",
            shell.integral(),
            expect
        );
    }

    #[test]
    fn interval_shell_is_exact() {
        let d = build_domain(&DomainSpec::new(DomainKind::Interval, 100)).unwrap();
        let shell = ScalarField::shell_indicator(d.grid, 0.25, 0.75, 1);
        assert!((shell.integral() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interp_reproduces_linear_functions() {
        let d = build_domain(&DomainSpec::new(DomainKind::Square, 32)).unwrap();
        let f = ScalarField::from_fn(d.grid, |x, y| 2.0 * x - y + 0.3);
        for &(x, y) in &[(0.3, 0.4), (0.51, 0.22), (0.9, 0.88)] {
            let got = f.interp(x, y);
            let want = 2.0 * x - y + 0.3;
            assert!((got - want).abs() < 1e-12, "at ({x},{y}): {got} vs {want}");
        }
    }
}
