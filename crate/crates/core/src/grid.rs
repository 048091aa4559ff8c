//! Cell-centered grids, domain rasterization, face-based null sets, and
//! dyadic decomposition.
//!
//! Cells are squares (segments in 1D) of side h = 1/n. A cell belongs to a
//! continuum domain iff its center does, giving a consistent O(h) geometry
//! error. Null sets are stored as sets of grid *faces*: they block adjacency
//! between the two cells sharing the face while contributing zero measure.

use crate::error::{Error, Result};

/// Cell-centered grid covering a padded box. `dim` is 1 or 2; in 1D the
/// y-direction collapses to a single row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    /// Cell side length.
    pub h: f64,
    /// Coordinates of the lower-left corner of cell (0,0).
    pub x0: f64,
    pub y0: f64,
}

impl Grid {
    pub fn new_1d(nx: usize, h: f64, x0: f64) -> Self {
        Grid { dim: 1, nx, ny: 1, h, x0, y0: 0.0 }
    }

    pub fn new_2d(nx: usize, ny: usize, h: f64, x0: f64, y0: f64) -> Self {
        Grid { dim: 2, nx, ny, h, x0, y0 }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Center of cell (i, j).
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x0 + (i as f64 + 0.5) * self.h,
            self.y0 + (j as f64 + 0.5) * self.h,
        )
    }

    /// Cell volume h^d.
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 { self.h } else { self.h * self.h }
    }

    /// Cell containing the point, if inside the grid box.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = (x - self.x0) / self.h;
        let fj = if self.dim == 1 { 0.5 } else { (y - self.y0) / self.h };
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi.floor() as usize, fj.floor() as usize);
        if i < self.nx && j < self.ny {
            Some((i, j))
        } else {
            None
        }
    }
}

/// Continuum domains the lab knows how to rasterize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    /// (0, 1) in one dimension.
    Interval,
    /// Unit ball in the plane.
    Ball,
    /// {rho < |x| < 1} in the plane.
    Annulus { rho: f64 },
    /// Unit square (0,1)^2.
    Square,
}

/// Geometric description of the initial domain U plus grid resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Cells per unit length.
    pub n: usize,
    /// Cells of zero padding outside the bounding box of U.
    pub pad: usize,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, n: usize) -> Self {
        DomainSpec { kind, n, pad: n / 2 }
    }

    pub fn with_pad(kind: DomainKind, n: usize, pad: usize) -> Self {
        DomainSpec { kind, n, pad }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::InvalidDomain(format!(
                "resolution n = {} below minimum 16",
                self.n
            )));
        }
        if self.pad < self.n / 4 {
            return Err(Error::InvalidDomain(format!(
                "pad {} below n/4 = {}",
                self.pad,
                self.n / 4
            )));
        }
        if let DomainKind::Annulus { rho } = self.kind {
            if !(0.0 < rho && rho < 1.0) {
                return Err(Error::InvalidDomain(format!("annulus rho = {rho} not in (0,1)")));
            }
            // The hole and the gap must both span at least 4 cells.
            let hole_cells = 2.0 * rho * self.n as f64;
            let gap_cells = (1.0 - rho) * self.n as f64;
            if hole_cells < 4.0 || gap_cells < 4.0 {
                return Err(Error::InvalidDomain(format!(
                    "annulus rho = {rho} unresolvable at n = {}: hole {hole_cells:.1} / gap {gap_cells:.1} cells",
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            _ => 2,
        }
    }

    /// Signed membership test for the continuum domain.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self.kind {
            DomainKind::Interval => 0.0 < x && x < 1.0,
            DomainKind::Ball => x * x + y * y < 1.0,
            DomainKind::Annulus { rho } => {
                let r2 = x * x + y * y;
                rho * rho < r2 && r2 < 1.0
            }
            DomainKind::Square => 0.0 < x && x < 1.0 && 0.0 < y && y < 1.0,
        }
    }

    /// Distance of an interior point to the domain boundary.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            DomainKind::Interval => x.min(1.0 - x),
            DomainKind::Ball => 1.0 - (x * x + y * y).sqrt(),
            DomainKind::Annulus { rho } => {
                let r = (x * x + y * y).sqrt();
                (1.0 - r).min(r - rho)
            }
            DomainKind::Square => x.min(1.0 - x).min(y.min(1.0 - y)),
        }
    }
}

/// Boolean mask over the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    pub grid: Grid,
    pub bits: Vec<bool>,
}

impl CellSet {
    pub fn empty(grid: Grid) -> Self {
        CellSet { grid, bits: vec![false; grid.n_cells()] }
    }

    pub fn full(grid: Grid) -> Self {
        CellSet { grid, bits: vec![true; grid.n_cells()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> bool) -> Self {
        let mut bits = vec![false; grid.n_cells()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                bits[grid.idx(i, j)] = f(x, y);
            }
        }
        CellSet { grid, bits }
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.bits[self.grid.idx(i, j)]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Lebesgue measure: cell count times h^d.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    fn checked_zip(&self, other: &CellSet) -> impl Iterator<Item = (bool, bool)> + '_ {
        assert_eq!(self.grid, other.grid, "cell sets live on different grids");
        self.bits.iter().copied().zip(other.bits.iter().copied().collect::<Vec<_>>())
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let bits = self.checked_zip(other).map(|(a, b)| a || b).collect();
        CellSet { grid: self.grid, bits }
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let bits = self.checked_zip(other).map(|(a, b)| a && b).collect();
        CellSet { grid: self.grid, bits }
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        let bits = self.checked_zip(other).map(|(a, b)| a && !b).collect();
        CellSet { grid: self.grid, bits }
    }

    pub fn sym_diff(&self, other: &CellSet) -> CellSet {
        let bits = self.checked_zip(other).map(|(a, b)| a != b).collect();
        CellSet { grid: self.grid, bits }
    }

    /// Cells of the set that touch (4-adjacency) a cell outside it, or the
    /// grid edge.
    pub fn boundary_cells(&self) -> CellSet {
        let g = self.grid;
        let mut out = CellSet::empty(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                if !self.contains(i, j) {
                    continue;
                }
                let edge = i == 0
                    || i + 1 == g.nx
                    || (g.dim == 2 && (j == 0 || j + 1 == g.ny))
                    || !self.contains(i - 1, j)
                    || !self.contains(i + 1, j)
                    || (g.dim == 2 && j > 0 && !self.contains(i, j - 1))
                    || (g.dim == 2 && j + 1 < g.ny && !self.contains(i, j + 1));
                out.bits[g.idx(i, j)] = edge;
            }
        }
        out
    }

    /// Morphological dilation by `k` cells (4-adjacency, iterated).
    pub fn dilate(&self, k: usize) -> CellSet {
        let g = self.grid;
        let mut cur = self.clone();
        for _ in 0..k {
            let mut next = cur.clone();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    if cur.contains(i, j) {
                        continue;
                    }
                    let hit = (i > 0 && cur.contains(i - 1, j))
                        || (i + 1 < g.nx && cur.contains(i + 1, j))
                        || (g.dim == 2 && j > 0 && cur.contains(i, j - 1))
                        || (g.dim == 2 && j + 1 < g.ny && cur.contains(i, j + 1));
                    if hit {
                        next.bits[g.idx(i, j)] = true;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Morphological erosion by `k` cells.
    pub fn erode(&self, k: usize) -> CellSet {
        let g = self.grid;
        let mut cur = self.clone();
        for _ in 0..k {
            let boundary = cur.boundary_cells();
            cur = cur.difference(&boundary);
            let _ = g;
        }
        cur
    }

    /// Connected components under 4-adjacency, honoring blocked faces.
    /// Returns (label per cell with usize::MAX outside, component count).
    pub fn components(&self, faces: Option<&FaceSet>) -> (Vec<usize>, usize) {
        let g = self.grid;
        let mut label = vec![usize::MAX; g.n_cells()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..g.n_cells() {
            if !self.bits[start] || label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (i, j) = (idx % g.nx, idx / g.nx);
                let mut visit = |ni: usize, nj: usize| {
                    let nidx = g.idx(ni, nj);
                    if self.bits[nidx] && label[nidx] == usize::MAX {
                        label[nidx] = count;
                        stack.push(nidx);
                    }
                };
                let open_x = |ii, jj| faces.map_or(true, |f| !f.blocked_x(ii, jj));
                let open_y = |ii, jj| faces.map_or(true, |f| !f.blocked_y(ii, jj));
                if i > 0 && open_x(i - 1, j) {
                    visit(i - 1, j);
                }
                if i + 1 < g.nx && open_x(i, j) {
                    visit(i + 1, j);
                }
                if g.dim == 2 {
                    if j > 0 && open_y(i, j - 1) {
                        visit(i, j - 1);
                    }
                    if j + 1 < g.ny && open_y(i, j) {
                        visit(i, j + 1);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn component_count(&self, faces: Option<&FaceSet>) -> usize {
        self.components(faces).1
    }

    /// Indices of cells in the set, row-major order.
    pub fn iter_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }
}

/// Set of blocked grid faces. A blocked face severs the adjacency between
/// the two cells sharing it; the set itself has zero cell volume.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceSet {
    pub grid: Grid,
    /// Face between (i,j) and (i+1,j); index j*(nx-1)+i.
    x_faces: Vec<bool>,
    /// Face between (i,j) and (i,j+1); index j*nx+i.
    y_faces: Vec<bool>,
}

impl FaceSet {
    pub fn empty(grid: Grid) -> Self {
        let nxf = (grid.nx.saturating_sub(1)) * grid.ny;
        let nyf = if grid.dim == 2 { grid.nx * grid.ny.saturating_sub(1) } else { 0 };
        FaceSet { grid, x_faces: vec![false; nxf], y_faces: vec![false; nyf] }
    }

    pub fn is_empty(&self) -> bool {
        !self.x_faces.iter().any(|&b| b) && !self.y_faces.iter().any(|&b| b)
    }

    #[inline]
    pub fn blocked_x(&self, i: usize, j: usize) -> bool {
        i + 1 < self.grid.nx && self.x_faces[j * (self.grid.nx - 1) + i]
    }

    #[inline]
    pub fn blocked_y(&self, i: usize, j: usize) -> bool {
        self.grid.dim == 2 && j + 1 < self.grid.ny && self.y_faces[j * self.grid.nx + i]
    }

    pub fn block_x(&mut self, i: usize, j: usize) {
        self.x_faces[j * (self.grid.nx - 1) + i] = true;
    }

    pub fn block_y(&mut self, i: usize, j: usize) {
        self.y_faces[j * self.grid.nx + i] = true;
    }

    pub fn count_blocked(&self) -> usize {
        self.x_faces.iter().filter(|&&b| b).count() + self.y_faces.iter().filter(|&&b| b).count()
    }

    /// The null set occupies no cells; its grid measure is exactly zero.
    pub fn cell_measure(&self) -> f64 {
        0.0
    }

    /// Cells adjacent to at least one blocked face.
    pub fn adjacent_cells(&self) -> CellSet {
        let g = self.grid;
        let mut out = CellSet::empty(g);
        for j in 0..g.ny {
            for i in 0..g.nx.saturating_sub(1) {
                if self.x_faces[j * (g.nx - 1) + i] {
                    out.bits[g.idx(i, j)] = true;
                    out.bits[g.idx(i + 1, j)] = true;
                }
            }
        }
        if g.dim == 2 {
            for j in 0..g.ny.saturating_sub(1) {
                for i in 0..g.nx {
                    if self.y_faces[j * g.nx + i] {
                        out.bits[g.idx(i, j)] = true;
                        out.bits[g.idx(i, j + 1)] = true;
                    }
                }
            }
        }
        out
    }
}

/// Codimension-one pieces a null set is assembled from. Coordinates are
/// continuum positions; they are snapped to the nearest grid line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullSegment {
    /// {x = at} × [from, to] — blocks x-faces.
    Vertical { at: f64, from: f64, to: f64 },
    /// [from, to] × {y = at} — blocks y-faces.
    Horizontal { at: f64, from: f64, to: f64 },
    /// Single point in 1D.
    Point { at: f64 },
}

/// A rasterized domain: the grid plus the cell set of U.
#[derive(Debug, Clone)]
pub struct Domain {
    pub spec: DomainSpec,
    pub grid: Grid,
    pub cells: CellSet,
}

/// Rasterize a domain spec onto a padded grid. Cells whose centers lie
/// strictly inside the continuum domain count as interior.
pub fn build_domain(spec: &DomainSpec) -> Result<Domain> {
    spec.validate()?;
    let h = 1.0 / spec.n as f64;
    let pad = spec.pad;
    let grid = match spec.kind {
        DomainKind::Interval => Grid::new_1d(spec.n + 2 * pad, h, -(pad as f64) * h),
        DomainKind::Square => {
            let n = spec.n + 2 * pad;
            Grid::new_2d(n, n, h, -(pad as f64) * h, -(pad as f64) * h)
        }
        DomainKind::Ball | DomainKind::Annulus { .. } => {
            let n = 2 * spec.n + 2 * pad;
            let origin = -1.0 - (pad as f64) * h;
            Grid::new_2d(n, n, h, origin, origin)
        }
    };
    let cells = CellSet::from_fn(grid, |x, y| spec.contains(x, y));
    Ok(Domain { spec: *spec, grid, cells })
}

impl Domain {
    /// Cells of U within continuum distance eps of the domain boundary.
    pub fn near_boundary_band(&self, eps: f64) -> CellSet {
        let spec = *&self.spec;
        let mut out = CellSet::empty(self.grid);
        for idx in self.cells.iter_cells() {
            let (i, j) = (idx % self.grid.nx, idx / self.grid.nx);
            let (x, y) = self.grid.center(i, j);
            if spec.boundary_distance(x, y) < eps {
                out.bits[idx] = true;
            }
        }
        out
    }
}

/// Snap a continuum coordinate to the nearest grid line index of `grid`
/// along x (lines sit at x0 + i*h, i = 0..=nx).
fn snap_line(coord: f64, origin: f64, h: f64, count: usize) -> usize {
    let k = ((coord - origin) / h).round();
    k.clamp(0.0, count as f64) as usize
}

/// Rasterize a closed null set given as segments into a face set.
///
/// Every blocked face must separate two cells of U; a descriptor reaching
/// outside U is rejected.
pub fn rasterize_null_set(domain: &Domain, segments: &[NullSegment]) -> Result<FaceSet> {
    let g = domain.grid;
    let mut faces = FaceSet::empty(g);
    for seg in segments {
        match *seg {
            NullSegment::Point { at } => {
                if g.dim != 1 {
                    return Err(Error::DescriptorOutsideDomain(
                        "point null sets only apply in 1D".into(),
                    ));
                }
                let line = snap_line(at, g.x0, g.h, g.nx);
                if line == 0 || line >= g.nx {
                    return Err(Error::DescriptorOutsideDomain(format!("point {at} at grid edge")));
                }
                let (il, ir) = (line - 1, line);
                if !domain.cells.contains(il, 0) || !domain.cells.contains(ir, 0) {
                    return Err(Error::DescriptorOutsideDomain(format!("point {at} outside U")));
                }
                faces.block_x(il, 0);
            }
            NullSegment::Vertical { at, from, to } => {
                let line = snap_line(at, g.x0, g.h, g.nx);
                if line == 0 || line >= g.nx {
                    return Err(Error::DescriptorOutsideDomain(format!("segment x={at} at grid edge")));
                }
                // Block faces whose closed span lies inside [from, to].
                for j in 0..g.ny {
                    let ylo = g.y0 + j as f64 * g.h;
                    let yhi = ylo + g.h;
                    if ylo >= from - 1e-12 && yhi <= to + 1e-12 {
                        let (il, ir) = (line - 1, line);
                        if !domain.cells.contains(il, j) || !domain.cells.contains(ir, j) {
                            return Err(Error::DescriptorOutsideDomain(format!(
                                "segment x={at} leaves U at row {j}"
                            )));
                        }
                        faces.block_x(il, j);
                    }
                }
            }
            NullSegment::Horizontal { at, from, to } => {
                let line = snap_line(at, g.y0, g.h, g.ny);
                if line == 0 || line >= g.ny {
                    return Err(Error::DescriptorOutsideDomain(format!("segment y={at} at grid edge")));
                }
                for i in 0..g.nx {
                    let xlo = g.x0 + i as f64 * g.h;
                    let xhi = xlo + g.h;
                    if xlo >= from - 1e-12 && xhi <= to + 1e-12 {
                        let (jl, ju) = (line - 1, line);
                        if !domain.cells.contains(i, jl) || !domain.cells.contains(i, ju) {
                            return Err(Error::DescriptorOutsideDomain(format!(
                                "segment y={at} leaves U at column {i}"
                            )));
                        }
                        faces.block_y(i, jl);
                    }
                }
            }
        }
    }
    Ok(faces)
}

/// Axis-aligned dyadic cube of cells: side `size` cells anchored at
/// (i0, j0). In 1D it is an interval of cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicCube {
    pub i0: usize,
    pub j0: usize,
    pub size: usize,
}

impl DyadicCube {
    pub fn cell_count(&self, dim: usize) -> usize {
        if dim == 1 { self.size } else { self.size * self.size }
    }

    /// Cell mask of this cube on the given grid.
    pub fn mask(&self, grid: Grid) -> CellSet {
        let mut out = CellSet::empty(grid);
        let jmax = if grid.dim == 1 { 1 } else { self.size };
        for dj in 0..jmax {
            for di in 0..self.size {
                out.bits[grid.idx(self.i0 + di, self.j0 + dj)] = true;
            }
        }
        out
    }
}

/// Decompose U (minus blocked faces) into disjoint open dyadic cubes.
///
/// A cube is accepted when all of its cells lie in U and no blocked face
/// crosses its interior; otherwise it is split in four (two in 1D) down to
/// single cells. Closures of the output cover U up to the flagged faces.
pub fn dyadic_decompose(u: &CellSet, faces: &FaceSet) -> Vec<DyadicCube> {
    let g = u.grid;
    assert_eq!(g, faces.grid, "face set on a different grid");
    // Root: smallest power-of-two square covering the bounding box of U.
    let mut lo = (usize::MAX, usize::MAX);
    let mut hi = (0usize, 0usize);
    for idx in u.iter_cells() {
        let (i, j) = (idx % g.nx, idx / g.nx);
        lo = (lo.0.min(i), lo.1.min(j));
        hi = (hi.0.max(i), hi.1.max(j));
    }
    if hi.0 < lo.0 {
        return Vec::new();
    }
    let extent = (hi.0 - lo.0 + 1).max(if g.dim == 2 { hi.1 - lo.1 + 1 } else { 1 });
    let size = extent.next_power_of_two();
    let root = DyadicCube { i0: lo.0, j0: lo.1, size };
    let mut accepted = Vec::new();
    let mut stack = vec![root];
    while let Some(cube) = stack.pop() {
        if cube_all_inside(u, &cube) && !cube_crossed(faces, &cube) {
            accepted.push(cube);
            continue;
        }
        if cube.size == 1 {
            // Single cells have no interior faces; drop it if outside U.
            continue;
        }
        let half = cube.size / 2;
        stack.push(DyadicCube { i0: cube.i0, j0: cube.j0, size: half });
        stack.push(DyadicCube { i0: cube.i0 + half, j0: cube.j0, size: half });
        if g.dim == 2 {
            stack.push(DyadicCube { i0: cube.i0, j0: cube.j0 + half, size: half });
            stack.push(DyadicCube { i0: cube.i0 + half, j0: cube.j0 + half, size: half });
        }
    }
    // Deterministic ordering regardless of recursion order.
    accepted.sort_by_key(|c| (c.j0, c.i0, c.size));
    accepted
}

fn cube_all_inside(u: &CellSet, cube: &DyadicCube) -> bool {
    let g = u.grid;
    let jmax = if g.dim == 1 { 1 } else { cube.size };
    if cube.i0 + cube.size > g.nx {
        return false;
    }
    if g.dim == 2 && cube.j0 + cube.size > g.ny {
        return false;
    }
    for dj in 0..jmax {
        for di in 0..cube.size {
            if !u.contains(cube.i0 + di, cube.j0 + dj) {
                return false;
            }
        }
    }
    true
}

/// Does any blocked face lie strictly inside the cube?
fn cube_crossed(faces: &FaceSet, cube: &DyadicCube) -> bool {
    let g = faces.grid;
    let jmax = if g.dim == 1 { 1 } else { cube.size };
    for dj in 0..jmax {
        let j = cube.j0 + dj;
        // x-faces interior to the cube: between columns i0+di and i0+di+1
        // for di = 0..size-1.
        for di in 0..cube.size.saturating_sub(1) {
            if faces.blocked_x(cube.i0 + di, j) {
                return true;
            }
        }
    }
    if g.dim == 2 {
        for dj in 0..cube.size.saturating_sub(1) {
            for di in 0..cube.size {
                if faces.blocked_y(cube.i0 + di, cube.j0 + dj) {
                    return true;
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_measure_is_one() {
        let d = build_domain(&DomainSpec::new(DomainKind::Interval, 100)).unwrap();
        assert_eq!(d.cells.count(), 100);
        assert!((d.cells.measure() - 1.0).abs() <= 1.0 / 100.0);
    }

    #[test]
    fn ball_measure_close_to_pi() {
        let d = build_domain(&DomainSpec::new(DomainKind::Ball, 64)).unwrap();
        let h = d.grid.h;
        let pi = std::f64::consts::PI;
        assert!(
            (d.cells.measure() - pi).abs() <= 4.0 * h,
            "|U| = {} vs pi = {}",
            d.cells.measure(),
            pi
        );
    }

    #[test]
    fn annulus_measure_close_to_three_quarter_pi() {
        let d = build_domain(&DomainSpec::new(DomainKind::Annulus { rho: 0.5 }, 64)).unwrap();
        let h = d.grid.h;
        let expect = 0.75 * std::f64::consts::PI;
        assert!(
            (d.cells.measure() - expect).abs() <= 4.0 * h,
            "|A| = {} vs 3pi/4 = {}",
            d.cells.measure(),
            expect
        );
    }

    #[test]
    fn measure_error_shrinks_linearly() {
        let pi = std::f64::consts::PI;
        let err = |n: usize| {
            let d = build_domain(&DomainSpec::new(DomainKind::Ball, n)).unwrap();
            (d.cells.measure() - pi).abs()
        };
        let (e1, e2) = (err(32), err(64));
        // O(h) rate: halving h should at least halve the error, with slack.
        assert!(e2 <= 0.75 * e1 + 1e-3, "e(32)={e1:.2e} e(64)={e2:.2e}");
    }

    #[test]
    fn annulus_too_coarse_rejected() {
        let spec = DomainSpec::new(DomainKind::Annulus { rho: 0.05 }, 16);
        assert!(build_domain(&spec).is_err());
    }

    #[test]
    fn midline_segment_blocks_half_the_faces() {
        let n = 64;
        let d = build_domain(&DomainSpec::new(DomainKind::Square, n)).unwrap();
        let f = rasterize_null_set(
            &d,
            &[NullSegment::Vertical { at: 0.5, from: 0.25, to: 0.75 }],
        )
        .unwrap();
        assert_eq!(f.count_blocked(), n / 2);
        assert_eq!(f.cell_measure(), 0.0);
    }

    #[test]
    fn cross_blocks_sum_of_faces() {
        // Two segments through the same grid node: face sets are disjoint,
        // so the blocked-face count is exactly the sum.
        let n = 64;
        let d = build_domain(&DomainSpec::new(DomainKind::Square, n)).unwrap();
        let f = rasterize_null_set(
            &d,
            &[
                NullSegment::Vertical { at: 0.5, from: 0.25, to: 0.75 },
                NullSegment::Horizontal { at: 0.5, from: 0.25, to: 0.75 },
            ],
        )
        .unwrap();
        assert_eq!(f.count_blocked(), n / 2 + n / 2);
    }

    #[test]
    fn empty_descriptor_gives_empty_face_set_and_identity_decomposition() {
        let d = build_domain(&DomainSpec::new(DomainKind::Square, 64)).unwrap();
        let f = rasterize_null_set(&d, &[]).unwrap();
        assert!(f.is_empty());
        let cubes = dyadic_decompose(&d.cells, &f);
        assert_eq!(cubes.len(), 1);
        assert_eq!(cubes[0].size, 64);
    }

    #[test]
    fn descriptor_outside_domain_rejected() {
        let d = build_domain(&DomainSpec::new(DomainKind::Square, 64)).unwrap();
        let r = rasterize_null_set(&d, &[NullSegment::Vertical { at: 0.5, from: 0.5, to: 1.5 }]);
        assert!(r.is_err());
    }

    #[test]
    fn interval_splits_at_midpoint() {
        let d = build_domain(&DomainSpec::new(DomainKind::Interval, 64)).unwrap();
        let f = rasterize_null_set(&d, &[NullSegment::Point { at: 0.5 }]).unwrap();
        assert_eq!(f.count_blocked(), 1);
        let cubes = dyadic_decompose(&d.cells, &f);
        assert_eq!(cubes.len(), 2);
        assert!(cubes.iter().all(|c| c.size == 32));
    }

    #[test]
    fn decomposition_is_disjoint_and_covers() {
        let d = build_domain(&DomainSpec::new(DomainKind::Square, 64)).unwrap();
        let f = rasterize_null_set(
            &d,
            &[NullSegment::Vertical { at: 0.5, from: 0.25, to: 0.75 }],
        )
        .unwrap();
        let cubes = dyadic_decompose(&d.cells, &f);
        let mut covered = CellSet::empty(d.grid);
        let mut total = 0usize;
        for c in &cubes {
            let m = c.mask(d.grid);
            assert_eq!(covered.intersection(&m).count(), 0, "cubes overlap");
            covered = covered.union(&m);
            total += c.cell_count(d.grid.dim);
            assert!(!cube_crossed(&f, c), "cube straddles a blocked face");
        }
        assert_eq!(total, d.cells.count());
        assert_eq!(covered, d.cells);
    }

    #[test]
    fn blocked_midline_disconnects_square() {
        let n = 64;
        let d = build_domain(&DomainSpec::new(DomainKind::Square, n)).unwrap();
        // A full-height midline cuts the square in two.
        let f = rasterize_null_set(
            &d,
            &[NullSegment::Vertical { at: 0.5, from: 0.0, to: 1.0 }],
        )
        .unwrap();
        assert_eq!(d.cells.component_count(None), 1);
        assert_eq!(d.cells.component_count(Some(&f)), 2);
        // A partial midline leaves it connected.
        let f2 = rasterize_null_set(
            &d,
            &[NullSegment::Vertical { at: 0.5, from: 0.25, to: 0.75 }],
        )
        .unwrap();
        assert_eq!(d.cells.component_count(Some(&f2)), 1);
    }

    #[test]
    fn set_algebra_measure_identity() {
        let d = build_domain(&DomainSpec::new(DomainKind::Ball, 32)).unwrap();
        let a = d.cells.clone();
        let b = d.near_boundary_band(0.3);
        let lhs = a.sym_diff(&b).measure();
        let rhs = a.measure() + b.measure() - 2.0 * a.intersection(&b).measure();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
