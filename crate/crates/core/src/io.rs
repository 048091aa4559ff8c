//! Dependency-free exporters: PGM images for fields and cell sets, CSV
//! tables for re-plotting elsewhere.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::field::ScalarField;
use crate::grid::CellSet;

/// Binary PGM (P5), 0/255 for a cell set.
pub fn write_set_pgm(path: &Path, set: &CellSet) -> Result<()> {
    let g = set.grid;
    let mut out = Vec::with_capacity(g.n_cells() + 64);
    write!(out, "P5\n{} {}\n255\n", g.nx, g.ny)?;
    // Image rows run top-down; grid rows bottom-up.
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            out.push(if set.contains(i, j) { 255u8 } else { 0u8 });
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Binary PGM (P5) heatmap of a field, linearly rescaled to 0..255.
pub fn write_field_pgm(path: &Path, field: &ScalarField) -> Result<()> {
    let g = field.grid;
    let lo = field.min();
    let hi = field.max();
    let span = (hi - lo).max(1e-300);
    let mut out = Vec::with_capacity(g.n_cells() + 64);
    write!(out, "P5\n{} {}\n255\n", g.nx, g.ny)?;
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let v = field.values[g.idx(i, j)];
            out.push((255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// CSV grid dump: x,y,value rows (x,value in 1D).
pub fn write_field_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let g = field.grid;
    let mut out = String::new();
    if g.dim == 1 {
        out.push_str("x,value\n");
        for i in 0..g.nx {
            let (x, _) = g.center(i, 0);
            out.push_str(&format!("{x},{}\n", field.values[g.idx(i, 0)]));
        }
    } else {
        out.push_str("x,y,value\n");
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.center(i, j);
                out.push_str(&format!("{x},{y},{}\n", field.values[g.idx(i, j)]));
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// CSV cell list of a set: i,j,x,y rows.
pub fn write_set_csv(path: &Path, set: &CellSet) -> Result<()> {
    let g = set.grid;
    let mut out = String::from("i,j,x,y\n");
    for idx in set.iter_cells() {
        let (i, j) = (idx % g.nx, idx / g.nx);
        let (x, y) = g.center(i, j);
        out.push_str(&format!("{i},{j},{x},{y}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, DomainKind, DomainSpec};

    #[test]
    fn pgm_roundtrip_header() {
        let d = build_domain(&DomainSpec::new(DomainKind::Ball, 16)).unwrap();
        let tmp = std::env::temp_dir().join("stefan_lab_test_set.pgm");
        write_set_pgm(&tmp, &d.cells).unwrap();
        let bytes = std::fs::read(&tmp).unwrap();
        assert!(bytes.starts_with(b"P5\n"));
        let g = d.grid;
        assert_eq!(bytes.len() - bytes.windows(3).position(|w| w == b"55\n").unwrap() - 3, g.n_cells());
        std::fs::remove_file(&tmp).ok();
    }
}
