//! Where do the two optimal zones differ?

use stefan_lab_core::field::ScalarField;
use stefan_lab_core::grid::{build_domain, DomainKind, DomainSpec};
use stefan_lab_core::primal_dual::*;

fn main() {
    let n = 128;
    let d = build_domain(&DomainSpec::new(DomainKind::Ball, n)).unwrap();
    let g = d.grid;
    let mu = ScalarField::shell_indicator(g, 0.0, 1.0, 16).scaled(0.5).with_cap(1.0).restricted_to(&d.cells);
    let w1 = WeightSpec::new(WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center: (0.0, 0.0) }, &d.cells).unwrap();
    let w2 = WeightSpec::new(WeightKind::QuarticCross { eps: 0.01 }, &d.cells).unwrap();
    let opts = SolveOptions { dual_modes: 16, ..Default::default() };
    let (p1, d1, _) = solve_primal_dual(&mu, &w1, &d.cells, &opts).unwrap();
    let (p2, d2, _) = solve_primal_dual(&mu, &w2, &d.cells, &opts).unwrap();
    let t1 = extract_transition_zone(&p1, &d1, &w1, &d.cells);
    let t2 = extract_transition_zone(&p2, &d2, &w2, &d.cells);
    let diff = t1.sigma.sym_diff(&t2.sigma);
    // angular histogram of the difference cells
    let mut hist = [0usize; 16];
    for idx in diff.iter_cells() {
        let (i, j) = (idx % g.nx, idx / g.nx);
        let (x, y) = g.center(i, j);
        let th = y.atan2(x).rem_euclid(2.0 * std::f64::consts::PI);
        hist[(th / (2.0 * std::f64::consts::PI) * 16.0) as usize % 16] += 1;
    }
    println!("diff = {:.5}, angular histogram (16 sectors): {:?}", diff.measure(), hist);
    // waiting pockets of the quartic zone
    for eps in [0.02, 0.05] {
        let band = d.near_boundary_band(eps);
        println!("|U_{eps} \\ S2| = {:.6}", band.difference(&t2.sigma).measure());
    }
}
