use stefan_lab_core::field::ScalarField;
use stefan_lab_core::grid::{build_domain, DomainKind, DomainSpec};
use stefan_lab_core::primal_dual::*;

fn main() {
    let n = 128;
    let d = build_domain(&DomainSpec::new(DomainKind::Ball, n)).unwrap();
    let g = d.grid;
    let mu = ScalarField::shell_indicator(g, 0.0, 1.0, 16).scaled(0.5).with_cap(1.0).restricted_to(&d.cells);
    let w1 = WeightSpec::new(WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center: (0.0, 0.0) }, &d.cells).unwrap();
    let w2 = WeightSpec::new(WeightKind::HighOrderCross, &d.cells).unwrap();
    let opts = SolveOptions { dual_modes: 24, gap_tol: 1e-5, ..Default::default() };
    let (p1, d1, r1) = solve_primal_dual(&mu, &w1, &d.cells, &opts).unwrap();
    let (p2, d2, r2) = solve_primal_dual(&mu, &w2, &d.cells, &opts).unwrap();
    let t1 = extract_transition_zone(&p1, &d1, &w1, &d.cells);
    let t2 = extract_transition_zone(&p2, &d2, &w2, &d.cells);
    println!("r1 {:?} gap {:.2e}; r2 {:?} gap {:.2e}", r1.status, r1.gap, r2.status, r2.gap);
    println!("|S1|={:.4} |S2|={:.4} |S1 xor S2|={:.5}", t1.sigma.measure(), t2.sigma.measure(), t1.sigma.sym_diff(&t2.sigma).measure());
}
