//! Scratch harness for tuning the primal-dual solver parameters.

use stefan_lab_core::field::ScalarField;
use stefan_lab_core::grid::{build_domain, DomainKind, DomainSpec};
use stefan_lab_core::primal_dual::{solve_primal_dual, SolveOptions, WeightKind, WeightSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(128);
    let sigma: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2.0);
    let dim: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1);
    let maxit: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(50_000);

    let (d, center) = if dim == 1 {
        (build_domain(&DomainSpec::new(DomainKind::Interval, n)).unwrap(), (0.5, 0.0))
    } else {
        (build_domain(&DomainSpec::new(DomainKind::Ball, n)).unwrap(), (0.0, 0.0))
    };
    let mu = ScalarField::shell_indicator(d.grid, 0.0, 1.0, 8).scaled(0.5).with_cap(1.0);
    let mu = mu.restricted_to(&d.cells);
    let w = WeightSpec::new(
        WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center },
        &d.cells,
    )
    .unwrap();
    let opts = SolveOptions {
        sigma,
        max_iters: maxit,
        check_every: 500,
        verbose: true,
        multilevel: args.get(5).map(|s| s == "ml").unwrap_or(false),
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    match solve_primal_dual(&mu, &w, &d.cells, &opts) {
        Ok((p, dual, rep)) => {
            println!(
                "n={n} dim={dim} sigma={sigma}: status {:?} iters {} gap {:.3e} res {:.3e} obj {:.8} defect {:.4e} time {:.2?}",
                rep.status, rep.iters, rep.gap, rep.eq_residual, p.objective, p.binarity_defect,
                t0.elapsed()
            );
            println!("dual: obj {:.8} min_psi {:.3e} min_lap_psi {:.3e}", dual.objective, dual.min_psi, dual.min_lap_psi);
        }
        Err(e) => println!("error: {e}"),
    }
}
