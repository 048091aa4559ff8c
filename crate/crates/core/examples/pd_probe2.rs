//! Probe for the non-radial / annulus / square solver paths.

use stefan_lab_core::field::ScalarField;
use stefan_lab_core::grid::{build_domain, DomainKind, DomainSpec};
use stefan_lab_core::primal_dual::{
    extract_transition_zone, solve_primal_dual, SolveOptions, WeightKind, WeightSpec,
};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "quartic".into());
    let n: usize = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(128);
    let t0 = std::time::Instant::now();
    match which.as_str() {
        "quartic" => {
            let d = build_domain(&DomainSpec::new(DomainKind::Ball, n)).unwrap();
            let mu = ScalarField::shell_indicator(d.grid, 0.0, 1.0, 8)
                .scaled(0.5)
                .with_cap(1.0)
                .restricted_to(&d.cells);
            let w = WeightSpec::new(WeightKind::QuarticCross { eps: 0.01 }, &d.cells).unwrap();
            let modes =
                std::env::var("MODES").ok().and_then(|s| s.parse().ok()).unwrap_or(12usize);
            let ml = std::env::var("NOML").is_err();
            let mi: usize = std::env::var("MI").ok().and_then(|s| s.parse().ok()).unwrap_or(tol_default());
            let opts = SolveOptions { verbose: true, dual_modes: modes, multilevel: ml, max_iters: mi, ..Default::default() };
            let (p, dual, rep) = solve_primal_dual(&mu, &w, &d.cells, &opts).unwrap();
            let tz = extract_transition_zone(&p, &dual, &w, &d.cells);
            println!(
                "quartic n={n}: {:?} iters {} gap {:.3e} obj {:.8} |Σ| {:.5} ambig {:.4e} time {:.2?}",
                rep.status, rep.iters, rep.gap, p.objective, tz.sigma.measure(), tz.ambiguity,
                t0.elapsed()
            );
            // (ψ-u)(1,0):
            let psi_10 = dual.psi.interp(1.0 - d.grid.h, 0.0);
            let u_10 = w.kind.eval(1.0 - d.grid.h, 0.0);
            println!("(ψ-u)(1,0) ≈ {:.6} vs -45/2048+ε/2 = {:.6}", psi_10 - u_10, -45.0 / 2048.0 + 0.005);
        }
        "annulus" => {
            let d = build_domain(&DomainSpec::new(DomainKind::Annulus { rho: 0.5 }, n)).unwrap();
            let mu = ScalarField::shell_indicator(d.grid, 0.5, 1.0, 8)
                .scaled(0.5)
                .with_cap(1.0)
                .restricted_to(&d.cells);
            let w = WeightSpec::new(
                WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center: (0.0, 0.0) },
                &d.cells,
            )
            .unwrap();
            let opts = SolveOptions { verbose: true, ..Default::default() };
            let (p, dual, rep) = solve_primal_dual(&mu, &w, &d.cells, &opts).unwrap();
            let tz = extract_transition_zone(&p, &dual, &w, &d.cells);
            let shells = stefan_lab_core::radial::targets_annulus(
                &stefan_lab_core::radial::RadialDensity::constant(2, 0.5, 0.5),
            )
            .unwrap();
            println!(
                "annulus n={n}: {:?} iters {} gap {:.3e} obj {:.8} |Σ| {:.5} time {:.2?}",
                rep.status, rep.iters, rep.gap, p.objective, tz.sigma.measure(), t0.elapsed()
            );
            println!("closed-form shells: {:?}", shells.kind);
            if let stefan_lab_core::radial::ShellKind::Annulus { r1, r2 } = shells.kind {
                let want = ScalarField::shell_indicator(d.grid, 0.5, r1, 8)
                    .plus(&ScalarField::shell_indicator(d.grid, r2, 1.0, 8))
                    .support_mask(0.5)
                    .intersection(&d.cells);
                println!("|Σ Δ shells| = {:.5} (h = {:.5})", tz.sigma.sym_diff(&want).measure(), d.grid.h);
            }
        }
        "square" => {
            let d = build_domain(&DomainSpec::new(DomainKind::Square, n)).unwrap();
            let mu = ScalarField::indicator(&d.cells).scaled(0.75).with_cap(1.0);
            let w = WeightSpec::new(
                WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center: (0.5, 0.5) },
                &d.cells,
            )
            .unwrap();
            let opts = SolveOptions { verbose: true, max_iters: 40_000, ..Default::default() };
            let (p, dual, rep) = solve_primal_dual(&mu, &w, &d.cells, &opts).unwrap();
            let tz = extract_transition_zone(&p, &dual, &w, &d.cells);
            println!(
                "square n={n}: {:?} iters {} gap {:.3e} obj {:.8} |Σ| {:.5} defect {:.3e} time {:.2?}",
                rep.status, rep.iters, rep.gap, p.objective, tz.sigma.measure(), p.binarity_defect,
                t0.elapsed()
            );
            let _ = dual;
        }
        "quartic1d" => {
            let d = build_domain(&DomainSpec::new(DomainKind::Interval, n)).unwrap();
            let poly = stefan_lab_core::radial::nucleation_quartic();
            let mu = ScalarField::from_fn_on(d.grid, &d.cells, |x, _| poly.eval(x)).with_cap(2.0);
            let w = WeightSpec::new(
                WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center: (0.5, 0.0) },
                &d.cells,
            )
            .unwrap();
            let opts = SolveOptions { verbose: true, ..Default::default() };
            let (p, dual, rep) = solve_primal_dual(&mu, &w, &d.cells, &opts).unwrap();
            println!(
                "quartic1d n={n}: {:?} iters {} gap {:.3e} obj {:.9} defect {:.3e} dual {:.9} time {:.2?}",
                rep.status, rep.iters, rep.gap, p.objective, p.binarity_defect, dual.objective,
                t0.elapsed()
            );
        }
        _ => eprintln!("unknown probe"),
    }
}
// modes variant appended at build time via env var

fn tol_default() -> usize {
    stefan_lab_core::tol::PD_MAX_ITERS
}
