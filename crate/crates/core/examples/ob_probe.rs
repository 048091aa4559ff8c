//! Scratch harness for the 1D nucleation trajectory.

use stefan_lab_core::field::ScalarField;
use stefan_lab_core::grid::{build_domain, DomainKind, DomainSpec};
use stefan_lab_core::obstacle::{freezing_map, nucleation_events, run_obstacle, ObstacleOptions};
use stefan_lab_core::radial::{nucleation_quartic, targets_1d, ShellKind};

fn main() {
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(500);
    let t0 = std::time::Instant::now();
    let d = build_domain(&DomainSpec::new(DomainKind::Interval, n)).unwrap();
    let g = d.grid;
    let poly = nucleation_quartic();
    let shells = targets_1d(&poly).unwrap();
    let (a, b) = match shells.kind {
        ShellKind::Interval { a, b } => (a, b),
        _ => unreachable!(),
    };
    println!("a = {a:.9}, b = {b:.9}");
    // Closed-form w0 = double integral of (ν - μ).
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
        } else if x <= 1.0 {
            x * x / 2.0 + (a - b) * x + (b * b - a * a) / 2.0
        } else {
            // mass+moment matched: flat zero beyond 1
            0.0
        }
    };
    let w0 = ScalarField::from_fn(g, |x, _| {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            (int_nu(x) - int_mu(x)).max(0.0)
        }
    });
    let nu = ScalarField::shell_indicator(g, 0.0, a, 16)
        .plus(&ScalarField::shell_indicator(g, b, 1.0, 16));
    println!("w0(0.25) = {:.8} w0(0.5) = {:.8} w0(0.8) = {:.8}", w0.interp(0.25, 0.0), w0.interp(0.5, 0.0), w0.interp(0.8, 0.0));
    let opts = ObstacleOptions::with_resolution(g.h, 0.05);
    let traj = run_obstacle(&w0, &nu, &opts).unwrap();
    let fm = freezing_map(&traj, &d.cells);
    let s_at = |x: f64| {
        let (i, j) = g.locate(x, 0.0).unwrap();
        fm.s[g.idx(i, j)]
    };
    println!(
        "s(0.5) = {:.6} s(0.8) = {:.6} (dt = {:.3e}, steps {}, T_end {:.4})",
        s_at(0.5),
        s_at(0.8),
        traj.dt,
        traj.steps_taken,
        traj.final_time
    );
    let nuc = nucleation_events(&traj);
    println!("nucleation events: {}", nuc.len());
    for e in nuc.iter().take(5) {
        println!("  t = {:.6} comps {} -> {}", e.time, e.components_before, e.components_after);
    }
    println!("never cells: {} undecided: {}", fm.never.count(), fm.undecided.count());
    let mut max_s_shells = 0.0f64;
    for idx in d.cells.iter_cells() {
        let (i, j) = (idx % g.nx, idx / g.nx);
        let (x, _) = g.center(i, j);
        if (x < a || x > b) && fm.s[idx].is_finite() && fm.s[idx] > max_s_shells {
            max_s_shells = fm.s[idx];
        }
    }
    println!("max s over shell cells: {max_s_shells:.6}");
    println!("elapsed {:.2?}", t0.elapsed());
}
// (max-s diagnostic appended)
