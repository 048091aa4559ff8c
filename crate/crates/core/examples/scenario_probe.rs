//! Run any scenario at chosen resolution and dump the report.

use stefan_lab_core::scenario::*;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "radial".into());
    let n: usize = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(128);
    let t0 = std::time::Instant::now();
    let out = match which.as_str() {
        "radial" => scenario_radial(RadialDomain::Ball, 0.5, n),
        "radial_annulus" => scenario_radial(RadialDomain::Annulus { rho: 0.5 }, 0.5, n),
        "nonuni" => scenario_non_universality(0.01, n),
        "fourier" => scenario_fourier(7, 0.45, n),
        "nucleation" => scenario_nucleation_1d(n, 0.02),
        "fractal0" => scenario_fractal_freezing(0.0, n),
        "fractal5" => scenario_fractal_freezing(0.05, n),
        "stability" => scenario_stability(n),
        "mc_exit" => scenario_mc_exit(n, 2e-6, 1),
        "mc_shell" => scenario_mc_shell(std::env::var("MCN").ok().and_then(|s| s.parse().ok()).unwrap_or(200), n, 1),
        "mc_glue" => scenario_mc_glue(200, n, 1),
        _ => {
            eprintln!("unknown scenario");
            return;
        }
    };
    match out {
        Ok(o) => {
            println!("scenario {} passed={} ({:.2?})", o.report.id, o.report.passed, t0.elapsed());
            for c in &o.report.criteria {
                println!(
                    "  [{}] {}: measured {:.6e} {} {:.6e}  ({})",
                    if c.pass { "ok" } else { "FAIL" },
                    c.name,
                    c.measured,
                    if c.upper { "<=" } else { ">=" },
                    c.bound,
                    c.oracle
                );
            }
            for n in &o.report.notes {
                println!("  note: {n}");
            }
        }
        Err(e) => println!("error: {e}"),
    }
}
