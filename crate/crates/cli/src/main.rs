//! Command-line front end: domain solves, obstacle evolutions, closed-form
//! radial targets, Monte Carlo experiments, and the canned scenarios.
//!
//! Every run writes its outputs under `--out/<run-id>/` together with a
//! manifest recording the full configuration, the seed, and the SHA-256 of
//! each output file. Re-running a manifest reproduces the hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use stefan_lab_core::config::Config;
use stefan_lab_core::field::ScalarField;
use stefan_lab_core::grid::{build_domain, DomainKind, DomainSpec};
use stefan_lab_core::obstacle::{freezing_map, nucleation_events, run_obstacle, ObstacleOptions};
use stefan_lab_core::primal_dual::{
    extract_transition_zone, solve_primal_dual, SolveOptions, WeightKind, WeightSpec,
};
use stefan_lab_core::radial::{
    nucleation_quartic, targets_1d, targets_annulus, targets_ball, RadialDensity, ShellKind,
};
use stefan_lab_core::scenario::{self, RadialDomain, ScenarioOutput};

#[derive(Parser)]
#[command(name = "stefan-lab", version, about = "Numerical laboratory for supercooled freezing fronts")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Configuration overrides, key=value (repeatable).
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    /// Output directory root.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run identifier (defaults to a deterministic label).
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Worker threads (also honored from STEFAN_LAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Interval,
    Ball,
    Annulus,
    Square,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    /// 2 − |x−c|²
    Radial,
    /// 1 − 15x⁴y⁴ − ε|x|²
    Quartic,
    /// 2 − 300x¹²y¹² − 1e-4|x|²
    HighOrder,
}

#[derive(Clone, Copy, ValueEnum)]
enum MuArg {
    /// Constant 1/2.
    Half,
    /// Constant 3/4.
    ThreeQuarters,
    /// Full density (identity embedding).
    Full,
    /// The nucleating quartic polynomial.
    Quartic,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the transition-zone optimization on a domain.
    Solve {
        #[arg(long, value_enum, default_value_t = DomainArg::Ball)]
        domain: DomainArg,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, value_enum, default_value_t = MuArg::Half)]
        mu: MuArg,
        #[arg(long, value_enum, default_value_t = WeightArg::Radial)]
        weight: WeightArg,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Solve and evolve the obstacle problem; export the freezing map.
    Obstacle {
        #[arg(long, value_enum, default_value_t = DomainArg::Ball)]
        domain: DomainArg,
        #[arg(long, default_value_t = 96)]
        n: usize,
        #[arg(long, value_enum, default_value_t = MuArg::ThreeQuarters)]
        mu: MuArg,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.2)]
        t_max: f64,
    },
    /// Closed-form radial target shells.
    Radial {
        #[arg(long, value_enum, default_value_t = DomainArg::Ball)]
        domain: DomainArg,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, value_enum, default_value_t = MuArg::Half)]
        mu: MuArg,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
    },
    /// Monte Carlo experiments.
    Mc {
        #[arg(long, value_enum, default_value_t = McCase::Exit)]
        case: McCase,
        #[arg(long, default_value_t = 20_000)]
        n_paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 2e-6)]
        dt: f64,
    },
    /// Run a canned experiment by name.
    Scenario {
        /// One of: radial, radial_annulus, non_universality, fourier,
        /// nucleation_1d, fractal_freezing_t0, fractal_freezing,
        /// stability, mc_exit, mc_shell, mc_glue.
        name: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// List the available scenarios.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum McCase {
    Exit,
    Shell,
    Glue,
}

struct Manifest {
    command: String,
    config: BTreeMap<String, String>,
    seed: u64,
    outputs: Vec<(String, String)>,
}

impl Manifest {
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "outputs": self.outputs.iter().map(|(p, h)| serde_json::json!({
                "path": p, "sha256": h,
            })).collect::<Vec<_>>(),
        })
    }
}

struct RunDir {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunDir {
    fn new(
        root: &Path,
        run_id: &str,
        command: String,
        config: BTreeMap<String, String>,
        seed: u64,
    ) -> std::io::Result<Self> {
        let dir = root.join(run_id);
        std::fs::create_dir_all(&dir)?;
        Ok(RunDir { dir, manifest: Manifest { command, config, seed, outputs: Vec::new() } })
    }

    fn record(&mut self, name: &str) {
        let path = self.dir.join(name);
        if let Ok(bytes) = std::fs::read(&path) {
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            self.manifest.outputs.push((name.to_string(), format!("{:x}", hasher.finalize())));
        }
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), serde_json::to_string_pretty(value).unwrap())?;
        self.record(name);
        Ok(())
    }

    fn finish(&self) -> std::io::Result<()> {
        std::fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&self.manifest.to_json()).unwrap(),
        )
    }
}

fn domain_spec(domain: DomainArg, n: usize, rho: f64) -> DomainSpec {
    match domain {
        DomainArg::Interval => DomainSpec::new(DomainKind::Interval, n),
        DomainArg::Ball => DomainSpec::new(DomainKind::Ball, n),
        DomainArg::Annulus => DomainSpec::new(DomainKind::Annulus { rho }, n),
        DomainArg::Square => DomainSpec::new(DomainKind::Square, n),
    }
}

fn mu_field(mu: MuArg, d: &stefan_lab_core::grid::Domain) -> ScalarField {
    let g = d.grid;
    match mu {
        MuArg::Half => ScalarField::indicator(&d.cells).scaled(0.5).with_cap(1.0),
        MuArg::ThreeQuarters => ScalarField::indicator(&d.cells).scaled(0.75).with_cap(1.0),
        MuArg::Full => ScalarField::indicator(&d.cells),
        MuArg::Quartic => {
            let poly = nucleation_quartic();
            ScalarField::from_fn_on(g, &d.cells, |x, _| poly.eval(x)).with_cap(2.0)
        }
    }
}

fn weight_spec(
    weight: WeightArg,
    eps: f64,
    center: (f64, f64),
    cells: &stefan_lab_core::grid::CellSet,
) -> stefan_lab_core::Result<WeightSpec> {
    let kind = match weight {
        WeightArg::Radial => WeightKind::QuadraticRadial { amplitude: 2.0, curvature: 1.0, center },
        WeightArg::Quartic => WeightKind::QuarticCross { eps },
        WeightArg::HighOrder => WeightKind::HighOrderCross,
    };
    WeightSpec::new(kind, cells)
}

fn domain_center(domain: DomainArg) -> (f64, f64) {
    match domain {
        DomainArg::Interval => (0.5, 0.0),
        DomainArg::Square => (0.5, 0.5),
        _ => (0.0, 0.0),
    }
}

fn scenario_by_name(
    name: &str,
    n: Option<usize>,
    seed: u64,
) -> Option<stefan_lab_core::Result<ScenarioOutput>> {
    let n2 = n.unwrap_or(128);
    Some(match name {
        "radial" => scenario::scenario_radial(RadialDomain::Ball, 0.5, n2),
        "radial_annulus" => scenario::scenario_radial(RadialDomain::Annulus { rho: 0.5 }, 0.5, n2),
        "non_universality" => scenario::scenario_non_universality(0.01, n2),
        "fourier" => scenario::scenario_fourier(7, 0.45, n2),
        "nucleation_1d" => scenario::scenario_nucleation_1d(n.unwrap_or(2000), 0.02),
        "fractal_freezing_t0" => scenario::scenario_fractal_freezing(0.0, n2),
        "fractal_freezing" => scenario::scenario_fractal_freezing(0.05, n2),
        "stability" => scenario::scenario_stability(n2),
        "mc_exit" => scenario::scenario_mc_exit(n.unwrap_or(100_000), 2e-6, seed),
        "mc_shell" => scenario::scenario_mc_shell(400, n.unwrap_or(20_000), seed),
        "mc_glue" => scenario::scenario_mc_glue(400, n.unwrap_or(20_000), seed),
        _ => return None,
    })
}

const SCENARIOS: &[&str] = &[
    "radial",
    "radial_annulus",
    "non_universality",
    "fourier",
    "nucleation_1d",
    "fractal_freezing_t0",
    "fractal_freezing",
    "stability",
    "mc_exit",
    "mc_shell",
    "mc_glue",
];

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("STEFAN_LAB_THREADS").ok().and_then(|s| s.parse().ok()));
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let mut config = match &cli.config {
        Some(path) => match Config::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    if let Err(e) = config.apply_overrides(&cli.overrides) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli, &config) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                stefan_lab_core::Error::Config(_) | stefan_lab_core::Error::InvalidDomain(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli, config: &Config) -> stefan_lab_core::Result<bool> {
    let seed = config.get_usize("seed", 1)? as u64;
    let snapshot: BTreeMap<String, String> = config.entries.clone().into_iter().collect();
    match &cli.command {
        Command::Solve { domain, n, mu, weight, rho, eps } => {
            let n = config.get_usize("n", *n)?;
            let spec = domain_spec(*domain, n, *rho);
            let d = build_domain(&spec)?;
            let mu_f = mu_field(*mu, &d).restricted_to(&d.cells);
            let w = weight_spec(*weight, *eps, domain_center(*domain), &d.cells)?;
            let opts = SolveOptions {
                gap_tol: config.get_f64("lp.gap_tol", 1e-6)?,
                dual_modes: config.get_usize("lp.dual_modes", 16)?,
                ..Default::default()
            };
            let (p, dual, rep) = solve_primal_dual(&mu_f, &w, &d.cells, &opts)?;
            let tz = extract_transition_zone(&p, &dual, &w, &d.cells);
            let run_id = cli.run_id.clone().unwrap_or_else(|| format!("solve-n{n}"));
            let mut rd = RunDir::new(&cli.out, &run_id, "solve".into(), snapshot, seed)?;
            stefan_lab_core::io::write_field_csv(&rd.dir.join("nu.csv"), &p.nu)?;
            rd.record("nu.csv");
            stefan_lab_core::io::write_field_pgm(&rd.dir.join("nu.pgm"), &p.nu)?;
            rd.record("nu.pgm");
            stefan_lab_core::io::write_field_pgm(&rd.dir.join("psi.pgm"), &dual.psi)?;
            rd.record("psi.pgm");
            stefan_lab_core::io::write_field_pgm(&rd.dir.join("v.pgm"), &p.v)?;
            rd.record("v.pgm");
            stefan_lab_core::io::write_set_pgm(&rd.dir.join("sigma.pgm"), &tz.sigma)?;
            rd.record("sigma.pgm");
            let summary = serde_json::json!({
                "status": format!("{:?}", rep.status),
                "iters": rep.iters,
                "objective_primal": p.objective,
                "objective_dual": dual.objective,
                "gap": rep.gap,
                "binarity_defect": p.binarity_defect,
                "ambiguity": tz.ambiguity,
                "sigma_measure": tz.sigma.measure(),
                "psi_l1": dual.l1_norm,
            });
            rd.write_json("report.json", &summary)?;
            rd.finish()?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(true)
        }
        Command::Obstacle { domain, n, mu, rho, t_max } => {
            let n = config.get_usize("n", *n)?;
            let spec = domain_spec(*domain, n, *rho);
            let d = build_domain(&spec)?;
            let mu_f = mu_field(*mu, &d).restricted_to(&d.cells);
            let w = weight_spec(WeightArg::Radial, 0.0, domain_center(*domain), &d.cells)?;
            let opts = SolveOptions { gap_tol: 1e-5, ..Default::default() };
            let (p, _dual, _rep) = solve_primal_dual(&mu_f, &w, &d.cells, &opts)?;
            let mut w0 = p.v.clone();
            for v in w0.values.iter_mut() {
                *v = v.max(0.0);
            }
            let oopts = ObstacleOptions::with_resolution(d.grid.h, *t_max);
            let traj = run_obstacle(&w0, &p.nu, &oopts)?;
            let fm = freezing_map(&traj, &d.cells);
            let run_id = cli.run_id.clone().unwrap_or_else(|| format!("obstacle-n{n}"));
            let mut rd = RunDir::new(&cli.out, &run_id, "obstacle".into(), snapshot, seed)?;
            // Freezing map as CSV with the never-sentinel encoded as -1.
            let mut s_field = ScalarField::zeros(d.grid);
            for (idx, &sv) in fm.s.iter().enumerate() {
                s_field.values[idx] = if sv.is_finite() { sv } else { -1.0 };
            }
            stefan_lab_core::io::write_field_csv(&rd.dir.join("freezing_time.csv"), &s_field)?;
            rd.record("freezing_time.csv");
            stefan_lab_core::io::write_field_pgm(&rd.dir.join("freezing_time.pgm"), &s_field)?;
            rd.record("freezing_time.pgm");
            let summary = serde_json::json!({
                "steps": traj.steps_taken,
                "final_time": traj.final_time,
                "occupation": traj.occupation,
                "occupation_identity_residual": traj.occupation_identity_residual(),
                "monotone_violation": traj.monotone_violation,
                "complementarity_violation": traj.complementarity_violation,
                "nucleation_events": nucleation_events(&traj).len(),
                "events": traj.events,
                "never_cells": fm.never.count(),
                "undecided_cells": fm.undecided.count(),
            });
            rd.write_json("report.json", &summary)?;
            rd.finish()?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(true)
        }
        Command::Radial { domain, d, mu, rho } => {
            let density = match (mu, domain) {
                (MuArg::Quartic, _) => nucleation_quartic(),
                (MuArg::Half, DomainArg::Annulus) => RadialDensity::constant(*d, *rho, 0.5),
                (MuArg::Half, _) => RadialDensity::constant(*d, 0.0, 0.5),
                (MuArg::ThreeQuarters, DomainArg::Annulus) => {
                    RadialDensity::constant(*d, *rho, 0.75)
                }
                (MuArg::ThreeQuarters, _) => RadialDensity::constant(*d, 0.0, 0.75),
                (MuArg::Full, _) => RadialDensity::constant(*d, 0.0, 1.0),
            };
            let shell = match domain {
                DomainArg::Interval => targets_1d(&density)?,
                DomainArg::Ball => targets_ball(&density)?,
                DomainArg::Annulus => targets_annulus(&density)?,
                DomainArg::Square => {
                    return Err(stefan_lab_core::Error::Config(
                        "no closed-form targets on the square".into(),
                    ))
                }
            };
            let (prof, cert) = stefan_lab_core::radial::shell_certificate(&density, &shell);
            let json = match shell.kind {
                ShellKind::Interval { a, b } => serde_json::json!({
                    "kind": "interval", "a": a, "b": b,
                    "residuals": shell.residuals, "degenerate": shell.degenerate,
                    "monotone_certificate": cert, "min_v": prof.min_v,
                }),
                ShellKind::Ball { r_tilde } => serde_json::json!({
                    "kind": "ball", "r_tilde": r_tilde,
                    "residuals": shell.residuals, "degenerate": shell.degenerate,
                    "monotone_certificate": cert, "min_v": prof.min_v,
                }),
                ShellKind::Annulus { r1, r2 } => serde_json::json!({
                    "kind": "annulus", "r1": r1, "r2": r2, "rho": shell.rho,
                    "residuals": shell.residuals, "degenerate": shell.degenerate,
                    "monotone_certificate": cert, "min_v": prof.min_v,
                }),
            };
            let run_id = cli.run_id.clone().unwrap_or_else(|| "radial".into());
            let mut rd = RunDir::new(&cli.out, &run_id, "radial".into(), snapshot, seed)?;
            rd.write_json("report.json", &json)?;
            rd.finish()?;
            println!("{}", serde_json::to_string_pretty(&json).unwrap());
            Ok(true)
        }
        Command::Mc { case, n_paths, seed: mc_seed, n, dt } => {
            let out = match case {
                McCase::Exit => scenario::scenario_mc_exit(*n_paths, *dt, *mc_seed)?,
                McCase::Shell => scenario::scenario_mc_shell(*n, *n_paths, *mc_seed)?,
                McCase::Glue => scenario::scenario_mc_glue(*n, *n_paths, *mc_seed)?,
            };
            let run_id = cli.run_id.clone().unwrap_or_else(|| format!("mc-{}", out.report.id));
            let mut rd = RunDir::new(&cli.out, &run_id, "mc".into(), snapshot, *mc_seed)?;
            let json = serde_json::to_value(&out.report).unwrap();
            rd.write_json("report.json", &json)?;
            rd.finish()?;
            print_report(&out);
            Ok(out.report.passed)
        }
        Command::Scenario { name, n } => {
            let Some(result) = scenario_by_name(name, *n, seed) else {
                return Err(stefan_lab_core::Error::Config(format!(
                    "unknown scenario {name:?}; see `stefan-lab list`"
                )));
            };
            let out = result?;
            let run_id = cli.run_id.clone().unwrap_or_else(|| format!("scenario-{name}"));
            let mut rd =
                RunDir::new(&cli.out, &run_id, format!("scenario {name}"), snapshot, seed)?;
            let json = serde_json::to_value(&out.report).unwrap();
            rd.write_json("report.json", &json)?;
            for (label, field) in &out.artifacts.fields {
                let csv = format!("{label}.csv");
                let pgm = format!("{label}.pgm");
                stefan_lab_core::io::write_field_csv(&rd.dir.join(&csv), field)?;
                rd.record(&csv);
                stefan_lab_core::io::write_field_pgm(&rd.dir.join(&pgm), field)?;
                rd.record(&pgm);
            }
            for (label, set) in &out.artifacts.sets {
                let pgm = format!("{label}.pgm");
                stefan_lab_core::io::write_set_pgm(&rd.dir.join(&pgm), set)?;
                rd.record(&pgm);
                let csv = format!("{label}.csv");
                stefan_lab_core::io::write_set_csv(&rd.dir.join(&csv), set)?;
                rd.record(&csv);
            }
            rd.finish()?;
            print_report(&out);
            Ok(out.report.passed)
        }
        Command::List => {
            for s in SCENARIOS {
                println!("{s}");
            }
            Ok(true)
        }
    }
}

fn print_report(out: &ScenarioOutput) {
    println!("scenario {}: {}", out.report.id, if out.report.passed { "PASS" } else { "FAIL" });
    for c in &out.report.criteria {
        println!(
            "  [{}] {}: {:.6e} {} {:.6e} ({})",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.measured,
            if c.upper { "<=" } else { ">=" },
            c.bound,
            c.oracle
        );
    }
    for note in &out.report.notes {
        println!("  note: {note}");
    }
}
