use clap::{Args, Parser, Subcommand, ValueEnum};
use mlab_cli::config::{parse_seed_grid, ExperimentConfig, RhoPolicy, SolverConfig};
use mlab_cli::plot::plot_scene;
use mlab_cli::run::{appendix_checks, candidate_record, scene, shooting_record, write_solutions_csv};
use mlab_cli::verify::verify;
use mlab_cli::{exit_code, run, Failure};
use mlab_core::varcalc::{log_grid, probe_function, regularity_probe};
use mlab_core::{Precision, StructureParams};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mlab", version, about = "Numerical experiments on the Martinet-type length problem")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Std,
    Ext,
}

#[derive(Args, Clone)]
struct Common {
    /// Odd exponent m >= 5.
    #[arg(long, default_value_t = 5)]
    m: u32,
    /// Endpoint parameter; a comma-separated descending list for `sweep`.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    epsilon: Vec<f64>,
    /// Sublevel parameters (absolute values). Defaults to 1e-3..1e-6 of
    /// eps^(3m/2-1).
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    /// Shooting residual tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Seed grid NxMxK (theta0 x log|lambda| x T).
    #[arg(long, default_value = "6x4x2")]
    seed_grid: String,
    /// Output directory (or file, for `plot`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "std")]
    precision: PrecisionArg,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 7)]
    rng_seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Length of the candidate curve and its expansion.
    Candidate(Common),
    /// Solve the shooting problem from a seed grid.
    Shoot(Common),
    /// Full run over a list of eps (from flags or a TOML config).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write SVG scenes for every stage.
        #[arg(long)]
        plot: bool,
    },
    /// Sublevel minimizer checks.
    Appendix(Common),
    /// Hoelder-exponent probe of the candidate's arclength parametrization.
    Regularity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        k: Vec<u32>,
    },
    /// SVG of the candidate, the chord and nu for the first --rho.
    Plot(Common),
    /// Fast invariant suite.
    Verify(Common),
}

impl Common {
    fn precision(&self) -> Precision {
        match self.precision {
            PrecisionArg::Std => Precision::Standard,
            PrecisionArg::Ext => Precision::Extended,
        }
    }

    fn params(&self) -> Result<StructureParams, Failure> {
        let eps = *self.epsilon.first().ok_or_else(|| Failure::config("--epsilon is empty"))?;
        if self.epsilon.len() > 1 {
            return Err(Failure::config("this subcommand takes a single --epsilon"));
        }
        Ok(StructureParams::new(self.m, eps)
            .map_err(|e| Failure::config(e.to_string()))?
            .with_precision(self.precision()))
    }

    fn rho_policy(&self) -> RhoPolicy {
        if self.rho.is_empty() {
            RhoPolicy::Regime {
                k: 1.0,
                decades: vec![3.0, 4.0, 5.0, 6.0],
            }
        } else {
            RhoPolicy::Absolute {
                values: self.rho.clone(),
            }
        }
    }

    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let cfg = ExperimentConfig {
            m: self.m,
            epsilon_list: self.epsilon.clone(),
            rho_policy: self.rho_policy(),
            solver: SolverConfig {
                tol: self.tol,
                seed_grid: parse_seed_grid(&self.seed_grid)?,
                ..SolverConfig::default()
            },
            output_dir: self.out.clone().unwrap_or_else(|| PathBuf::from("mlab-out")),
            plot: false,
            rng_seed: self.rng_seed,
            precision: self.precision(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, file: &str) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::numerical(e.to_string()))?;
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        let path = dir.join(file);
        std::fs::write(&path, text + "\n").map_err(|e| Failure::io(&path, e))?;
    }
    Ok(())
}

fn dispatch(cmd: Cmd) -> Result<i32, Failure> {
    match cmd {
        Cmd::Candidate(c) => {
            let p = c.params()?;
            let rec = candidate_record(&p);
            let a = p.a_eps();
            emit(
                &serde_json::json!({
                    "m": p.m(),
                    "epsilon": p.epsilon(),
                    "A_eps": [a.x1, a.x2],
                    "candidate": rec,
                }),
                c.out.as_deref(),
                "candidate.json",
            )?;
            Ok(0)
        }
        Cmd::Shoot(c) => {
            let p = c.params()?;
            let cfg = c.config()?;
            let (rec, _, fails) = shooting_record(&p, &cfg)?;
            emit(&rec, c.out.as_deref(), "shoot.json")?;
            if let Some(dir) = &c.out {
                write_solutions_csv(&dir.join("solutions.csv"), &cfg.hash(), &rec.solutions)?;
            }
            report_failures(&fails);
            Ok(exit_code(&fails))
        }
        Cmd::Sweep { common, config, plot } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => common.config()?,
            };
            cfg.plot |= plot;
            let report = run(&cfg)?;
            for f in &report.failures {
                eprintln!("{} failure{}: {}", f.kind, f.epsilon.map(|e| format!(" at eps = {e}")).unwrap_or_default(), f.message);
            }
            for s in &report.stages {
                let sh = s.shooting.as_ref();
                eprintln!(
                    "eps = {}: L = {:.15}, {} converged of {} seeds",
                    s.epsilon,
                    s.candidate.length.l,
                    sh.map_or(0, |x| x.converged),
                    sh.map_or(0, |x| x.seeds)
                );
            }
            eprintln!("report written to {}", cfg.output_dir.join("report.json").display());
            Ok(report.exit_code())
        }
        Cmd::Appendix(c) => {
            let p = c.params()?;
            let rhos = c.rho_policy().rhos(&p);
            let (rec, fails) = appendix_checks(&p, &rhos, 1.0, c.rng_seed, 200);
            emit(&rec, c.out.as_deref(), "appendix.json")?;
            report_failures(&fails);
            Ok(exit_code(&fails))
        }
        Cmd::Regularity { common, k } => {
            let p = common.params()?;
            let grid = log_grid(1e-6, 1e-3, 7);
            let mut rows = Vec::new();
            for &k in &k {
                let r = regularity_probe(&p, k, &grid)?;
                let calib = probe_function(|t| t.abs().powf(p.mbar()), k, &grid)?;
                rows.push(serde_json::json!({
                    "k": k,
                    "fitted_alpha": r.fitted_alpha,
                    "fitted_alpha_one_sided": r.fitted_alpha_one_sided,
                    "calibration_expected": p.mbar() - f64::from(k),
                    "calibration_fitted": calib.fitted_alpha,
                    "rows": r.exponents,
                }));
            }
            emit(
                &serde_json::json!({ "m": p.m(), "epsilon": p.epsilon(), "scale_grid": grid, "probes": rows }),
                common.out.as_deref(),
                "regularity.json",
            )?;
            Ok(0)
        }
        Cmd::Plot(c) => {
            let p = c.params()?;
            let sc = scene(&p, c.rho.first().copied(), &[])?;
            let path = c.out.clone().unwrap_or_else(|| PathBuf::from("scene.svg"));
            plot_scene(&sc, &path)?;
            eprintln!("wrote {}", path.display());
            Ok(0)
        }
        Cmd::Verify(c) => {
            let p = c.params()?;
            let r = verify(&p, c.rng_seed)?;
            emit(&r, c.out.as_deref(), "verify.json")?;
            for ch in &r.checks {
                eprintln!("{:<18} {} {}", ch.name, if ch.passed { "ok  " } else { "FAIL" }, ch.detail);
            }
            Ok(if r.passed() { 0 } else { 1 })
        }
    }
}

fn report_failures(fails: &[Failure]) {
    for f in fails {
        eprintln!("{:?}: {}", f.kind, f.message);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match &cli.cmd {
        Cmd::Candidate(c) | Cmd::Shoot(c) | Cmd::Appendix(c) | Cmd::Plot(c) | Cmd::Verify(c) => c.jobs,
        Cmd::Sweep { common, .. } | Cmd::Regularity { common, .. } => common.jobs,
    };
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.kind.exit_code() as u8)
        }
    }
}
