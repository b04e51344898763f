use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moweight_cli::compare::{compare_dirs, render, write_report};
use moweight_cli::config::{resolve_out, HarnessConfig};
use moweight_cli::export::{export, ExportTarget};
use moweight_cli::oracle;
use moweight_cli::run::{load_run, run_all, write_json, RunOptions};
use moweight_cli::Failure;
use moweight_core::env::{DstConfig, EnvConfig, DEFAULT_ENUMERATION_CAP};

#[derive(Parser)]
#[command(name = "moweight", version, about = "Multi-objective reward weighting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Replace a config value, e.g. `trainer.algorithm=RLOO`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Base seed; same as `--override seed=N`.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<HarnessConfig, Failure> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        HarnessConfig::load(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured arm for every seed.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output root; defaults to `$MOWEIGHT_OUT` (or `runs`) joined with the config's `out`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Concurrent (arm, seed) runs; 1 runs everything sequentially.
        #[arg(long, value_name = "N")]
        parallel: Option<usize>,
        /// Restrict to these arms. Repeatable.
        #[arg(long = "arm", value_name = "NAME")]
        arms: Vec<String>,
    },
    /// Compare the fronts of completed runs (directories are searched recursively).
    Compare {
        #[arg(required = true, value_name = "RUN_DIR")]
        dirs: Vec<PathBuf>,
        /// Report directory; defaults to `<output root>/compare`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Brute-force verification checks.
    Oracle {
        #[command(subcommand)]
        check: OracleCommand,
    },
    /// Plot-ready CSV files from a completed run.
    Export {
        #[arg(value_name = "RUN_DIR")]
        run: PathBuf,
        /// weights | meta-reward | fronts | kl
        #[arg(value_name = "WHAT")]
        what: ExportTarget,
        /// Second run for `kl`.
        #[arg(long, value_name = "DIR")]
        against: Option<PathBuf>,
        /// Destination; defaults to `<RUN_DIR>/export`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact hypervolume vs inclusion-exclusion and Monte Carlo.
    HvCheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        max_points: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Analytic gradient vs finite differences and sampled REINFORCE.
    GradCheck {
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Sampled rollouts for the estimator check; 0 skips it.
        #[arg(long, default_value_t = 100_000)]
        rollouts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Closed-form weight replay, on a run or on synthetic traces.
    LemmaCheck {
        /// Completed gradient-based run.
        #[arg(value_name = "RUN_DIR", required_unless_present = "synthetic")]
        run: Option<PathBuf>,
        /// Number of random synthetic traces instead of a run.
        #[arg(long, value_name = "N", conflicts_with = "run")]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enumerate an environment's true front (default deep-sea treasure).
    FrontEnum {
        /// Take the environment from this config.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE", requires = "config")]
        overrides: Vec<String>,
        /// Also write the front as `front.json` in this directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
}

fn verdict(name: &str, passed: bool, detail: String) -> Result<(), Failure> {
    println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    if passed {
        Ok(())
    } else {
        Err(Failure::Oracle(format!("{name}: {detail}")))
    }
}

fn run_oracle(check: OracleCommand) -> Result<(), Failure> {
    match check {
        OracleCommand::HvCheck { instances, max_points, samples, seed } => {
            let r = oracle::hv_check(instances, &[2, 3, 4], max_points, samples, seed)?;
            verdict(
                "hv-check",
                r.passed,
                format!(
                    "{} sets, max exact rel err {:.3e} (tol {:.0e}), MC max {:.2} sigma, {} beyond {}",
                    r.instances,
                    r.max_relative_error,
                    oracle::HV_EXACT_TOL,
                    r.max_sigmas,
                    r.mc_violations,
                    oracle::HV_MC_SIGMAS
                ),
            )
        }
        OracleCommand::GradCheck { trials, rollouts, seed } => {
            let r = oracle::grad_check(trials, rollouts, seed)?;
            verdict(
                "grad-check",
                r.passed,
                format!(
                    "{} envs, max finite-difference rel err {:.3e} (tol {:.0e}), sampled mean max {:.2} sigma over {} rollouts",
                    r.trials,
                    r.max_fd_relative_error,
                    oracle::GRAD_FD_TOL,
                    r.max_sigmas,
                    r.rollouts
                ),
            )
        }
        OracleCommand::LemmaCheck { run, synthetic, seed } => {
            let r = match (run, synthetic) {
                (_, Some(n)) => oracle::lemma_check_synthetic(n, seed)?,
                (Some(dir), None) => oracle::lemma_check_run(&load_run(&dir)?)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            verdict("lemma-check", r.passed, format!("max error {:.3e} (tol {:.0e})", r.max_error, r.tolerance))
        }
        OracleCommand::FrontEnum { config, overrides, out, cap } => {
            let env = match config {
                Some(path) => HarnessConfig::load(&path, &overrides)?.env,
                None => EnvConfig::DeepSeaTreasure(DstConfig::default()),
            };
            let (report, buffer) = oracle::front_enum(&env, cap)?;
            println!("objectives {}", report.objectives.join(", "));
            for p in &report.points {
                println!("  {p:?}");
            }
            println!("hypervolume {}", report.hypervolume);
            match (&report.nonconvex_point, report.nonconvex_gap) {
                (Some(p), Some(gap)) => println!("non-convex: {p:?} lies {gap:.6} below the upper convex hull"),
                _ => println!("non-convex: no certificate (front is convex or has more than two objectives)"),
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                write_json(&dir.join("front.json"), &buffer)?;
                write_json(&dir.join("front_enum.json"), &report)?;
            }
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, parallel, arms } => {
            let cfg = config.load()?;
            let out = resolve_out(out.as_deref(), cfg.out.as_deref());
            let parallel =
                parallel.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            log::info!("writing runs under {}", out.display());
            let summaries = run_all(&cfg, &RunOptions { out: out.clone(), parallel, arms })?;
            println!("{:<24} {:>6} {:>12} {:>10}", "arm", "seed", "hypervolume", "stf");
            for s in &summaries {
                println!("{:<24} {:>6} {:>12.6} {:>10.2}", s.arm, s.seed, s.hypervolume, s.steps_to_front);
            }
            println!("runs written to {}", out.display());
            Ok(())
        }
        Command::Compare { dirs, out } => {
            let report = compare_dirs(&dirs)?;
            let out = out.unwrap_or_else(|| resolve_out(None, None).join("compare"));
            write_report(&report, &out)?;
            print!("{}", render(&report));
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::Oracle { check } => run_oracle(check),
        Command::Export { run, what, against, out } => {
            let loaded = load_run(&run)?;
            let other = against.as_deref().map(load_run).transpose()?;
            let out = out.unwrap_or_else(|| run.join("export"));
            for p in export(what, &loaded, other.as_ref(), &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { moweight_cli::EXIT_CONFIG } else { moweight_cli::EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("moweight: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
