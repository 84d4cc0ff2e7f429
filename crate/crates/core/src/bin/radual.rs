use clap::{Parser, Subcommand};
use radual::model::{build_hydro_instance, instance_to_json, parse_hydro_config_file, parse_instance_file};
use radual::runner::{run_command, run_lipschitz_study, timing_report, Mode, RunConfig, RunError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "radual", version, about = "Primal and dual SDDP bounds for risk-averse multistage linear programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file in one of the run modes.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// primal, dual, both, extensive, lipschitz-study or philpott
        #[arg(long, default_value = "both")]
        mode: Mode,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// Relative gap at which mode `both` stops.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dual sampling smoothing; defaults to 0.01 / J per stage.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = radual::dual::DEFAULT_GAMMA_ROUND_TOL)]
        gamma_tol: f64,
        /// Lipschitz factors for mode lipschitz-study.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0])]
        factors: Vec<f64>,
        /// Iterations between inner-approximation bounds in mode philpott.
        #[arg(long, default_value_t = 50)]
        philpott_every: usize,
        /// Leave the time columns empty so the CSV is reproducible byte for byte.
        #[arg(long)]
        no_timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an instance file from a hydrothermal configuration.
    HydroGen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaps under scaled Lipschitz constants at checkpoints 1, 10, 20, 50, 100, ...
    Lipstudy {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0])]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run the arms on separate threads.
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-iteration primal and dual times for several inflow branch counts.
    Timing {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 20])]
        branches: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

fn run(cli: Cli) -> Result<u8, RunError> {
    match cli.command {
        Command::Solve {
            instance,
            mode,
            iters,
            tol,
            seed,
            epsilon,
            gamma_tol,
            factors,
            philpott_every,
            no_timings,
            out,
        } => {
            let inst = parse_instance_file(&instance)?;
            let config = RunConfig {
                mode,
                iters,
                tol,
                seed,
                epsilon,
                gamma_round_tol: gamma_tol,
                factors,
                philpott_every,
                timings: !no_timings,
                out_dir: out.clone(),
                ..RunConfig::default()
            }
            .with_env_overrides()?;
            let outcome = run_command(&config, &inst)?;
            if let Some(v) = outcome.extensive_value {
                println!("{v}");
            } else {
                let last = outcome.records.last();
                println!(
                    "{}: lb {} ub {} gap {} after {} iterations",
                    match outcome.exit_code() {
                        0 => "converged",
                        _ => "iteration cap reached",
                    },
                    fmt_opt(outcome.lower_bound),
                    fmt_opt(outcome.upper_bound),
                    fmt_opt(last.and_then(|r| r.gap)),
                    last.map_or(0, |r| r.iter)
                );
            }
            if let Some(study) = &outcome.study {
                print!("{}", study.to_csv());
            }
            if let Some(dir) = out {
                outcome.write_artifacts(&dir)?;
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::HydroGen { config, out } => {
            let cfg = parse_hydro_config_file(&config)?;
            let inst = build_hydro_instance(&cfg)?;
            write(&out, &instance_to_json(&inst))?;
            println!("wrote {} (T = {}, branching {:?})", out.display(), inst.horizon, inst.branching());
            Ok(0)
        }
        Command::Lipstudy {
            instance,
            factors,
            iters,
            seed,
            parallel,
            out,
        } => {
            let inst = parse_instance_file(&instance)?;
            let config = RunConfig {
                mode: Mode::LipschitzStudy,
                iters,
                seed,
                factors,
                parallel,
                ..RunConfig::default()
            }
            .with_env_overrides()?;
            let study = run_lipschitz_study(&inst, &config)?;
            let csv = study.to_csv();
            print!("{csv}");
            if let Some(dir) = out {
                write(&dir.join("lipschitz_study.csv"), &csv)?;
            }
            Ok(0)
        }
        Command::Timing {
            config,
            branches,
            iters,
            seed,
            parallel,
            out,
        } => {
            let cfg = parse_hydro_config_file(&config)?;
            let run = RunConfig {
                iters,
                seed,
                parallel,
                ..RunConfig::default()
            }
            .with_env_overrides()?;
            let report = timing_report(&cfg, &branches, &run)?;
            let csv = report.to_csv();
            print!("{csv}");
            if !report.ratios_exceed_one() {
                log::warn!("dual iterations were not slower than primal ones for every branch count");
            }
            if report.ratio_nondecreasing() == Some(false) {
                log::warn!("dual/primal time ratio is not nondecreasing in the branch count");
            }
            if let Some(dir) = out {
                write(&dir.join("timing.csv"), &csv)?;
            }
            Ok(0)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.10}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
