use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rte::config::{ExperimentConfig, Purpose, SchemeSpec};
use rte::experiments::{self, Experiment, PerturbMode};
use rte::formats;
use rte::{HarnessError, Result};
use rte_core::topology::build_path_sets;

#[derive(Parser)]
#[command(name = "rte", version, about = "Burst-aware traffic engineering experiments")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate candidate paths for every SD pair.
    Paths,
    /// Write the configured (synthesized) traffic trace as CSV.
    Synth,
    /// Train every neural scheme without a model file.
    Train,
    /// Normalized MLU of every scheme over the test range.
    Eval,
    /// Random link failure trials.
    Failures {
        #[arg(long, default_value_t = 1)]
        failed: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Re-evaluate under Gaussian fluctuation of the test traffic.
    Perturb {
        #[arg(long, value_enum, default_value_t = Mode::Aligned)]
        mode: Mode,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.5, 1.0, 2.0])]
        alphas: Vec<f64>,
    },
    /// Per-SD variance against mean maximum path sensitivity.
    Interpret,
    /// Temporal similarity and per-pair variance of the trace.
    Characterize {
        #[arg(long, default_value_t = 12)]
        window: usize,
    },
    /// Precompute and per-decision wall-clock time.
    Timing {
        #[arg(long, default_value_t = 50)]
        snapshots: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Aligned,
    WorstCase,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_deref().ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seeds.base = seed;
    }
    Ok(cfg)
}

/// Points neural schemes without a model file at one saved by `train`, if present.
fn use_saved_models(cfg: &mut ExperimentConfig) {
    let out = cfg.output.clone();
    for s in &mut cfg.schemes {
        let name = s.name();
        if let SchemeSpec::Neural { model: model @ None, .. } = s {
            let saved = out.join(format!("model_{name}.json"));
            if saved.exists() {
                log::info!("{name}: using {}", saved.display());
                *model = Some(saved);
            }
        }
    }
}

fn schemes(exp: &Experiment, out: &Path) -> Result<Vec<rte::schemes::Scheme>> {
    let (schemes, trained) = experiments::build_schemes(exp)?;
    for t in &trained {
        experiments::write_trained(out, t)?;
    }
    Ok(schemes)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    let out = cfg.output.clone();
    match cli.command {
        Command::Paths => {
            let g = formats::read_topology(&cfg.topology)?;
            let ps = build_path_sets(&g, cfg.k)?;
            formats::write_path_sets(&out.join("paths.json"), &ps, cfg.k)?;
        }
        Command::Synth => {
            let g = formats::read_topology(&cfg.topology)?;
            let (trace, _) = experiments::load_traffic(&cfg, &g)?;
            formats::write_trace(&out.join("trace.csv"), &trace)?;
        }
        Command::Train => {
            let exp = Experiment::prepare(cfg)?;
            let mut any = false;
            for s in &exp.cfg.schemes {
                if let SchemeSpec::Neural { gamma, model: None, .. } = s {
                    let t = experiments::train_model(&exp, &s.name(), *gamma)?;
                    experiments::write_trained(&out, &t)?;
                    any = true;
                }
            }
            if !any {
                log::warn!("no neural scheme to train");
            }
        }
        Command::Eval => {
            use_saved_models(&mut cfg);
            let exp = Experiment::prepare(cfg)?;
            let schemes = schemes(&exp, &out)?;
            experiments::run_eval(&exp, &schemes, &exp.trace)?.write(&out, "eval")?;
        }
        Command::Failures { failed, trials } => {
            use_saved_models(&mut cfg);
            let seed = cfg.seeds.for_purpose(Purpose::Failures);
            let exp = Experiment::prepare(cfg)?;
            let schemes = schemes(&exp, &out)?;
            experiments::run_failures(&exp, &schemes, failed, trials, seed)?.write(&out)?;
        }
        Command::Perturb { mode, alphas } => {
            use_saved_models(&mut cfg);
            let seed = cfg.seeds.for_purpose(Purpose::Perturb);
            let exp = Experiment::prepare(cfg)?;
            let schemes = schemes(&exp, &out)?;
            let mode = match mode {
                Mode::Aligned => PerturbMode::Aligned,
                Mode::WorstCase => PerturbMode::WorstCase,
            };
            experiments::run_perturbation(&exp, &schemes, &alphas, mode, seed)?.write(&out)?;
        }
        Command::Interpret => {
            use_saved_models(&mut cfg);
            let exp = Experiment::prepare(cfg)?;
            let schemes = schemes(&exp, &out)?;
            experiments::run_interpret(&exp, &schemes)?.write(&out)?;
        }
        Command::Characterize { window } => {
            let g = formats::read_topology(&cfg.topology)?;
            let (trace, _) = experiments::load_traffic(&cfg, &g)?;
            experiments::run_characterize(&trace, window)?.write(&out)?;
        }
        Command::Timing { snapshots } => {
            let exp = Experiment::prepare(cfg)?;
            let (schemes, trained) = experiments::build_schemes(&exp)?;
            experiments::run_timing(&exp, &schemes, &trained, snapshots)?.write(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
