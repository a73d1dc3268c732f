//! `persistence-lab`: run, validate and inspect persistence experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use persistence_core::model::{build_model, FamilyName};
use persistence_core::runner::{builtin, run_experiment, ExperimentConfig, RunStatus};
use persistence_core::theory::family_exponents;
use serde_json::{json, Map, Value};

/// Output root when neither the flag, the environment nor the config names one.
const DEFAULT_OUT: &str = "runs";

#[derive(Parser)]
#[command(name = "persistence-lab", version, about = "Persistence exponents of additive functionals by simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment (a JSON file or a builtin name such as `e1`).
    Run {
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Output root; the run writes into `<out>/<name>/`.
        #[arg(long, env = "PERSISTENCE_LAB_OUT")]
        out: Option<PathBuf>,
    },
    /// Closed-form exponents for a family, e.g. `theory skew-bessel delta=1 eta=0 gamma=1 c_plus=1 c_minus=8`.
    Theory {
        family: String,
        /// `key=value` pairs; values are parsed as JSON when possible.
        params: Vec<String>,
    },
    /// Parse and check a config without sampling.
    Validate { config: String },
}

fn load(config: &str) -> Result<ExperimentConfig> {
    let path = Path::new(config);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {config}"))?;
        return Ok(ExperimentConfig::from_json(&text).with_context(|| format!("parsing {config}"))?);
    }
    Ok(builtin(config)?)
}

fn parse_params(params: &[String]) -> Result<Value> {
    let mut map = Map::new();
    for p in params {
        let Some((k, v)) = p.split_once('=') else { bail!("parameter `{p}` is not key=value") };
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        map.insert(k.to_string(), value);
    }
    Ok(Value::Object(map))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, seed, workers, replicas, out } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(r) = replicas {
                cfg.replicas = r;
            }
            let root = out.or_else(|| cfg.outputs.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let report = run_experiment(&cfg, &root)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            eprintln!("wrote {}", report.out_dir.display());
            Ok(match report.status {
                RunStatus::Ok => ExitCode::SUCCESS,
                RunStatus::Failed => ExitCode::from(2),
            })
        }
        Command::Theory { family, params } => {
            let name: FamilyName = family.parse()?;
            let params = parse_params(&params)?;
            let model = build_model(name, &params)?;
            let bundle = family_exponents(&model.family)?;
            let out = json!({ "family": name, "params": params, "exponents": bundle });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let chain = cfg.validate()?;
            let theory = family_exponents(&cfg.model.family).ok();
            let out = json!({ "valid": true, "name": cfg.name, "sites": chain.len(), "theory": theory });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
