//! Command-line front end for [`run_scenario`].

use std::path::PathBuf;

use clap::Parser;

use crate::config::{parse_config, resolve, Diagnostic, Diagnostics, Plan, ScenarioConfig, ScenarioKind};
use crate::scenario::run_scenario;

#[derive(Debug, Clone, Parser)]
#[command(name = "nonbloch", version, about = "Run a non-Hermitian spectral scenario and write its data artifacts")]
pub struct Cli {
    /// TOML scenario config.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Scenario tag; overrides the one in the config.
    #[arg(long, value_name = "NAME")]
    pub scenario: Option<String>,

    /// Output directory (default: the config's `out_dir`, else `out/<scenario>`).
    #[arg(long, value_name = "PATH")]
    pub out_dir: Option<PathBuf>,

    /// Worker threads (default: all available cores).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,

    /// Seed for randomized inputs such as boundary disorder.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Check the config and exit without computing anything.
    #[arg(long)]
    pub validate_only: bool,
}

fn diagnostic(field: &str, message: String) -> Diagnostics {
    Diagnostics(vec![Diagnostic { line: None, field: field.to_owned(), message }])
}

/// Resolves the flags and config file into a plan.
pub fn plan_from_cli(cli: &Cli) -> Result<Plan, Diagnostics> {
    let scenario = match &cli.scenario {
        Some(name) => Some(ScenarioKind::parse(name).ok_or_else(|| {
            let known: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
            diagnostic("--scenario", format!("unknown scenario `{name}` (expected one of {})", known.join(", ")))
        })?),
        None => None,
    };
    let (mut cfg, src) = match &cli.config {
        Some(path) => {
            let src = std::fs::read_to_string(path)
                .map_err(|e| diagnostic("--config", format!("{}: {e}", path.display())))?;
            (parse_config(&src)?, src)
        }
        None => {
            let kind = scenario.ok_or_else(|| diagnostic("--config", "give --config or --scenario".into()))?;
            (ScenarioConfig::for_scenario(kind), String::new())
        }
    };
    if let Some(kind) = scenario {
        cfg.scenario = kind;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    resolve(&cfg, &src)
}

/// Runs the CLI and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let plan = match plan_from_cli(cli) {
        Ok(p) => p,
        Err(d) => {
            eprintln!("invalid configuration:\n{d}");
            return 2;
        }
    };
    if cli.validate_only {
        println!("ok: {} ({}D model)", plan.scenario, plan.dim());
        return 0;
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| plan.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(plan.scenario.as_str()));
    match run_scenario(&plan, &out_dir) {
        Ok(m) => {
            println!("{}: {} files in {}", m.scenario, m.outputs.len() + 1, out_dir.display());
            println!("{}", serde_json::to_string_pretty(&m.summary).unwrap_or_default());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
