use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use logkirch::experiment::{self, commands, write_artifacts, Artifact, ExperimentConfig};
use logkirch::Error;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "logkirch", version, about = "Potential-well laboratory for the pseudo-parabolic Kirchhoff equation with logarithmic source")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (key = value text, or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides grid.n.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,

    /// Do not print the report to stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Estimate the embedding constants on the grid.
    Constants,
    /// Well depth d and the curve d(δ).
    Well,
    /// Ground state of the stationary problem.
    GroundState,
    /// Classify the configured initial data.
    Classify,
    /// Classify, integrate and check bounds; writes trace.csv and summary.json.
    Simulate,
    /// Parameter sweep; writes phase_map.csv and sweep.json.
    Sweep,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config {
            line: None,
            msg: format!("cannot read {}: {e}", p.display()),
        })?,
        None => String::new(),
    };
    // command-line overrides travel through the same parser
    let mut extra = Vec::new();
    if let Some(s) = cli.seed {
        extra.push(format!("seed = {s}"));
    }
    if let Some(n) = cli.grid_n {
        extra.push(format!("grid.n = {n}"));
    }
    if let Some(o) = &cli.out {
        extra.push(format!("output.dir = {}", o.display()));
    }
    if extra.is_empty() {
        return experiment::parse(&text);
    }
    let mut cfg = experiment::parse(&text)?;
    text = cfg.to_text();
    for e in extra {
        text.push_str(&e);
        text.push('\n');
    }
    cfg = experiment::config::parse_text(&text)?;
    Ok(cfg)
}

fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<(serde_json::Value, Vec<Artifact>), Error> {
    macro_rules! pack {
        ($r:expr) => {{
            let (rep, art) = $r?;
            Ok((serde_json::to_value(&rep)?, art))
        }};
    }
    match cmd {
        Command::Constants => pack!(commands::cmd_constants(cfg)),
        Command::Well => pack!(commands::cmd_well(cfg)),
        Command::GroundState => pack!(commands::cmd_ground_state(cfg)),
        Command::Classify => pack!(commands::cmd_classify(cfg)),
        Command::Simulate => pack!(commands::cmd_simulate(cfg)),
        Command::Sweep => pack!(commands::cmd_sweep(cfg)),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parameter(_) => "parameter",
        Error::Dimension { .. } => "dimension",
        Error::Domain(_) => "domain",
        Error::NumericalRange { .. } => "numericalRange",
        Error::Estimation { .. } => "estimation",
        Error::Optimization(_) => "optimization",
        Error::Newton(_) => "newton",
        Error::Config { .. } => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let result = execute(cli.command, &cfg).and_then(|(report, art)| {
        write_artifacts(&cfg.out_dir, &art)?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            if !cli.quiet {
                println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let diag = json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(1)
        }
    }
}
