use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use alegks::config::RunConfig;

#[derive(Parser)]
#[command(name = "alegks", version, about = "Moving-mesh gas-kinetic shallow water solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case from a key = value config file.
    Run {
        config: PathBuf,
        /// Overrides as `--key value` pairs, e.g. `--cfl 0.4 --end_time 0.1`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(k) = it.next() {
        let key = k.strip_prefix("--").ok_or_else(|| format!("expected --key, got `{k}`"))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it.next().ok_or_else(|| format!("missing value for --{key}"))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

fn run(config: PathBuf, overrides: Vec<String>) -> Result<(), Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(&config)?;
    let mut cfg = RunConfig::parse(&text)?;
    for (k, v) in parse_overrides(&overrides)? {
        cfg.set(&k.replace('-', "_"), &v)?;
    }
    cfg.validate()?;
    let summary = alegks::run::run(&cfg)?;
    println!("{} steps, t = {:.6}", summary.steps, summary.time);
    for p in summary.snapshots.iter().chain(&summary.error_history).chain([&summary.centerline]) {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => run(config, overrides),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
