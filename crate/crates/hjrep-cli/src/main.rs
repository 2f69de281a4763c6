//! Batch experiment front-end.
//!
//! ```text
//! hjrep <subcommand> --config <path> [--out <dir>] [--seed <u64>]
//! ```
//!
//! Subcommands: `conjugate-table`, `represent`, `value`, `stability`,
//! `invariance`. Exit code 0 when every enabled audit passes, 1 on audit
//! failure (failing records are dumped to stderr), 2 on usage or config
//! errors. Artifacts (CSV tables, `audits.json`, `run_meta.json` and the
//! config echo) land in the output directory and are byte-identical across
//! reruns with the same config and seed.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use output::OutputDir;

#[derive(Parser)]
#[command(name = "hjrep", version, about = "Epigraphical Hamiltonian representations: audits and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid of numeric conjugate values with closed-form deltas.
    ConjugateTable(RunArgs),
    /// Parameterization sweep with the Lipschitz/growth/fixed-point audits.
    Represent(RunArgs),
    /// Three-solver value table with equality/regularity/envelope audits.
    Value(RunArgs),
    /// Representation and value-function stability gaps.
    Stability(RunArgs),
    /// Tube invariance and tangency audit.
    Invariance(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to the TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `run.out_dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override (defaults to `run.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::ConjugateTable(a) => ("conjugate-table", a),
        Command::Represent(a) => ("represent", a),
        Command::Value(a) => ("value", a),
        Command::Stability(a) => ("stability", a),
        Command::Invariance(a) => ("invariance", a),
    };
    match run(name, args) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(name: &str, args: &RunArgs) -> Result<bool, String> {
    let (cfg, raw) = Config::load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.run.seed);
    let out_root = args
        .out
        .clone()
        .or_else(|| cfg.run.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(name));
    let out = OutputDir::create(&out_root, &raw, seed).map_err(|e| e.to_string())?;
    out.write_meta(name).map_err(|e| e.to_string())?;

    let result = match name {
        "conjugate-table" => commands::conjugate_table(&cfg, &out, seed)?,
        "represent" => commands::represent(&cfg, &out, seed)?,
        "value" => commands::value(&cfg, &out, seed)?,
        "stability" => commands::stability(&cfg, &out, seed)?,
        "invariance" => commands::invariance(&cfg, &out, seed)?,
        other => return Err(format!("unknown subcommand {other}")),
    };
    out.write_audits(&result.records).map_err(|e| e.to_string())?;

    if !result.all_pass() {
        for rec in result.records.iter().filter(|r| !r.pass) {
            eprintln!(
                "AUDIT FAIL {}: observed {} vs bound {} ({} samples, seed {})",
                rec.name, rec.observed, rec.bound, rec.samples, rec.seed
            );
        }
        return Ok(false);
    }
    Ok(true)
}
