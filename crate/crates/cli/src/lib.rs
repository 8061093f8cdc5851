//! Command-line runner: configuration, dataset manifests, parallel runs and
//! result files.
//!
//! Exit codes: 0 when everything succeeded, 1 when some videos failed, 2 for
//! configuration errors (nothing is processed in that case).

pub mod config;
pub mod manifest;
pub mod output;
pub mod pipeline;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use vad_core::agent::ProfileId;
use vad_core::backend::BackendKind;

use config::EngineConfig;
use manifest::Manifest;
use pipeline::{Engine, RunError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIDEO_FAILURES: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vad", version, about = "Training-free video anomaly detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every video of a manifest and write per-frame results.
    Run(RunArgs),
    /// Check a configuration file and print its effective parameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Scripted,
    Http,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Scripted => BackendKind::Scripted,
            BackendArg::Http => BackendKind::Http,
        }
    }
}

#[derive(Clone, Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to `output_dir` from the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// ucf, xd, ubnormal or complexvad.
    #[arg(long)]
    pub profile: Option<ProfileId>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Run(args) => run_command(args, out, err),
        Command::Validate { config } => validate_command(config, out),
    }
}

pub fn run_command(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut cfg = match EngineConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(p) = args.profile {
        cfg.profile = p;
    }
    if let Some(b) = args.backend {
        cfg.set_backend_kind(b.into());
    }
    let Some(out_dir) = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(|p| cfg.resolve(p)))
    else {
        let _ = writeln!(
            err,
            "error: no output directory (pass --out or set output_dir)"
        );
        return EXIT_CONFIG;
    };
    let manifest = match Manifest::load(&args.manifest) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: manifest {e}");
            return EXIT_CONFIG;
        }
    };
    let engine = match Engine::new(cfg) {
        Ok(e) => e,
        Err(RunError::Invalid(violations)) => {
            for v in violations {
                let _ = writeln!(err, "error: {v}");
            }
            return EXIT_CONFIG;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let summary = match engine.run(&manifest, &out_dir) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let _ = writeln!(
        out,
        "{} of {} videos completed; results in {}",
        summary.videos.len(),
        manifest.videos.len(),
        out_dir.display()
    );
    if let Some(m) = summary.metrics.as_ref().and_then(|m| m.micro) {
        let _ = writeln!(out, "micro AUC {:.4}  AP {:.4}", m.auc, m.ap);
    }
    for (id, e) in &summary.failures {
        let _ = writeln!(err, "failed: {id}: {e}");
    }
    summary.exit_code()
}

/// Prints the effective parameters and any violations. Returns 0 for a valid
/// configuration and 2 otherwise.
pub fn validate_command(path: &std::path::Path, out: &mut dyn Write) -> i32 {
    let cfg = match EngineConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(out, "invalid: 1 violation\n  {e}");
            return EXIT_CONFIG;
        }
    };
    let table = cfg.effective_table();
    let width = table.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &table {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    let violations = cfg.violations();
    if violations.is_empty() {
        let _ = writeln!(out, "valid: 0 violations");
        EXIT_OK
    } else {
        let noun = if violations.len() == 1 {
            "violation"
        } else {
            "violations"
        };
        let _ = writeln!(out, "invalid: {} {noun}", violations.len());
        for v in violations {
            let _ = writeln!(out, "  {v}");
        }
        EXIT_CONFIG
    }
}
