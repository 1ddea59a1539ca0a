//! `glms`: sparsify, audit and solve GLM objectives from the command line.
//!
//! Every command writes its JSON result to `--out` (stdout when absent) and,
//! with `--out`, a run manifest next to it. `glms rerun` replays a manifest.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AuditArgs, CertifyArgs, DualArgs, GenArgs, SolveArgs, SparsifyArgs, WeightsArgs};

#[derive(Debug, Parser)]
#[command(
    name = "glms",
    version,
    about = "Sparsifiers and refinement solvers for GLM objectives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a sparse reweighted model of the objective.
    Sparsify(SparsifyArgs),
    /// Measure a model's relative error against the full objective.
    Audit(AuditArgs),
    /// Minimize an l_p, Huber or gamma_p objective.
    Solve(SolveArgs),
    /// Minimum q-norm solution of A^T y = c.
    SolveDual(DualArgs),
    /// Compute per-scale weights.
    Weights(WeightsArgs),
    /// Check the structural loss properties on a grid.
    CertifyLoss(CertifyArgs),
    /// Write a synthetic instance.
    Gen(GenArgs),
    /// Re-run the command recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Write here instead of the recorded output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output directory for a replayed `gen`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sparsify(a) => commands::run_sparsify(a),
        Command::Audit(a) => commands::run_audit(a),
        Command::Solve(a) => commands::run_solve(a),
        Command::SolveDual(a) => commands::run_dual(a),
        Command::Weights(a) => commands::run_weights(a),
        Command::CertifyLoss(a) => commands::run_certify(a),
        Command::Gen(a) => commands::run_gen(a),
        Command::Rerun {
            manifest,
            out,
            out_dir,
        } => commands::rerun(&manifest, out, out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("glms: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
