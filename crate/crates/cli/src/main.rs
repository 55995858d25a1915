use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use kfrs_cli::config::extract_overrides;
use kfrs_cli::{cmd_compare, cmd_evaluate, cmd_oracle, cmd_select, cmd_synth, RunConfig};

/// Feature selection with a kernelized fuzzy-rough criterion and a memetic optimizer.
///
/// Any configuration key can be overridden with a dotted flag such as
/// `--ma.np=40` or `--kernel.delta 2`; top-level keys use `--set key=value`.
/// Precedence: flags > config file > defaults.
#[derive(Parser)]
#[command(name = "kfrs-select", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Input CSV with a `label` column.
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threads used for fitness evaluation.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Select a subset with the memetic algorithm and evaluate it on the test split.
    Select(Common),
    /// Run the memetic algorithm and baselines over several seeds.
    Compare(Common),
    /// Score every subset exhaustively (small feature counts only).
    Oracle(Common),
    /// Write a synthetic clustered dataset (see the `synth.*` keys).
    Synth {
        #[command(flatten)]
        common: Common,
        /// Destination CSV; defaults to `<out>/synth.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate a given subset with k-NN.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated feature names or hex bits (bit i = feature i).
        #[arg(long)]
        mask: String,
    },
}

/// Prints to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

fn resolve(common: &Common, mut overrides: Vec<(String, String)>) -> Result<RunConfig> {
    let mut flags = Vec::new();
    if let Some(d) = &common.data {
        flags.push(("data".to_string(), d.display().to_string()));
    }
    if let Some(s) = common.seed {
        flags.push(("seed".to_string(), s.to_string()));
    }
    if let Some(o) = &common.out {
        flags.push(("out".to_string(), o.display().to_string()));
    }
    if let Some(w) = common.workers {
        flags.push(("workers".to_string(), w.to_string()));
    }
    flags.append(&mut overrides);
    RunConfig::resolve(common.config.as_deref(), &flags)
}

fn run() -> Result<()> {
    let (args, overrides) = extract_overrides(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    match &cli.command {
        Command::Select(common) => {
            let cfg = resolve(common, overrides)?;
            let out = cmd_select(&cfg)?;
            say!(
                "selected {} of {} features: {} (gc = {:.6}, {} generations, {:?})",
                out.report.selected_features.len(),
                out.report.best_mask.len(),
                out.report.selected_features.join(","),
                out.report.best_fitness,
                out.report.generations,
                out.report.terminated_by,
            );
            say!(
                "test: a = {:.4}, kappa = {:.4}, auc = {:.4}, eta = {:.4}",
                out.metrics.a, out.metrics.kappa, out.metrics.auc, out.metrics.eta
            );
            say!("wrote {}", cfg.out.display());
        }
        Command::Compare(common) => {
            let cfg = resolve(common, overrides)?;
            let table = cmd_compare(&cfg)?;
            say!("reference fitness {:.9}", table.reference);
            let _ = table.write_csv(std::io::stdout());
        }
        Command::Oracle(common) => {
            let cfg = resolve(common, overrides)?;
            let r = cmd_oracle(&cfg)?;
            say!(
                "best {} (0x{}) gc = {:.9} over {} subsets",
                r.selected_features.join(","),
                r.mask_hex,
                r.best_fitness,
                r.evaluated
            );
        }
        Command::Synth { common, csv } => {
            let cfg = resolve(common, overrides)?;
            let path = cmd_synth(&cfg, csv.as_deref())?;
            say!("wrote {}", path.display());
        }
        Command::Evaluate { common, mask } => {
            let cfg = resolve(common, overrides)?;
            let r = cmd_evaluate(&cfg, mask)?;
            say!("{}", serde_json::to_string_pretty(&r)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
