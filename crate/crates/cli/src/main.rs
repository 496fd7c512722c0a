use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use eqles::closures::ModelKind;
use eqles::config::RunConfig;
use eqles::error::Error;
use eqles::pipeline;

#[derive(Parser)]
#[command(name = "eqles", version, about = "Spectral LES closure laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forced DNS producing velocity snapshots and timeseries.csv.
    Dns(Common),
    /// Filter and restrict the DNS snapshots into training pairs.
    Filter(Common),
    /// Train (or store) one closure model.
    Train(Common),
    /// Evaluate every configured model and write the CSV reports.
    Evaluate(Common),
    /// Run the fast invariant checks.
    Selftest {
        /// Directory for cached equivariant bases.
        #[arg(long)]
        basis_cache: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Model to train, or the only model to evaluate.
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if let Some(m) = self.model {
            cfg.models = vec![m];
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dns(c) => {
            let cfg = c.config()?;
            let s = pipeline::cmd_dns(&cfg)?;
            println!(
                "wrote {} snapshots and {}",
                s.files.len(),
                pipeline::Layout::new(&cfg.out_dir).timeseries().display()
            );
        }
        Command::Filter(c) => {
            let cfg = c.config()?;
            let files = pipeline::cmd_filter(&cfg)?;
            println!("wrote {} snapshot pairs", files.len());
        }
        Command::Train(c) => {
            let cfg = c.config()?;
            let kind = c.model.context("train needs --model")?;
            let s = pipeline::cmd_train(&cfg, kind)?;
            if let Some((first, last)) = eqles::closures::train::epoch_means(&s.history) {
                println!("{kind}: mean loss first epoch {first:.6e}, last epoch {last:.6e}");
            }
            println!("wrote {}", s.model_file.display());
        }
        Command::Evaluate(c) => {
            let cfg = c.config()?;
            let s = pipeline::cmd_evaluate(&cfg)?;
            for m in &s.models {
                let post = m
                    .solution
                    .mean()
                    .map_or_else(|| "N.A.".to_string(), |v| format!("{v:.4}"));
                println!("{:<8} a-priori {:.4}  a-posteriori {post}", m.kind.name(), m.apriori);
            }
            println!(
                "wrote {}",
                pipeline::Layout::new(&cfg.out_dir).eval_dir().display()
            );
        }
        Command::Selftest { basis_cache } => {
            let report = pipeline::cmd_selftest(basis_cache.as_deref());
            for c in &report {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {}: {}", c.name, c.detail);
            }
            let failed = report.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Error::SelfTest(format!("{failed} checks failed")).into());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Instability { .. }) | Some(Error::NonFiniteLoss { .. }) => 2,
        Some(
            Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_)
            | Error::ShapeMismatch { .. }
            | Error::Format { .. }
            | Error::ZeroNormTarget(_),
        ) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
