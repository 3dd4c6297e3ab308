use std::path::PathBuf;
use std::process::ExitCode;

use balancelab_core::experiment::{self, ExperimentConfig, Report};
use balancelab_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "balancelab", version, about = "Balanced-model sweeps and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every β in the config and write the model files.
    Solve(Common),
    /// Per-anchor diagnostics of one model file.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Exponent and constant of the large-x growth per β.
    Omega(Common),
    /// Extremal-ratio curve over the m-grid.
    Theory(Common),
    /// Sum-vs-integral gaps of the coefficient profile.
    Poisson(Common),
    /// Coefficient ratios between consecutive β values.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; fields not given keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    beta: Option<Vec<f64>>,
    #[arg(long = "a-grid", value_delimiter = ',', num_args = 0..)]
    a_grid: Option<Vec<f64>>,
    #[arg(long = "x-grid", value_delimiter = ',', num_args = 0..)]
    x_grid: Option<Vec<f64>>,
}

impl Common {
    fn resolve(self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.out {
            cfg.outputs = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.beta {
            cfg.betas = v;
        }
        if let Some(v) = self.a_grid {
            cfg.a_grid = v;
        }
        if let Some(v) = self.x_grid {
            cfg.x_grid = v;
        }
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<Report, Error> {
    match command {
        Command::Solve(c) => experiment::cmd_solve(&c.resolve()?),
        Command::Diagnose { common, model } => experiment::cmd_diagnose(&model, &common.resolve()?),
        Command::Omega(c) => experiment::cmd_omega(&c.resolve()?),
        Command::Theory(c) => experiment::cmd_theory(&c.resolve()?),
        Command::Poisson(c) => experiment::cmd_poisson(&c.resolve()?),
        Command::Compare(c) => experiment::cmd_compare(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for l in &report.lines {
                println!("{l}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::InvalidInput(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
