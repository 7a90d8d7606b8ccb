use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latlip::config::RunConfig;
use latlip::pipeline::{self, PointSource};
use latlip::Error;

#[derive(Parser)]
#[command(
    name = "latlip",
    version,
    about = "Eigenvector search and lattice Lipschitz extension"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo search for approximate eigenvectors.
    Eigensearch {
        #[command(flatten)]
        common: Common,
    },
    /// Choose a basis and fit lattice constants to a cloud.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Cloud CSV written by `eigensearch`.
        #[arg(long)]
        cloud: PathBuf,
    },
    /// Evaluate a fitted model on a grid or on given points.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// CSV with `x1..xn` columns; a grid over the search box otherwise.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Full pipeline with Monte Carlo error and bound audit.
    Benchmark {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common) -> latlip::Result<(RunConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    let out = cfg.out.clone();
    Ok((cfg, out))
}

fn run(cli: Cli) -> latlip::Result<()> {
    match cli.command {
        Command::Eigensearch { common } => {
            let (cfg, out) = resolve(&common)?;
            let s = pipeline::cmd_eigensearch(&cfg, &out)?;
            println!(
                "{} samples, mean epsilon {:.6} -> {:.6}",
                s.samples, s.initial_mean_error, s.final_mean_error
            );
        }
        Command::Fit { common, cloud } => {
            let (cfg, out) = resolve(&common)?;
            let model = pipeline::cmd_fit(&cfg, &cloud, &out)?;
            println!("K = {:?}, alpha = {}", model.k(), model.alpha());
        }
        Command::Evaluate {
            common,
            model,
            points,
        } => {
            let (cfg, out) = resolve(&common)?;
            let source = match points {
                Some(p) => PointSource::File(p),
                None => {
                    let domain = cfg.domain(&cfg.operator()?)?;
                    PointSource::Grid {
                        lower: domain.lower.clone(),
                        upper: domain.upper.clone(),
                        per_axis: cfg.evaluate.grid,
                    }
                }
            };
            let n = pipeline::cmd_evaluate(&model, &source, &out)?;
            println!("{n} points evaluated");
        }
        Command::Benchmark { common } => {
            let (cfg, out) = resolve(&common)?;
            let r = pipeline::cmd_benchmark(&cfg, &out)?;
            println!(
                "L2 {:.6} ± {:.6}, K = {:?}, audit violations {}/{}",
                r.error.l2_normalized,
                r.error.l2_std_error,
                r.k,
                r.audit.violations,
                r.audit.points
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else if e.is_numerical() {
        3
    } else {
        1
    }
}
