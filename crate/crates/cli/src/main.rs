//! `roadfield`: meshing, spectra, evolution, analysis and road search for field-road diffusion.

mod commands;
mod config;
mod doc;
mod family;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::Run;

#[derive(Parser)]
#[command(name = "roadfield", version, about = "Field-road diffusion experiments")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "ROADFIELD_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config entry, e.g. `--set mesh.h=0.05`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Mesh size (mesh.h).
    #[arg(long)]
    h: Option<f64>,
    /// Number of eigenpairs (eigen.k).
    #[arg(long)]
    k: Option<usize>,
    /// Solver seed (eigen.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (output.dir), relative to the working directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<Run> {
        let mut overrides = self.overrides.clone();
        overrides.extend(self.h.map(|h| format!("mesh.h={h}")));
        overrides.extend(self.k.map(|k| format!("eigen.k={k}")));
        overrides.extend(self.seed.map(|s| format!("eigen.seed={s}")));
        Run::load(&self.config, &overrides, self.out_dir.clone())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validity, length and Ahlfors constants of the network.
    NetStats(Common),
    /// Conforming triangulation and quality report.
    Mesh(Common),
    /// Smallest eigenpairs of the coupled problem.
    Eigs(Common),
    /// Implicit Euler evolution and decay-rate fit.
    Evolve(Common),
    /// Constants, bounds and the efficiency ratio of the road.
    Analyze(Common),
    /// Grid search (and optional local search) over a road family.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Family and search spec file.
        #[arg(long)]
        spec: PathBuf,
        /// Ranked results CSV (default: <output dir>/search.csv).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the best road as a network file.
        #[arg(long)]
        emit_best: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::NetStats(_) => "net-stats",
            Command::Mesh(_) => "mesh",
            Command::Eigs(_) => "eigs",
            Command::Evolve(_) => "evolve",
            Command::Analyze(_) => "analyze",
            Command::Optimize { .. } => "optimize",
        }
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut run = match &cli.command {
        Command::NetStats(c) | Command::Mesh(c) | Command::Eigs(c) | Command::Evolve(c) | Command::Analyze(c) => {
            c.load()?
        }
        Command::Optimize { common, .. } => common.load()?,
    };
    match cli.command {
        Command::NetStats(_) => run.net_stats()?,
        Command::Mesh(_) => run.mesh()?,
        Command::Eigs(_) => run.eigs()?,
        Command::Evolve(_) => run.evolve()?,
        Command::Analyze(_) => run.analyze()?,
        Command::Optimize {
            spec, output, emit_best, ..
        } => run.optimize(&spec, output, emit_best)?,
    }
    run.finish()?;
    Ok(run.written().to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = format!("{e:#}").replace(['\n', '\r'], " ");
            eprintln!("error: command={name}: {message}");
            ExitCode::FAILURE
        }
    }
}
