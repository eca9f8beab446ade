//! Argument parsing and dispatch for the `dropfee` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dropfee::Objective;

use crate::commands::{cmd_compare, cmd_optimum, cmd_render, cmd_simulate, format_table};
use crate::config::{self, region_from_arg, Overrides};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "dropfee",
    version,
    about = "Drop-off pricing experiments for floating car-sharing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run best-response dynamics; writes trace.csv, summary.txt and manifest.toml.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also draw the run into trace.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Draw a trace: paths, final Voronoi partition and inscribed circles.
    Render {
        /// Trace CSV written by `simulate`.
        trace: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// `unit-square` or a region file; defaults to the region of a
        /// manifest.toml next to the trace, else the unit square.
        #[arg(long)]
        region: Option<String>,
    },
    /// Search for the social optimum (or a summed-price optimum).
    Optimum {
        /// social-max, sum-ustar, sum-v[:N] or sum-w[:N].
        #[arg(long, default_value = "social-max", value_parser = parse_objective)]
        objective: Objective,
        #[arg(long, default_value_t = 9)]
        k: usize,
        #[arg(long, default_value = config::UNIT_SQUARE)]
        region: String,
        /// Objective evaluations.
        #[arg(long, default_value_t = 200_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the config's `prices` on identical initial states and tabulate.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse().map_err(|e: dropfee::OptimumError| e.to_string())
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config or a run manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// ustar, v, w (optionally with :N).
    #[arg(long)]
    pub price: Option<String>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// permuted, iid or cyclic.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long)]
    pub region: Option<String>,
    /// async or sync.
    #[arg(long)]
    pub mode: Option<String>,
    /// random, grid or a positions file.
    #[arg(long)]
    pub init: Option<String>,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            k: self.k,
            price: self.price.clone(),
            neighbors: self.neighbors,
            schedule: self.schedule.clone(),
            steps: self.steps,
            s_max: self.smax,
            region: self.region.clone(),
            mode: self.mode.clone(),
            init: self.init.clone(),
        }
    }
}

/// Executes a parsed command, printing results to stdout.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { run, svg } => {
            let outcome = cmd_simulate(run.config.as_deref(), &run.overrides(), &run.out, svg)?;
            print!("{}", outcome.summary.to_text());
            println!("output = {}", outcome.out_dir.display());
        }
        Command::Render {
            trace,
            output,
            region,
        } => {
            let region = match region {
                Some(r) => region_from_arg(&r)?,
                None => {
                    let manifest = trace.with_file_name(crate::commands::MANIFEST_FILE);
                    if manifest.is_file() {
                        config::resolve_region(&config::load(&manifest)?.region)?
                    } else {
                        dropfee::ConvexRegion::unit_square()
                    }
                }
            };
            let model = cmd_render(&trace, &output, &region)?;
            println!("cells = {}", model.cells.len());
            println!("output = {}", output.display());
        }
        Command::Optimum {
            objective,
            k,
            region,
            budget,
            seed,
            out,
        } => {
            let region = region_from_arg(&region)?;
            let (_, summary) = cmd_optimum(objective, k, &region, budget, seed, out.as_deref())?;
            println!("{summary}");
        }
        Command::Compare { run } => {
            let rows = cmd_compare(run.config.as_deref(), &run.overrides(), Some(&run.out))?;
            print!("{}", format_table(&rows));
        }
    }
    Ok(())
}
