//! The four subcommands, as library functions writing into an output
//! directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dropfee::optimum::{reference_optimum, social_cost_of_result};
use dropfee::trace::{read_csv, write_csv};
use dropfee::{
    global_search_optimum, simulate, ConvexRegion, Objective, OptimumResult, PriceKind, PriceSpec,
    SimConfig, Trace,
};
use serde::{Deserialize, Serialize};

use crate::config::{self, FileConfig, Overrides, Resolved};
use crate::error::CliError;
use crate::render::RenderModel;

pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const IMAGE_FILE: &str = "trace.svg";

/// Paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub trace: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub summary: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library_version: String,
    pub wall_clock_seconds: f64,
    pub artifacts: Artifacts,
    pub config: FileConfig,
}

/// Headline numbers of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub price: PriceSpec,
    pub mode: String,
    pub k: usize,
    pub steps_run: u64,
    pub fixed_point: bool,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub reference: f64,
    /// The reference is the analytic optimum rather than a search result.
    pub reference_exact: bool,
}

impl Summary {
    pub fn ratio(&self) -> f64 {
        self.final_cost / self.reference
    }

    pub fn to_text(&self) -> String {
        format!(
            "price = {}\nmode = {}\nk = {}\nsteps_run = {}\nfixed_point = {}\ninitial_social_cost = {:.12}\nfinal_social_cost = {:.12}\nreference_optimum = {:.12} ({})\nratio = {:.6}\n",
            self.price,
            self.mode,
            self.k,
            self.steps_run,
            self.fixed_point,
            self.initial_cost,
            self.final_cost,
            self.reference,
            if self.reference_exact { "analytic" } else { "best found" },
            self.ratio()
        )
    }
}

pub struct SimulateOutcome {
    pub trace: Trace,
    pub summary: Summary,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

/// Config from an optional file with overrides applied.
pub fn load_config(path: Option<&Path>, ov: &Overrides) -> Result<Resolved, CliError> {
    let mut cfg = match path {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    cfg.apply(ov);
    cfg.resolve()
}

/// Rejects invalid initial states as configuration errors before running.
fn run(sim: &SimConfig) -> Result<Trace, CliError> {
    sim.initial_state().map_err(|e| match e {
        dropfee::DynamicsError::InvalidConfig { key, msg } => CliError::config(key, msg),
        other => CliError::config("init", other),
    })?;
    Ok(simulate(sim)?)
}

fn summarize(sim: &SimConfig, trace: &Trace, budget: u64) -> Result<Summary, CliError> {
    let (reference, exact) = reference_optimum(&sim.region, sim.k, budget, sim.seed)?;
    Ok(Summary {
        price: sim.price,
        mode: sim.mode.to_string(),
        k: sim.k,
        steps_run: trace.steps_run,
        fixed_point: trace.fixed_point,
        initial_cost: trace.initial().map_or(f64::NAN, |r| r.social_cost),
        final_cost: trace.final_cost(),
        reference: reference.get(),
        reference_exact: exact,
    })
}

/// Runs the configured simulation and writes the trace, summary, manifest
/// and optionally a rendering into `out`.
pub fn cmd_simulate(
    config_path: Option<&Path>,
    ov: &Overrides,
    out: &Path,
    render: bool,
) -> Result<SimulateOutcome, CliError> {
    let resolved = load_config(config_path, ov)?;
    let sim = &resolved.sim;
    let started = Instant::now();
    let trace = run(sim)?;
    let elapsed = started.elapsed().as_secs_f64();
    let summary = summarize(sim, &trace, resolved.optimum_budget)?;

    create_dir(out)?;
    let trace_path = out.join(TRACE_FILE);
    let file = fs::File::create(&trace_path)
        .map_err(|e| CliError::io(format!("creating {}", trace_path.display()), e))?;
    write_csv(&trace.records, std::io::BufWriter::new(file))?;
    write(&out.join(SUMMARY_FILE), &summary.to_text())?;
    let image = if render {
        let model = RenderModel::from_records(&trace.records, &sim.region)?;
        write(&out.join(IMAGE_FILE), &model.to_svg())?;
        Some(IMAGE_FILE.to_string())
    } else {
        None
    };

    let manifest = Manifest {
        library_version: dropfee::VERSION.to_string(),
        wall_clock_seconds: elapsed,
        artifacts: Artifacts {
            trace: TRACE_FILE.into(),
            image,
            summary: SUMMARY_FILE.into(),
        },
        config: resolved.echo.clone(),
    };
    let text =
        toml::to_string(&manifest).map_err(|e| CliError::Failed(format!("manifest: {e}")))?;
    write(&out.join(MANIFEST_FILE), &text)?;
    Ok(SimulateOutcome {
        trace,
        summary,
        manifest,
        out_dir: out.to_path_buf(),
    })
}

/// Draws the trace at `trace_path` into an SVG file.
pub fn cmd_render(
    trace_path: &Path,
    output: &Path,
    region: &ConvexRegion,
) -> Result<RenderModel, CliError> {
    let file = fs::File::open(trace_path)
        .map_err(|e| CliError::io(format!("opening {}", trace_path.display()), e))?;
    let records = read_csv(std::io::BufReader::new(file))?;
    let model = RenderModel::from_records(&records, region)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write(output, &model.to_svg())?;
    Ok(model)
}

/// Global search for the given objective; writes `optimum.txt` (positions)
/// and `optimum_summary.txt` into `out` when given.
pub fn cmd_optimum(
    objective: Objective,
    k: usize,
    region: &ConvexRegion,
    budget: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<(OptimumResult, String), CliError> {
    let result = global_search_optimum(objective, region, k, budget, seed)?;
    let mut summary = result.summary_line();
    if objective != Objective::SocialMax {
        let _ = write!(
            summary,
            " social_cost={:.12}",
            social_cost_of_result(&result, region).get()
        );
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        write(&dir.join("optimum.txt"), &result.positions_text())?;
        write(&dir.join("optimum_summary.txt"), &format!("{summary}\n"))?;
    }
    Ok((result, summary))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub price: PriceSpec,
    pub seed: u64,
    pub final_cost: f64,
    pub reference: f64,
    pub ratio: f64,
    pub fixed_point: bool,
}

pub fn format_table(rows: &[CompareRow]) -> String {
    let mut s = format!(
        "{:<8} {:>6} {:>18} {:>12} {:>10} {:>11}\n",
        "price", "seed", "final_cost", "C*", "ratio", "fixed_point"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<8} {:>6} {:>18.6} {:>12.6} {:>10.4} {:>11}",
            r.price.to_string(),
            r.seed,
            r.final_cost,
            r.reference,
            r.ratio,
            r.fixed_point
        );
    }
    s
}

/// Runs every listed price on every seed from the same initial states.
/// Rows come out in (price, seed) order whatever the thread timing.
pub fn cmd_compare(
    config_path: Option<&Path>,
    ov: &Overrides,
    out: Option<&Path>,
) -> Result<Vec<CompareRow>, CliError> {
    let resolved = load_config(config_path, ov)?;
    let prices = if resolved.prices.is_empty() {
        vec![resolved.sim.price]
    } else {
        resolved.prices.clone()
    };
    let base = &resolved.sim;
    let (reference, _) =
        reference_optimum(&base.region, base.k, resolved.optimum_budget, base.seed)?;
    let reference = reference.get();

    let jobs: Vec<SimConfig> = prices
        .iter()
        .flat_map(|&price| {
            resolved.seeds.iter().map(move |&seed| {
                let mut c = base.clone();
                c.price = price;
                c.seed = seed;
                c
            })
        })
        .collect();
    let traces: Vec<Result<Trace, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|c| scope.spawn(move || run(c))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Failed("worker panicked".into())))
            })
            .collect()
    });

    if let Some(dir) = out {
        create_dir(dir)?;
    }
    let mut rows = Vec::with_capacity(jobs.len());
    for (job, trace) in jobs.iter().zip(traces) {
        let trace = trace?;
        let row = CompareRow {
            price: job.price,
            seed: job.seed,
            final_cost: trace.final_cost(),
            reference,
            ratio: trace.final_cost() / reference,
            fixed_point: trace.fixed_point,
        };
        if row.price.kind == PriceKind::V && row.ratio > 1.1 {
            log::warn!(
                "price {} ends {:.1}% above the optimum (seed {})",
                row.price,
                100.0 * (row.ratio - 1.0),
                row.seed
            );
        }
        if let Some(dir) = out {
            let name = format!(
                "trace_{}_seed{}.csv",
                row.price.to_string().replace(':', "-"),
                row.seed
            );
            let path = dir.join(name);
            let file = fs::File::create(&path)
                .map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
            write_csv(&trace.records, std::io::BufWriter::new(file))?;
        }
        rows.push(row);
    }
    if let Some(dir) = out {
        write(&dir.join("compare.txt"), &format_table(&rows))?;
    }
    Ok(rows)
}
