//! Experiment configuration files.
//!
//! A config is a TOML document; every key is optional. Run manifests embed
//! the fully resolved config under `[config]` and can be loaded the same
//! way, which is how a run is reproduced.
//!
//! ```toml
//! price = "ustar"          # ustar | v | w, optionally "w:3"
//! neighbors = 3            # |D| for v and w
//! k = 9
//! region = "unit-square"   # or a region file path, or [[x, y], ...]
//! init = "random"          # random | grid | positions file | [[x, y], ...]
//! mode = "async"           # async | sync
//! schedule = "permuted"    # permuted | iid | cyclic
//! steps = 900              # default 100·k (async) or 100 (sync)
//! s_max = 0.05             # inf disables clipping
//! seed = 7
//! record_every = 1
//! fixed_point_tolerance = 1e-6
//! sync_relaxation = 1.0
//! optimum_budget = 50000   # reference optimum when no analytic one exists
//! prices = ["ustar", "w:3"]  # compare only
//! seeds = [0, 1, 2]          # compare only; defaults to [seed]
//!
//! [solver]
//! grid_resolution = 32
//! refine_tolerance = 1e-9
//! max_refine_iters = 200
//! ```

use std::path::Path;

use dropfee::geometry::parse_points;
use dropfee::{
    ConvexRegion, InitSpec, Mode, Point, PriceKind, PriceSpec, ScheduleKind, SimConfig,
    SolverParams, StepParams,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const UNIT_SQUARE: &str = "unit-square";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSetting {
    /// `unit-square` or a region file path.
    Named(String),
    Vertices(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSetting {
    /// `random`, `grid` or a positions file path.
    Named(String),
    Positions(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub grid_resolution: usize,
    pub refine_tolerance: f64,
    pub max_refine_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverParams::default();
        Self {
            grid_resolution: d.grid_resolution,
            refine_tolerance: d.refine_tolerance,
            max_refine_iters: d.max_refine_iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub price: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<usize>,
    pub k: usize,
    pub region: RegionSetting,
    pub init: InitSetting,
    pub mode: String,
    pub schedule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    pub s_max: f64,
    pub seed: u64,
    pub record_every: u64,
    pub fixed_point_tolerance: f64,
    pub sync_relaxation: f64,
    pub optimum_budget: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub prices: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    pub solver: SolverSettings,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            price: "ustar".into(),
            neighbors: None,
            k: 9,
            region: RegionSetting::Named(UNIT_SQUARE.into()),
            init: InitSetting::Named("random".into()),
            mode: "async".into(),
            schedule: "permuted".into(),
            steps: None,
            s_max: 0.05,
            seed: 0,
            record_every: 1,
            fixed_point_tolerance: 1e-6,
            sync_relaxation: 1.0,
            optimum_budget: 50_000,
            prices: Vec::new(),
            seeds: Vec::new(),
            solver: SolverSettings::default(),
        }
    }
}

/// Command-line replacements for config keys. Paths are taken relative to
/// the working directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub price: Option<String>,
    pub neighbors: Option<usize>,
    pub schedule: Option<String>,
    pub steps: Option<u64>,
    pub s_max: Option<f64>,
    pub region: Option<String>,
    pub mode: Option<String>,
    pub init: Option<String>,
}

/// A config ready to run, plus its self-contained echo for manifests.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub sim: SimConfig,
    pub prices: Vec<PriceSpec>,
    pub seeds: Vec<u64>,
    pub optimum_budget: u64,
    pub echo: FileConfig,
}

/// Reads a config file or a run manifest. Relative paths inside it are
/// rewritten against the file's directory.
pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let mut cfg = parse(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    cfg.rebase(base);
    Ok(cfg)
}

pub fn parse(text: &str) -> Result<FileConfig, CliError> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("<syntax>", e.message().trim()))?;
    if let Some(inner) = table.remove("config") {
        table = match inner {
            toml::Value::Table(t) => t,
            _ => {
                return Err(CliError::config(
                    "config",
                    "manifest [config] must be a table",
                ))
            }
        };
    }
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        CliError::config(key, e.into_inner().message().trim())
    })
}

fn rebase_path(base: &Path, s: &mut String) {
    let p = Path::new(s.as_str());
    if p.is_relative() {
        *s = base.join(p).to_string_lossy().into_owned();
    }
}

fn absolute(s: &str) -> String {
    std::path::absolute(s)
        .map(|p| p.to_string_lossy().into_owned())
        .unwrap_or_else(|_| s.to_string())
}

impl FileConfig {
    fn rebase(&mut self, base: &Path) {
        if let RegionSetting::Named(name) = &mut self.region {
            if name != UNIT_SQUARE {
                rebase_path(base, name);
            }
        }
        if let InitSetting::Named(name) = &mut self.init {
            if name != "random" && name != "grid" {
                rebase_path(base, name);
            }
        }
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = ov.k {
            self.k = v;
        }
        if let Some(v) = &ov.price {
            self.price = v.clone();
        }
        if let Some(v) = ov.neighbors {
            self.neighbors = Some(v);
        }
        if let Some(v) = &ov.schedule {
            self.schedule = v.clone();
        }
        if let Some(v) = ov.steps {
            self.steps = Some(v);
        }
        if let Some(v) = ov.s_max {
            self.s_max = v;
        }
        if let Some(v) = &ov.mode {
            self.mode = v.clone();
        }
        if let Some(v) = &ov.region {
            self.region = RegionSetting::Named(if v == UNIT_SQUARE {
                v.clone()
            } else {
                absolute(v)
            });
        }
        if let Some(v) = &ov.init {
            self.init = InitSetting::Named(match v.as_str() {
                "random" | "grid" => v.clone(),
                _ => absolute(v),
            });
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let region = resolve_region(&self.region)?;
        let price = self.price_spec(&self.price, "price")?;
        let mode: Mode = self.mode.parse().map_err(|e| CliError::config("mode", e))?;
        let schedule: ScheduleKind = self
            .schedule
            .parse()
            .map_err(|e| CliError::config("schedule", e))?;
        let init = match &self.init {
            InitSetting::Positions(p) => InitSpec::Positions(to_points(p)),
            InitSetting::Named(n) if n == "random" => InitSpec::Random,
            InitSetting::Named(n) if n == "grid" => InitSpec::Grid,
            InitSetting::Named(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config("init", format!("{path}: {e}")))?;
                InitSpec::Positions(
                    parse_points(&text)
                        .map_err(|e| CliError::config("init", format!("{path}: {e}")))?,
                )
            }
        };
        let steps = self.steps.unwrap_or(match mode {
            Mode::Async => 100 * self.k as u64,
            Mode::Sync => 100,
        });

        let mut sim = SimConfig::new(price, self.k, region.clone());
        sim.init = init.clone();
        sim.mode = mode;
        sim.schedule = schedule;
        sim.steps = steps;
        sim.step = StepParams {
            s_max: self.s_max,
            solver: SolverParams {
                grid_resolution: self.solver.grid_resolution,
                refine_tolerance: self.solver.refine_tolerance,
                max_refine_iters: self.solver.max_refine_iters,
            },
        };
        sim.seed = self.seed;
        sim.record_every = self.record_every;
        sim.fixed_point_tolerance = self.fixed_point_tolerance;
        sim.sync_relaxation = self.sync_relaxation;
        sim.validate()?;

        let prices = self
            .prices
            .iter()
            .enumerate()
            .map(|(i, p)| self.price_spec(p, &format!("prices[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        if self.optimum_budget == 0 {
            return Err(CliError::config("optimum_budget", "must be positive"));
        }
        let seeds = if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        };

        let mut echo = self.clone();
        echo.price = kind_name(price.kind).into();
        echo.neighbors = Some(price.neighborhood);
        echo.steps = Some(steps);
        echo.region = if region == ConvexRegion::unit_square() {
            RegionSetting::Named(UNIT_SQUARE.into())
        } else {
            RegionSetting::Vertices(from_points(region.vertices()))
        };
        echo.init = match init {
            InitSpec::Random => InitSetting::Named("random".into()),
            InitSpec::Grid => InitSetting::Named("grid".into()),
            InitSpec::Positions(p) => InitSetting::Positions(from_points(&p)),
        };
        echo.prices = prices.iter().map(ToString::to_string).collect();
        Ok(Resolved {
            sim,
            prices,
            seeds,
            optimum_budget: self.optimum_budget,
            echo,
        })
    }

    /// A price name, with `neighbors` taking precedence over a `:N` suffix.
    fn price_spec(&self, text: &str, key: &str) -> Result<PriceSpec, CliError> {
        let mut spec: PriceSpec = text.parse().map_err(|e| CliError::config(key, e))?;
        if let Some(n) = self.neighbors {
            if n == 0 {
                return Err(CliError::config("neighbors", "must be at least 1"));
            }
            if spec.kind != PriceKind::UstarLocal && !text.contains(':') {
                spec.neighborhood = n;
            }
        }
        Ok(spec)
    }
}

fn kind_name(kind: PriceKind) -> &'static str {
    match kind {
        PriceKind::UstarLocal => "ustar",
        PriceKind::V => "v",
        PriceKind::W => "w",
    }
}

pub fn resolve_region(setting: &RegionSetting) -> Result<ConvexRegion, CliError> {
    match setting {
        RegionSetting::Named(n) if n == UNIT_SQUARE => Ok(ConvexRegion::unit_square()),
        RegionSetting::Named(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config("region", format!("{path}: {e}")))?;
            ConvexRegion::parse(&text)
                .map_err(|e| CliError::config("region", format!("{path}: {e}")))
        }
        RegionSetting::Vertices(v) => {
            ConvexRegion::new(to_points(v)).map_err(|e| CliError::config("region", e))
        }
    }
}

/// Region from a command-line value: `unit-square` or a file path.
pub fn region_from_arg(arg: &str) -> Result<ConvexRegion, CliError> {
    resolve_region(&RegionSetting::Named(arg.to_string()))
}

fn to_points(v: &[[f64; 2]]) -> Vec<Point> {
    v.iter().map(|&[x, y]| Point::new(x, y)).collect()
}

fn from_points(v: &[Point]) -> Vec<[f64; 2]> {
    v.iter().map(|p| [p.x, p.y]).collect()
}
