//! Best-response dynamics.
//!
//! A driver dropping off car `u` looks for the position in the region with
//! the lowest price given every other parked car, and moves towards it by at
//! most `s_max`. The asynchronous model moves one car per step, chosen by a
//! [`Schedule`]; the synchronous model moves every car at once against the
//! same snapshot, an explicit-step version of the continuous-time flow.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{ConvexRegion, GeometryError, Point, EPS_GEOM};
use crate::optimum::analytic_square_grid;
use crate::pricing::{price_at_with, social_cost, FleetState, PriceSpec, PricingError};
use crate::trace::{Moved, Trace, TraceRecord};

/// Candidates within this relative margin of the best price count as ties.
const TIE_RELATIVE: f64 = 1e-9;
/// Lattice seeds refined in addition to the current position.
const REFINED_SEEDS: usize = 4;
/// Rotation applied to the poll directions after every unsuccessful poll.
const POLL_TWIST: f64 = 0.618_033_988_749_894_9 * PI / 4.0;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no candidate position inside the region")]
    NoCandidate,
    #[error("degenerate state at step {step}: {source}")]
    Degenerate { step: u64, source: PricingError },
    #[error("invalid configuration: {key}: {msg}")]
    InvalidConfig { key: &'static str, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// A fresh random permutation of the fleet for every block of `k` steps.
    Permuted,
    /// Independent uniform draws.
    Iid,
    /// `n mod k`.
    Cyclic,
}

impl std::str::FromStr for ScheduleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "permuted" | "p1" => Ok(Self::Permuted),
            "iid" | "p2" => Ok(Self::Iid),
            "cyclic" | "p3" => Ok(Self::Cyclic),
            _ => Err(format!(
                "unknown schedule {s:?} (expected permuted, iid or cyclic)"
            )),
        }
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Permuted => "permuted",
            Self::Iid => "iid",
            Self::Cyclic => "cyclic",
        })
    }
}

/// Chooses which car moves at each step. Steps must be requested in order
/// starting from 0.
#[derive(Clone, Debug)]
pub struct Schedule {
    kind: ScheduleKind,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    block: Option<u64>,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self {
            kind,
            rng,
            order: Vec::new(),
            block: None,
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Car index in `0..k` for step `n`.
    pub fn next(&mut self, n: u64, k: usize) -> usize {
        assert!(k >= 1, "schedule needs a non-empty fleet");
        let kk = k as u64;
        match self.kind {
            ScheduleKind::Cyclic => (n % kk) as usize,
            ScheduleKind::Iid => self.rng.random_range(0..k),
            ScheduleKind::Permuted => {
                let block = n / kk;
                if self.block != Some(block) || self.order.len() != k {
                    self.order = (0..k).collect();
                    self.order.shuffle(&mut self.rng);
                    self.block = Some(block);
                }
                self.order[(n % kk) as usize]
            }
        }
    }
}

pub fn schedule_next(s: &mut Schedule, n: u64, k: usize) -> usize {
    s.next(n, k)
}

/// Knobs of the inner best-response search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    /// Seed lattice points per axis over the region's bounding box.
    pub grid_resolution: usize,
    /// Pattern search stops once its step falls below this length.
    pub refine_tolerance: f64,
    pub max_refine_iters: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            grid_resolution: 32,
            refine_tolerance: 1e-9,
            max_refine_iters: 200,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.grid_resolution < 2 {
            return Err(invalid("grid_resolution", "must be at least 2"));
        }
        if self.refine_tolerance.is_nan() || self.refine_tolerance <= 0.0 {
            return Err(invalid("refine_tolerance", "must be positive"));
        }
        if self.max_refine_iters == 0 {
            return Err(invalid("max_refine_iters", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepParams {
    /// Longest allowed displacement; `f64::INFINITY` disables clipping.
    pub s_max: f64,
    pub solver: SolverParams,
}

impl StepParams {
    pub fn new(s_max: f64) -> Self {
        Self {
            s_max,
            solver: SolverParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.s_max.is_nan() || self.s_max <= 0.0 {
            return Err(invalid("s_max", "must be positive"));
        }
        self.solver.validate()
    }
}

fn invalid(key: &'static str, msg: impl Into<String>) -> DynamicsError {
    DynamicsError::InvalidConfig {
        key,
        msg: msg.into(),
    }
}

struct Candidate {
    value: f64,
    at: Point,
}

fn lexicographic(a: Point, b: Point) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

/// Position in `q` minimising car `u`'s price with every other car fixed.
///
/// Multi-start: the price is evaluated on a lattice over the bounding box
/// (points outside `q` dropped); the current position and the best lattice
/// points are then refined by a rotating 8-direction pattern search. Among
/// candidates whose price is within a relative `1e-9` of the best, the one
/// closest to the current position wins, then the lexicographically
/// smallest.
pub fn inner_argmin(
    spec: PriceSpec,
    state: &FleetState,
    u: usize,
    q: &ConvexRegion,
    sp: &SolverParams,
) -> Result<Point, DynamicsError> {
    state.check_index(u)?;
    sp.validate()?;
    let mut buf = Vec::with_capacity(spec.neighborhood);
    let mut eval = |y: Point| price_at_with(spec, state, u, y, q, &mut buf).get();

    let (lo, hi) = q.bounding_box();
    let res = sp.grid_resolution;
    let cell = Point::new((hi.x - lo.x) / res as f64, (hi.y - lo.y) / res as f64);
    let mut seeds = Vec::with_capacity(res * res);
    for i in 0..res {
        for j in 0..res {
            let p = Point::new(
                lo.x + (i as f64 + 0.5) * cell.x,
                lo.y + (j as f64 + 0.5) * cell.y,
            );
            if q.contains(p) {
                seeds.push(Candidate {
                    value: eval(p),
                    at: p,
                });
            }
        }
    }
    seeds.sort_by(|a, b| a.value.total_cmp(&b.value).then(lexicographic(a.at, b.at)));
    seeds.truncate(REFINED_SEEDS);

    let current = state.position(u);
    let mut starts = Vec::with_capacity(REFINED_SEEDS + 1);
    if q.contains(current) {
        starts.push(Candidate {
            value: eval(current),
            at: current,
        });
    }
    starts.extend(seeds);
    if starts.is_empty() {
        return Err(DynamicsError::NoCandidate);
    }

    let h0 = cell.x.max(cell.y);
    let refined: Vec<Candidate> = starts
        .into_iter()
        .map(|c| pattern_search(c, h0, q, sp, &mut eval))
        .collect();

    let best = refined
        .iter()
        .map(|c| c.value)
        .fold(f64::INFINITY, f64::min);
    let slack = if best.is_finite() {
        TIE_RELATIVE * best.abs()
    } else {
        0.0
    };
    let winner = refined
        .iter()
        .filter(|c| c.value <= best + slack || (best.is_infinite() && c.value.is_infinite()))
        .min_by(|a, b| {
            a.at.distance(current)
                .total_cmp(&b.at.distance(current))
                .then(lexicographic(a.at, b.at))
        })
        .expect("at least one candidate");
    Ok(winner.at)
}

fn pattern_search(
    start: Candidate,
    h0: f64,
    q: &ConvexRegion,
    sp: &SolverParams,
    eval: &mut impl FnMut(Point) -> f64,
) -> Candidate {
    let Candidate { mut value, mut at } = start;
    let mut h = h0;
    let mut twist = 0.0;
    let mut iters = 0;
    while h >= sp.refine_tolerance && iters < sp.max_refine_iters {
        iters += 1;
        let mut improved: Option<Candidate> = None;
        for j in 0..8 {
            let angle = twist + j as f64 * PI / 4.0;
            let y = at + Point::new(angle.cos(), angle.sin()) * h;
            if !q.contains(y) {
                continue;
            }
            let fy = eval(y);
            if fy < value && improved.as_ref().is_none_or(|c| fy < c.value) {
                improved = Some(Candidate { value: fy, at: y });
            }
        }
        match improved {
            Some(c) => {
                value = c.value;
                at = c.at;
            }
            None => {
                h *= 0.5;
                twist += POLL_TWIST;
            }
        }
    }
    Candidate { value, at }
}

/// Displacement of car `u` for one step: towards its best response, scaled
/// down uniformly so its length does not exceed `s_max`.
pub fn step(
    spec: PriceSpec,
    state: &FleetState,
    u: usize,
    q: &ConvexRegion,
    p: &StepParams,
) -> Result<Point, DynamicsError> {
    p.validate()?;
    let target = inner_argmin(spec, state, u, q, &p.solver)?;
    Ok(clip_step(target - state.position(u), p.s_max))
}

pub(crate) fn clip_step(d: Point, s_max: f64) -> Point {
    let len = d.norm();
    if len <= s_max {
        d
    } else {
        d * (s_max / len)
    }
}

/// Whether no car would move by `eps` or more.
pub fn is_fixed_point(
    spec: PriceSpec,
    state: &FleetState,
    q: &ConvexRegion,
    p: &StepParams,
    eps: f64,
) -> Result<bool, DynamicsError> {
    for u in 0..state.len() {
        if step(spec, state, u, q, p)?.norm() >= eps {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// One car per step, chosen by the schedule.
    Async,
    /// All cars per round against the same snapshot.
    Sync,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "async" => Ok(Self::Async),
            "sync" => Ok(Self::Sync),
            _ => Err(format!("unknown mode {s:?} (expected async or sync)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Async => "async",
            Self::Sync => "sync",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    /// Uniform in the region, drawn from the run seed.
    Random,
    /// `i × i` uniform grid over the region's bounding box (`k` must be a
    /// perfect square).
    Grid,
    Positions(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub price: PriceSpec,
    pub k: usize,
    pub region: ConvexRegion,
    pub init: InitSpec,
    pub mode: Mode,
    pub schedule: ScheduleKind,
    /// Asynchronous steps, or synchronous rounds.
    pub steps: u64,
    pub step: StepParams,
    pub seed: u64,
    /// Record every m-th step; the first and last snapshots are always kept.
    pub record_every: u64,
    /// A full round in which no car moves this far counts as a fixed point.
    pub fixed_point_tolerance: f64,
    /// Fraction of its step each car takes in a synchronous round. 1 applies
    /// the steps as computed; smaller values damp the overshoot that occurs
    /// when neighbours all jump to best responses against the same snapshot.
    pub sync_relaxation: f64,
}

impl SimConfig {
    pub fn new(price: PriceSpec, k: usize, region: ConvexRegion) -> Self {
        Self {
            price,
            k,
            region,
            init: InitSpec::Random,
            mode: Mode::Async,
            schedule: ScheduleKind::Permuted,
            steps: 100 * k as u64,
            step: StepParams::new(0.05),
            seed: 0,
            record_every: 1,
            fixed_point_tolerance: 1e-6,
            sync_relaxation: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.k == 0 {
            return Err(invalid("k", "fleet must contain at least one car"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be positive"));
        }
        if self.fixed_point_tolerance.is_nan() || self.fixed_point_tolerance <= 0.0 {
            return Err(invalid("fixed_point_tolerance", "must be positive"));
        }
        if !(self.sync_relaxation > 0.0 && self.sync_relaxation <= 1.0) {
            return Err(invalid("sync_relaxation", "must lie in (0, 1]"));
        }
        if self.price.neighborhood == 0 {
            return Err(invalid("neighbors", "must be at least 1"));
        }
        self.step.validate()?;
        match &self.init {
            InitSpec::Positions(p) if p.len() != self.k => Err(invalid(
                "init",
                format!("{} positions given for k = {}", p.len(), self.k),
            )),
            InitSpec::Grid if integer_sqrt(self.k).is_none() => Err(invalid(
                "init",
                format!("grid needs a square fleet size, got k = {}", self.k),
            )),
            _ => Ok(()),
        }
    }

    /// Initial fleet; deterministic in the seed.
    pub fn initial_state(&self) -> Result<FleetState, DynamicsError> {
        self.validate()?;
        let q = &self.region;
        let state = match &self.init {
            InitSpec::Positions(p) => FleetState::new_in(p.clone(), q)?,
            InitSpec::Grid => {
                let i = integer_sqrt(self.k).expect("validated");
                let (lo, hi) = q.bounding_box();
                let pts = analytic_square_grid(i)
                    .into_positions()
                    .into_iter()
                    .map(|p| Point::new(lo.x + p.x * (hi.x - lo.x), lo.y + p.y * (hi.y - lo.y)))
                    .collect();
                FleetState::new_in(pts, q)?
            }
            InitSpec::Random => random_state(q, self.k, &mut ChaCha8Rng::seed_from_u64(self.seed)),
        };
        Ok(state)
    }
}

pub(crate) fn integer_sqrt(k: usize) -> Option<usize> {
    let r = (k as f64).sqrt().round() as usize;
    (r * r == k).then_some(r)
}

/// `k` distinct points drawn uniformly from `q` by rejection sampling.
pub fn random_state<R: Rng>(q: &ConvexRegion, k: usize, rng: &mut R) -> FleetState {
    let (lo, hi) = q.bounding_box();
    let mut pts: Vec<Point> = Vec::with_capacity(k);
    while pts.len() < k {
        let p = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if q.contains(p) && pts.iter().all(|o| o.distance(p) > EPS_GEOM) {
            pts.push(p);
        }
    }
    FleetState::new(pts).expect("sampled positions are distinct and finite")
}

struct Recorder {
    records: Vec<TraceRecord>,
    every: u64,
}

impl Recorder {
    fn new(initial: &FleetState, q: &ConvexRegion, every: u64) -> Self {
        let mut r = Self {
            records: Vec::new(),
            every,
        };
        r.push(0, Moved::Initial, initial, q);
        r
    }

    fn push(&mut self, n: u64, moved: Moved, state: &FleetState, q: &ConvexRegion) {
        self.records.push(TraceRecord {
            n,
            moved,
            positions: state.positions().to_vec(),
            social_cost: social_cost(state, q).get(),
        });
    }

    fn maybe_push(
        &mut self,
        n: u64,
        moved: Moved,
        state: &FleetState,
        q: &ConvexRegion,
        last: bool,
    ) {
        if last || n.is_multiple_of(self.every) {
            self.push(n, moved, state, q);
        }
    }

    fn finish(self, fixed_point: bool, steps_run: u64) -> Trace {
        Trace {
            records: self.records,
            fixed_point,
            steps_run,
        }
    }
}

fn warn_if_clamped(config: &SimConfig) {
    if config.price.is_clamped(config.k) {
        log::warn!(
            "neighbourhood {} exceeds k - 1 = {}; clamped",
            config.price.neighborhood,
            config.k.saturating_sub(1)
        );
    }
}

/// One car moves per step; stops after `config.steps` steps or once every
/// car has taken a step shorter than the fixed-point tolerance since the
/// last longer move.
pub fn simulate_async(config: &SimConfig) -> Result<Trace, DynamicsError> {
    let mut state = config.initial_state()?;
    warn_if_clamped(config);
    let q = &config.region;
    let k = state.len();
    let mut schedule = Schedule::new(config.schedule, config.seed);
    let mut rec = Recorder::new(&state, q, config.record_every);
    let mut quiet = vec![false; k];
    let mut n = 0;
    while n < config.steps {
        let u = schedule.next(n, k);
        let d = step(config.price, &state, u, q, &config.step)?;
        n += 1;
        state = state
            .with_moved(u, state.position(u) + d)
            .map_err(|source| DynamicsError::Degenerate { step: n, source })?;
        if d.norm() < config.fixed_point_tolerance {
            quiet[u] = true;
        } else {
            quiet.iter_mut().for_each(|s| *s = false);
        }
        let done = quiet.iter().all(|&s| s);
        rec.maybe_push(n, Moved::Car(u), &state, q, done || n == config.steps);
        if done {
            return Ok(rec.finish(true, n));
        }
    }
    Ok(rec.finish(false, n))
}

/// Every car moves in each round, all computed from the same snapshot and
/// scaled by `config.sync_relaxation`. The fixed-point test uses the
/// unscaled steps.
pub fn simulate_sync(config: &SimConfig) -> Result<Trace, DynamicsError> {
    let mut state = config.initial_state()?;
    warn_if_clamped(config);
    let q = &config.region;
    let k = state.len();
    let mut rec = Recorder::new(&state, q, config.record_every);
    let mut n = 0;
    while n < config.steps {
        let moves = (0..k)
            .map(|u| step(config.price, &state, u, q, &config.step))
            .collect::<Result<Vec<_>, _>>()?;
        n += 1;
        let positions: Vec<Point> = state
            .positions()
            .iter()
            .zip(&moves)
            .map(|(&p, &d)| p + d * config.sync_relaxation)
            .collect();
        state = FleetState::new(positions)
            .map_err(|source| DynamicsError::Degenerate { step: n, source })?;
        let done = moves
            .iter()
            .all(|d| d.norm() < config.fixed_point_tolerance);
        rec.maybe_push(n, Moved::All, &state, q, done || n == config.steps);
        if done {
            return Ok(rec.finish(true, n));
        }
    }
    Ok(rec.finish(false, n))
}

pub fn simulate(config: &SimConfig) -> Result<Trace, DynamicsError> {
    match config.mode {
        Mode::Async => simulate_async(config),
        Mode::Sync => simulate_sync(config),
    }
}
