//! Social optima.
//!
//! On the unit square with `k = i²` cars the optimum is the uniform grid
//! with cost `2i`. Elsewhere a seeded multi-start pattern search over all
//! `2k` coordinates gives an upper bound ("best found"), never a certificate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::random_state;
use crate::geometry::{points_to_text, ConvexRegion, Point, EPS_GEOM};
use crate::pricing::{price_from_distances, smallest_distances, FleetState, PriceSpec, PriceValue};

/// Exponents of the p-norm surrogate used to drive the search for the
/// max-type objective, in continuation order.
const MAX_SURROGATE_EXPONENTS: [f64; 4] = [8.0, 32.0, 128.0, 512.0];
/// Search steps shrink down to this fraction of the region's extent.
const STEP_FLOOR: f64 = 1e-7;
const POLL_TWIST: f64 = 0.618_033_988_749_894_9 * PI / 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimumError {
    #[error("search budget must be positive")]
    ZeroBudget,
    #[error("fleet size must be at least 1")]
    EmptyFleet,
    #[error("objective {0} is not a summed price")]
    NotSummed(Objective),
    #[error("unknown objective {0:?} (expected social-max, sum-ustar, sum-v[:N] or sum-w[:N])")]
    Unknown(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    /// `max_u U*(x, u)`, the social cost.
    SocialMax,
    /// `Σ_u U*(x, u)`.
    SumUstar,
    /// `Σ_u V(x, u)` with the given neighbourhood.
    SumV(usize),
    /// `Σ_u W(x, u)` with the given neighbourhood.
    SumW(usize),
}

impl Objective {
    pub fn evaluate(&self, positions: &[Point], q: &ConvexRegion) -> f64 {
        let mut buf = Vec::new();
        let mut acc = 0.0f64;
        for value in per_car(self, positions, q, &mut buf) {
            acc = match self {
                Objective::SocialMax => acc.max(value),
                _ => acc + value,
            };
        }
        acc
    }

    fn spec(&self) -> PriceSpec {
        match *self {
            Objective::SocialMax | Objective::SumUstar => PriceSpec::USTAR,
            Objective::SumV(n) => PriceSpec::v(n),
            Objective::SumW(n) => PriceSpec::w(n),
        }
    }
}

fn per_car<'a>(
    objective: &Objective,
    positions: &'a [Point],
    q: &'a ConvexRegion,
    buf: &'a mut Vec<f64>,
) -> impl Iterator<Item = f64> + 'a {
    let spec = objective.spec();
    let m = spec.effective_neighborhood(positions.len());
    (0..positions.len()).map(move |u| {
        let at = positions[u];
        let others = positions
            .iter()
            .enumerate()
            .filter(move |&(v, _)| v != u)
            .map(|(_, &p)| p);
        smallest_distances(at, others, m, buf);
        price_from_distances(spec.kind, q.boundary_distance(at), buf).get()
    })
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::SocialMax => f.write_str("social-max"),
            Objective::SumUstar => f.write_str("sum-ustar"),
            Objective::SumV(n) => write!(f, "sum-v:{n}"),
            Objective::SumW(n) => write!(f, "sum-w:{n}"),
        }
    }
}

impl FromStr for Objective {
    type Err = OptimumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || OptimumError::Unknown(s.to_string());
        let lower = s.trim().to_ascii_lowercase().replace('_', "-");
        let (name, n) = match lower.split_once(':') {
            Some((name, n)) => {
                let n: usize = n.parse().map_err(|_| unknown())?;
                if n == 0 {
                    return Err(unknown());
                }
                (name.to_string(), Some(n))
            }
            None => (lower.clone(), None),
        };
        match (name.as_str(), n) {
            ("social-max", None) => Ok(Objective::SocialMax),
            ("sum-ustar", None) => Ok(Objective::SumUstar),
            ("sum-v", n) => Ok(Objective::SumV(n.unwrap_or(1))),
            ("sum-w", n) => Ok(Objective::SumW(n.unwrap_or(1))),
            _ => Err(unknown()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimumResult {
    pub state: FleetState,
    /// Objective value at `state`.
    pub cost: PriceValue,
    pub objective: Objective,
    /// Objective evaluations spent.
    pub search_budget: u64,
}

impl OptimumResult {
    pub fn summary_line(&self) -> String {
        format!(
            "objective={} cost={:.12} k={} evaluations={}",
            self.objective,
            self.cost.get(),
            self.state.len(),
            self.search_budget
        )
    }

    /// Positions in the region file format.
    pub fn positions_text(&self) -> String {
        points_to_text(self.state.positions())
    }
}

/// `i × i` grid on the unit square: cars at `((2a+1)/2i, (2b+1)/2i)`.
pub fn analytic_square_grid(i: usize) -> FleetState {
    assert!(i >= 1, "grid needs i >= 1");
    let step = 1.0 / (2 * i) as f64;
    let mut pts = Vec::with_capacity(i * i);
    for a in 0..i {
        for b in 0..i {
            pts.push(Point::new(
                (2 * a + 1) as f64 * step,
                (2 * b + 1) as f64 * step,
            ));
        }
    }
    FleetState::new(pts).expect("grid points are distinct")
}

/// Social cost of [`analytic_square_grid`]: every safety margin is `1/2i`.
pub fn analytic_square_optimum_cost(i: usize) -> PriceValue {
    assert!(i >= 1, "grid needs i >= 1");
    PriceValue::new(2.0 * i as f64)
}

struct Search<'a> {
    objective: Objective,
    q: &'a ConvexRegion,
    budget: u64,
    evals: u64,
    best: Option<(f64, Vec<Point>)>,
    buf: Vec<f64>,
    values: Vec<f64>,
}

impl Search<'_> {
    /// Returns `(driver, true objective)`, or `None` once the budget is
    /// spent. The driver is the objective itself, except for the max
    /// objective where it is the p-norm of the per-car prices.
    fn eval(&mut self, x: &[Point], exponent: Option<f64>) -> Option<(f64, f64)> {
        if self.evals >= self.budget {
            return None;
        }
        self.evals += 1;
        self.values.clear();
        self.values
            .extend(per_car(&self.objective, x, self.q, &mut self.buf));
        let truth = match self.objective {
            Objective::SocialMax => self.values.iter().copied().fold(0.0, f64::max),
            _ => self.values.iter().sum(),
        };
        let driver = match exponent {
            Some(p) if truth.is_finite() && truth > 0.0 => {
                let s: f64 = self.values.iter().map(|v| (v / truth).powf(p)).sum();
                truth * s.powf(1.0 / p)
            }
            _ => truth,
        };
        if self.best.as_ref().is_none_or(|(b, _)| truth < *b) {
            self.best = Some((truth, x.to_vec()));
        }
        Some((driver, truth))
    }

    /// Per-car 8-direction pattern search. Returns `None` when the budget
    /// ran out.
    fn local_search(
        &mut self,
        x: &mut [Point],
        h0: f64,
        floor: f64,
        exponent: Option<f64>,
    ) -> Option<()> {
        let (mut fx, _) = self.eval(x, exponent)?;
        let mut h = h0;
        let mut twist = 0.0;
        while h >= floor {
            let mut improved = false;
            for u in 0..x.len() {
                let home = x[u];
                for j in 0..8 {
                    let angle = twist + j as f64 * PI / 4.0;
                    let y = home + Point::new(angle.cos(), angle.sin()) * h;
                    if !self.q.contains(y) {
                        continue;
                    }
                    x[u] = y;
                    let (fy, _) = self.eval(x, exponent)?;
                    if fy < fx {
                        fx = fy;
                        improved = true;
                        break;
                    }
                    x[u] = home;
                }
            }
            if !improved {
                h *= 0.5;
                twist += POLL_TWIST;
            }
        }
        Some(())
    }
}

/// Jittered `cols × rows` lattice over the bounding box, falling back to
/// uniform samples for lattice points outside the region.
fn perturbed_lattice(q: &ConvexRegion, k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    let (lo, hi) = q.bounding_box();
    let cw = (hi.x - lo.x) / cols as f64;
    let ch = (hi.y - lo.y) / rows as f64;
    let mut pts = Vec::with_capacity(k);
    for idx in 0..k {
        let (c, r) = (idx % cols, idx / cols);
        let p = Point::new(
            lo.x + (c as f64 + 0.5 + rng.random_range(-0.3..0.3)) * cw,
            lo.y + (r as f64 + 0.5 + rng.random_range(-0.3..0.3)) * ch,
        );
        let ok = q.contains(p) && pts.iter().all(|o: &Point| o.distance(p) > EPS_GEOM);
        pts.push(if ok {
            p
        } else {
            Point::new(f64::NAN, f64::NAN)
        });
    }
    for i in 0..k {
        if !pts[i].is_finite() {
            loop {
                let p = random_state(q, 1, rng).position(0);
                if pts
                    .iter()
                    .all(|o| !o.is_finite() || o.distance(p) > EPS_GEOM)
                {
                    pts[i] = p;
                    break;
                }
            }
        }
    }
    pts
}

/// Best configuration of `k` cars found within `budget` objective
/// evaluations. Starts alternate between a jittered lattice and uniform
/// random placements; the run is a deterministic function of `seed`, and
/// a larger budget only extends it.
pub fn global_search_optimum(
    objective: Objective,
    q: &ConvexRegion,
    k: usize,
    budget: u64,
    seed: u64,
) -> Result<OptimumResult, OptimumError> {
    if budget == 0 {
        return Err(OptimumError::ZeroBudget);
    }
    if k == 0 {
        return Err(OptimumError::EmptyFleet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = q.bounding_box();
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    let floor = STEP_FLOOR * extent;
    let spacing = extent / (k as f64).sqrt().ceil();
    let mut search = Search {
        objective,
        q,
        budget,
        evals: 0,
        best: None,
        buf: Vec::new(),
        values: Vec::with_capacity(k),
    };

    let exponents: Vec<Option<f64>> = match objective {
        Objective::SocialMax => MAX_SURROGATE_EXPONENTS.iter().map(|&p| Some(p)).collect(),
        _ => vec![None],
    };

    'starts: for start in 0u64.. {
        let mut x = if start % 2 == 0 {
            perturbed_lattice(q, k, &mut rng)
        } else {
            random_state(q, k, &mut rng).into_positions()
        };
        let mut h0 = 0.25 * spacing;
        for &p in &exponents {
            if search.local_search(&mut x, h0, floor, p).is_none() {
                break 'starts;
            }
            h0 = 0.02 * spacing;
        }
    }

    let (cost, positions) = search
        .best
        .expect("budget > 0 gives at least one evaluation");
    Ok(OptimumResult {
        state: FleetState::new(positions).expect("searched positions are distinct"),
        cost: PriceValue::new(cost),
        objective,
        search_budget: search.evals,
    })
}

/// Global search on a summed-price objective.
pub fn evaluate_best_possible(
    objective: Objective,
    q: &ConvexRegion,
    k: usize,
    budget: u64,
    seed: u64,
) -> Result<OptimumResult, OptimumError> {
    if objective == Objective::SocialMax {
        return Err(OptimumError::NotSummed(objective));
    }
    global_search_optimum(objective, q, k, budget, seed)
}

/// Social cost of the configuration in a result, whatever objective
/// produced it.
pub fn social_cost_of_result(r: &OptimumResult, q: &ConvexRegion) -> PriceValue {
    PriceValue::new(Objective::SocialMax.evaluate(r.state.positions(), q))
}

/// Reference optimum for comparisons: analytic on the unit square with a
/// square fleet, otherwise the best configuration found by global search.
pub fn reference_optimum(
    q: &ConvexRegion,
    k: usize,
    budget: u64,
    seed: u64,
) -> Result<(PriceValue, bool), OptimumError> {
    if *q == ConvexRegion::unit_square() {
        if let Some(i) = crate::dynamics::integer_sqrt(k) {
            return Ok((analytic_square_optimum_cost(i), true));
        }
    }
    let r = global_search_optimum(Objective::SocialMax, q, k, budget, seed)?;
    Ok((r.cost, false))
}
