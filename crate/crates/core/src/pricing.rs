//! Inconvenience, neighbourhood prices and social cost.
//!
//! All prices are reciprocals of a length, so a car sitting on the boundary
//! or on top of another car is priced at `+inf`. That value is an ordinary
//! [`PriceValue`], not an error: the dynamics must be able to evaluate such
//! positions and move away from them.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{ConvexRegion, Point, EPS_GEOM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("a fleet needs at least one car")]
    EmptyFleet,
    #[error("car {0} has a non-finite position")]
    NonFinite(usize),
    #[error("cars {0} and {1} occupy the same position")]
    Coincident(usize, usize),
    #[error("car {0} lies outside the region")]
    Outside(usize),
    #[error("car index {index} out of range for a fleet of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("neighbourhood size {m} must lie in 1..={max}")]
    NeighborhoodOutOfRange { m: usize, max: usize },
    #[error("unknown price {0:?} (expected ustar, v[:N] or w[:N])")]
    UnknownPrice(String),
}

/// Positions of the `k` cars; index `u` is the car's identity.
#[derive(Clone, Debug, PartialEq)]
pub struct FleetState {
    positions: Vec<Point>,
}

impl FleetState {
    /// Requires a non-empty fleet of finite, pairwise distinct positions.
    pub fn new(positions: Vec<Point>) -> Result<Self, PricingError> {
        if positions.is_empty() {
            return Err(PricingError::EmptyFleet);
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(PricingError::NonFinite(i));
        }
        if let Some((u, v)) = first_coincident_pair(&positions) {
            return Err(PricingError::Coincident(u, v));
        }
        Ok(Self { positions })
    }

    /// Like [`FleetState::new`] but additionally requires every car to be
    /// inside `q`.
    pub fn new_in(positions: Vec<Point>, q: &ConvexRegion) -> Result<Self, PricingError> {
        let state = Self::new(positions)?;
        state.check_inside(q)?;
        Ok(state)
    }

    pub fn check_inside(&self, q: &ConvexRegion) -> Result<(), PricingError> {
        match self.positions.iter().position(|&p| !q.contains(p)) {
            Some(u) => Err(PricingError::Outside(u)),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, u: usize) -> Point {
        self.positions[u]
    }

    pub fn into_positions(self) -> Vec<Point> {
        self.positions
    }

    /// Moves car `u`, re-checking distinctness against the other cars.
    pub fn with_moved(&self, u: usize, to: Point) -> Result<Self, PricingError> {
        self.check_index(u)?;
        if !to.is_finite() {
            return Err(PricingError::NonFinite(u));
        }
        if let Some(v) = self
            .positions
            .iter()
            .enumerate()
            .position(|(v, p)| v != u && p.distance(to) <= EPS_GEOM)
        {
            return Err(PricingError::Coincident(u.min(v), u.max(v)));
        }
        let mut positions = self.positions.clone();
        positions[u] = to;
        Ok(Self { positions })
    }

    pub(crate) fn check_index(&self, u: usize) -> Result<(), PricingError> {
        if u < self.positions.len() {
            Ok(())
        } else {
            Err(PricingError::IndexOutOfRange {
                index: u,
                len: self.positions.len(),
            })
        }
    }
}

pub(crate) fn first_coincident_pair(positions: &[Point]) -> Option<(usize, usize)> {
    for u in 0..positions.len() {
        for v in u + 1..positions.len() {
            if positions[u].distance(positions[v]) <= EPS_GEOM {
                return Some((u, v));
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PriceKind {
    /// Full inconvenience `max{1/b, 2/d₁}`; needs only the nearest car.
    UstarLocal,
    /// `1 / min{b/2, min D}`.
    V,
    /// `1 / (b/2 + Σ D)`.
    W,
}

/// Which price governs drivers, and how many parked neighbours it consults.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PriceSpec {
    pub kind: PriceKind,
    pub neighborhood: usize,
}

impl PriceSpec {
    pub const USTAR: PriceSpec = PriceSpec {
        kind: PriceKind::UstarLocal,
        neighborhood: 1,
    };

    pub fn v(neighborhood: usize) -> Self {
        Self {
            kind: PriceKind::V,
            neighborhood: neighborhood.max(1),
        }
    }

    pub fn w(neighborhood: usize) -> Self {
        Self {
            kind: PriceKind::W,
            neighborhood: neighborhood.max(1),
        }
    }

    /// Neighbourhood actually used for a fleet of `k` cars.
    pub fn effective_neighborhood(&self, k: usize) -> usize {
        match self.kind {
            PriceKind::UstarLocal => 1.min(k.saturating_sub(1)),
            PriceKind::V | PriceKind::W => self.neighborhood.min(k.saturating_sub(1)),
        }
    }

    /// True when the configured neighbourhood exceeds `k - 1`.
    pub fn is_clamped(&self, k: usize) -> bool {
        self.kind != PriceKind::UstarLocal && self.neighborhood > k.saturating_sub(1)
    }
}

impl fmt::Display for PriceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PriceKind::UstarLocal => write!(f, "ustar"),
            PriceKind::V => write!(f, "v:{}", self.neighborhood),
            PriceKind::W => write!(f, "w:{}", self.neighborhood),
        }
    }
}

impl FromStr for PriceSpec {
    type Err = PricingError;

    /// Accepts `ustar`, `v`, `w`, `v:N`, `w:N` (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PricingError::UnknownPrice(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (name, n) = match lower.split_once(':') {
            Some((name, n)) => (name, Some(n.parse::<usize>().map_err(|_| bad())?)),
            None => (lower.as_str(), None),
        };
        if n == Some(0) {
            return Err(bad());
        }
        match name {
            "ustar" | "ustar_local" | "u*" if n.is_none() => Ok(PriceSpec::USTAR),
            "v" => Ok(PriceSpec::v(n.unwrap_or(1))),
            "w" => Ok(PriceSpec::w(n.unwrap_or(1))),
            _ => Err(bad()),
        }
    }
}

/// A price in units of 1/length; strictly positive, possibly `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PriceValue(f64);

impl PriceValue {
    pub const INFINITY: PriceValue = PriceValue(f64::INFINITY);

    pub fn new(value: f64) -> Self {
        debug_assert!(value >= 0.0, "price {value}");
        Self(value)
    }

    /// Reciprocal of a non-negative length; zero length gives `+inf`.
    pub fn reciprocal(length: f64) -> Self {
        Self(1.0 / length)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for PriceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Evaluates a price from the only data a driver observes: one boundary
/// distance and the ascending distances to the nearest parked cars.
pub fn price_from_distances(kind: PriceKind, boundary: f64, neighbors: &[f64]) -> PriceValue {
    let nearest = neighbors.first().copied().unwrap_or(f64::INFINITY);
    match kind {
        PriceKind::UstarLocal => PriceValue((1.0 / boundary).max(2.0 / nearest)),
        PriceKind::V => PriceValue::reciprocal((0.5 * boundary).min(nearest)),
        PriceKind::W => PriceValue::reciprocal(0.5 * boundary + neighbors.iter().sum::<f64>()),
    }
}

/// The `m` smallest distances from `at` to `others`, ascending.
pub(crate) fn smallest_distances(
    at: Point,
    others: impl Iterator<Item = Point>,
    m: usize,
    buf: &mut Vec<f64>,
) {
    buf.clear();
    if m == 0 {
        return;
    }
    for p in others {
        let d = at.distance(p);
        if buf.len() < m {
            let pos = buf.partition_point(|&x| x <= d);
            buf.insert(pos, d);
        } else if d < buf[m - 1] {
            buf.pop();
            let pos = buf.partition_point(|&x| x <= d);
            buf.insert(pos, d);
        }
    }
}

pub fn nearest_neighbor_distances(
    state: &FleetState,
    u: usize,
    m: usize,
) -> Result<Vec<f64>, PricingError> {
    state.check_index(u)?;
    let max = state.len() - 1;
    if m == 0 || m > max {
        return Err(PricingError::NeighborhoodOutOfRange { m, max });
    }
    let mut out = Vec::with_capacity(m);
    smallest_distances(state.position(u), others(state, u), m, &mut out);
    Ok(out)
}

fn others(state: &FleetState, u: usize) -> impl Iterator<Item = Point> + '_ {
    state
        .positions()
        .iter()
        .enumerate()
        .filter(move |&(v, _)| v != u)
        .map(|(_, &p)| p)
}

/// Price car `u` would pay if it parked at `at`, all other cars unchanged.
pub fn price_at(
    spec: PriceSpec,
    state: &FleetState,
    u: usize,
    at: Point,
    q: &ConvexRegion,
) -> PriceValue {
    let mut buf = Vec::new();
    price_at_with(spec, state, u, at, q, &mut buf)
}

pub(crate) fn price_at_with(
    spec: PriceSpec,
    state: &FleetState,
    u: usize,
    at: Point,
    q: &ConvexRegion,
    buf: &mut Vec<f64>,
) -> PriceValue {
    let m = spec.effective_neighborhood(state.len());
    smallest_distances(at, others(state, u), m, buf);
    price_from_distances(spec.kind, q.boundary_distance(at), buf)
}

/// `max{1/b(x^u), 2/min_v |x^u - x^v|}`; the pairwise term is 0 for a lone
/// car.
pub fn inconvenience_ustar(
    state: &FleetState,
    u: usize,
    q: &ConvexRegion,
) -> Result<PriceValue, PricingError> {
    state.check_index(u)?;
    Ok(price_at(PriceSpec::USTAR, state, u, state.position(u), q))
}

/// `min{b(x^u), ½ min_v |x^u - x^v|}`, the reciprocal of the inconvenience.
pub fn safety_margin(state: &FleetState, u: usize, q: &ConvexRegion) -> Result<f64, PricingError> {
    state.check_index(u)?;
    let at = state.position(u);
    let nearest = others(state, u)
        .map(|p| at.distance(p))
        .fold(f64::INFINITY, f64::min);
    Ok(q.boundary_distance(at).min(0.5 * nearest))
}

pub fn price_v(
    state: &FleetState,
    u: usize,
    q: &ConvexRegion,
    neighborhood: usize,
) -> Result<PriceValue, PricingError> {
    state.check_index(u)?;
    Ok(price_at(
        PriceSpec::v(neighborhood),
        state,
        u,
        state.position(u),
        q,
    ))
}

pub fn price_w(
    state: &FleetState,
    u: usize,
    q: &ConvexRegion,
    neighborhood: usize,
) -> Result<PriceValue, PricingError> {
    state.check_index(u)?;
    Ok(price_at(
        PriceSpec::w(neighborhood),
        state,
        u,
        state.position(u),
        q,
    ))
}

pub fn price(
    spec: PriceSpec,
    state: &FleetState,
    u: usize,
    q: &ConvexRegion,
) -> Result<PriceValue, PricingError> {
    state.check_index(u)?;
    Ok(price_at(spec, state, u, state.position(u), q))
}

/// Worst inconvenience over the fleet.
pub fn social_cost(state: &FleetState, q: &ConvexRegion) -> PriceValue {
    social_cost_of(state.positions(), q)
}

/// [`social_cost`] on a raw position slice; used by the search loops.
pub fn social_cost_of(positions: &[Point], q: &ConvexRegion) -> PriceValue {
    let mut worst = 0.0f64;
    for (u, &p) in positions.iter().enumerate() {
        let nearest = positions
            .iter()
            .enumerate()
            .filter(|&(v, _)| v != u)
            .map(|(_, &o)| p.distance(o))
            .fold(f64::INFINITY, f64::min);
        let ustar = (1.0 / q.boundary_distance(p)).max(2.0 / nearest);
        worst = worst.max(ustar);
    }
    PriceValue(worst)
}
