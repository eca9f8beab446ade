//! Drop-off pricing for floating car-sharing.
//!
//! A car parked at `x^u` in a convex region `Q` is charged according to how
//! crowded its spot is: the full inconvenience `U*` looks at the distance to
//! the boundary and to the nearest other car, while the neighbourhood prices
//! `V` and `W` only use a handful of nearby parked cars. Drivers respond by
//! moving towards cheaper spots; this crate simulates those dynamics and
//! compares where they end up against the social optimum.
//!
//! - [`geometry`]: distances, clipping, Voronoi cells, inscribed circles.
//! - [`pricing`]: `U*`, `V`, `W`, safety margins and the social cost.
//! - [`dynamics`]: schedules, best-response steps, async/sync simulation.
//! - [`optimum`]: analytic grids and a multi-start global search.
//! - [`trace`]: recorded runs and their CSV form.

pub mod dynamics;
pub mod geometry;
pub mod optimum;
pub mod pricing;
pub mod trace;

pub use dynamics::{
    inner_argmin, is_fixed_point, schedule_next, simulate, simulate_async, simulate_sync, step,
    DynamicsError, InitSpec, Mode, Schedule, ScheduleKind, SimConfig, SolverParams, StepParams,
};
pub use geometry::{
    boundary_distance, contains, point_segment_distance, voronoi_cell, voronoi_partition, Circle,
    ConvexRegion, GeometryError, Point, Segment, EPS_GEOM,
};
pub use optimum::{
    analytic_square_grid, analytic_square_optimum_cost, evaluate_best_possible,
    global_search_optimum, Objective, OptimumError, OptimumResult,
};
pub use pricing::{
    inconvenience_ustar, nearest_neighbor_distances, price, price_from_distances, price_v, price_w,
    safety_margin, social_cost, FleetState, PriceKind, PriceSpec, PriceValue, PricingError,
};
pub use trace::{Moved, Trace, TraceError, TraceRecord};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
