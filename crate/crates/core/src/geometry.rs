//! Planar primitives for convex regions.
//!
//! Everything here is a pure function of its inputs. Polygons are stored
//! counter-clockwise; the interior lies to the left of every edge.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Tolerance (region units) for containment tests and for merging vertices
/// produced by clipping.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not convex at vertex {0}")]
    NotConvex(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("non-finite coordinate in vertex {0}")]
    NonFinite(usize),
    #[error("half-plane normal is zero")]
    ZeroNormal,
    #[error("cars {0} and {1} occupy the same position")]
    CoincidentGenerators(usize, usize),
    #[error("car index {index} out of range for a fleet of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("clipped Voronoi cell of car {0} is empty")]
    EmptyCell(usize),
    #[error("inscribed circle search did not converge")]
    LpFailure,
    #[error("region file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Euclidean distance from `p` to the closest point of `s`.
///
/// The projection parameter is normalised by the squared segment length so
/// that it is dimensionless; a zero-length segment degrades to the point
/// distance.
pub fn point_segment_distance(p: Point, s: Segment) -> f64 {
    let ab = s.b - s.a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(s.a);
    }
    let t = (p - s.a).dot(ab) / len2;
    if t < 0.0 {
        p.distance(s.a)
    } else if t > 1.0 {
        p.distance(s.b)
    } else {
        p.distance(s.a + ab * t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

/// A convex polygon with non-empty interior, vertices counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexRegion {
    vertices: Vec<Point>,
}

impl ConvexRegion {
    /// Validates and normalises a vertex list.
    ///
    /// Clockwise input is reversed. Consecutive duplicates (closer than
    /// [`EPS_GEOM`]) are merged; collinear vertices are kept.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        let mut vertices = dedup_ring(vertices);
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let signed = signed_area(&vertices);
        if signed.abs() <= EPS_GEOM * EPS_GEOM {
            return Err(GeometryError::ZeroArea);
        }
        if signed < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let e0 = vertices[(i + 1) % n] - vertices[i];
            let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            if e0.cross(e1) < -EPS_GEOM * e0.norm() * e1.norm() {
                return Err(GeometryError::NotConvex((i + 1) % n));
            }
        }
        Ok(Self { vertices })
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`; panics on empty extents.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        assert!(x1 > x0 && y1 > y0, "rectangle must have positive extent");
        Self {
            vertices: vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
        }
    }

    /// Parses the region file format (see [`parse_points`]).
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        Self::new(parse_points(text)?)
    }

    /// Serialises into the region file format (17 significant digits).
    pub fn to_region_file(&self) -> String {
        points_to_text(&self.vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let sum = self
            .vertices
            .iter()
            .fold(Point::default(), |acc, &v| acc + v);
        sum * (1.0 / n)
    }

    /// `(min corner, max corner)` of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.edges().all(|e| {
            let d = e.b - e.a;
            let len = d.norm();
            len == 0.0 || d.cross(p - e.a) >= -EPS_GEOM * len
        })
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|e| point_segment_distance(p, e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Keeps the part of the polygon where `(p - through) · normal <= 0`.
    ///
    /// Returns `Ok(None)` when nothing of positive area remains.
    pub fn clip_halfplane(
        &self,
        through: Point,
        normal: Point,
    ) -> Result<Option<ConvexRegion>, GeometryError> {
        let len = normal.norm();
        if len == 0.0 || !len.is_finite() {
            return Err(GeometryError::ZeroNormal);
        }
        let unit = normal * (1.0 / len);
        let side = |p: Point| (p - through).dot(unit);

        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let s = self.vertices[i];
            let e = self.vertices[(i + 1) % n];
            let (ds, de) = (side(s), side(e));
            let s_in = ds <= 0.0;
            let e_in = de <= 0.0;
            if s_in {
                out.push(s);
            }
            if s_in != e_in {
                let t = ds / (ds - de);
                out.push(s + (e - s) * t);
            }
        }
        let out = dedup_ring(out);
        if out.len() < 3 || signed_area(&out) <= EPS_GEOM * EPS_GEOM {
            return Ok(None);
        }
        Ok(Some(ConvexRegion { vertices: out }))
    }

    /// Largest inscribed circle, found by maximising `r` subject to
    /// `n_i · c + r <= n_i · a_i` for every edge with outward unit normal
    /// `n_i`. When the centre is not unique any maximiser is returned.
    pub fn chebyshev_center(&self) -> Result<Circle, GeometryError> {
        let origin = self.centroid();
        let mut rows = Vec::with_capacity(self.vertices.len());
        for e in self.edges() {
            let d = e.b - e.a;
            let len = d.norm();
            if len <= EPS_GEOM {
                continue;
            }
            let n = Point::new(d.y / len, -d.x / len);
            let rhs = n.dot(e.a - origin);
            // c = c⁺ - c⁻ keeps every variable non-negative.
            rows.push(([n.x, -n.x, n.y, -n.y, 1.0], rhs.max(0.0)));
        }
        if rows.len() < 3 {
            return Err(GeometryError::ZeroArea);
        }
        let z = simplex_max(&rows, &[0.0, 0.0, 0.0, 0.0, 1.0]).ok_or(GeometryError::LpFailure)?;
        let center = origin + Point::new(z[0] - z[1], z[2] - z[3]);
        Ok(Circle {
            center,
            radius: z[4].max(0.0),
        })
    }

    /// Image under `p ↦ p·scale + offset` (scale > 0).
    pub fn scaled(&self, scale: f64, offset: Point) -> ConvexRegion {
        assert!(scale > 0.0);
        ConvexRegion {
            vertices: self.vertices.iter().map(|&v| v * scale + offset).collect(),
        }
    }

    /// Image under a rotation by `angle` radians about the origin followed by
    /// a translation.
    pub fn rigid_motion(&self, angle: f64, offset: Point) -> ConvexRegion {
        ConvexRegion {
            vertices: self
                .vertices
                .iter()
                .map(|&v| rotate(v, angle) + offset)
                .collect(),
        }
    }
}

pub fn rotate(p: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    Point::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

pub fn boundary_distance(p: Point, q: &ConvexRegion) -> f64 {
    q.boundary_distance(p)
}

pub fn contains(q: &ConvexRegion, p: Point) -> bool {
    q.contains(p)
}

/// Clipped Voronoi cell of generator `u`: the part of `q` closer to
/// `positions[u]` than to any other generator.
pub fn voronoi_cell(
    positions: &[Point],
    u: usize,
    q: &ConvexRegion,
) -> Result<ConvexRegion, GeometryError> {
    let own = *positions.get(u).ok_or(GeometryError::IndexOutOfRange {
        index: u,
        len: positions.len(),
    })?;
    for (v, &other) in positions.iter().enumerate() {
        if v != u && other.distance(own) <= EPS_GEOM {
            return Err(GeometryError::CoincidentGenerators(u.min(v), u.max(v)));
        }
    }
    let mut cell = q.clone();
    for (v, &other) in positions.iter().enumerate() {
        if v == u {
            continue;
        }
        let mid = (own + other) * 0.5;
        cell = cell
            .clip_halfplane(mid, other - own)?
            .ok_or(GeometryError::EmptyCell(u))?;
    }
    Ok(cell)
}

/// All clipped Voronoi cells, indexed like `positions`.
pub fn voronoi_partition(
    positions: &[Point],
    q: &ConvexRegion,
) -> Result<Vec<ConvexRegion>, GeometryError> {
    (0..positions.len())
        .map(|u| voronoi_cell(positions, u, q))
        .collect()
}

/// Reads one `x y` pair per line; blank lines and `#` comments are ignored.
pub fn parse_points(text: &str) -> Result<Vec<Point>, GeometryError> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GeometryError::Parse {
                line: idx + 1,
                msg: format!("expected two numbers, found {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| GeometryError::Parse {
                line: idx + 1,
                msg: format!("{s:?}: {e}"),
            })
        };
        points.push(Point::new(parse(fields[0])?, parse(fields[1])?));
    }
    Ok(points)
}

/// Writes one `x y` pair per line with 17 significant digits.
pub fn points_to_text(points: &[Point]) -> String {
    let mut s = String::new();
    for p in points {
        s.push_str(&format!("{:.16e} {:.16e}\n", p.x, p.y));
    }
    s
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum();
    0.5 * twice
}

fn dedup_ring(mut pts: Vec<Point>) -> Vec<Point> {
    pts.dedup_by(|b, a| a.distance(*b) <= EPS_GEOM);
    while pts.len() > 1 && pts[0].distance(pts[pts.len() - 1]) <= EPS_GEOM {
        pts.pop();
    }
    pts
}

/// Maximises `objective · z` subject to `row · z <= rhs`, `z >= 0`, for
/// `rhs >= 0` (the origin is feasible). Dense tableau with Bland's rule.
fn simplex_max(rows: &[([f64; 5], f64)], objective: &[f64; 5]) -> Option<[f64; 5]> {
    const NV: usize = 5;
    const PIVOT_EPS: f64 = 1e-12;
    let m = rows.len();
    let width = NV + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for (i, (coef, rhs)) in rows.iter().enumerate() {
        t[i][..NV].copy_from_slice(coef);
        t[i][NV + i] = 1.0;
        t[i][width - 1] = *rhs;
    }
    for j in 0..NV {
        t[m][j] = -objective[j];
    }
    let mut basis: Vec<usize> = (NV..NV + m).collect();

    for _ in 0..10_000 {
        let Some(enter) = (0..width - 1).find(|&j| t[m][j] < -PIVOT_EPS) else {
            let mut z = [0.0; NV];
            for (i, &b) in basis.iter().enumerate() {
                if b < NV {
                    z[b] = t[i][width - 1];
                }
            }
            return Some(z);
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i][enter];
            if a > PIVOT_EPS {
                let ratio = t[i][width - 1] / a;
                match leave {
                    Some((li, lr))
                        if ratio > lr + PIVOT_EPS
                            || ((ratio - lr).abs() <= PIVOT_EPS && basis[i] > basis[li]) => {}
                    _ => leave = Some((i, ratio)),
                }
            }
        }
        let (row, _) = leave?;
        let pivot = t[row][enter];
        for v in t[row].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[row].clone();
        for (i, r) in t.iter_mut().enumerate() {
            let f = r[enter];
            if i != row && f != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        basis[row] = enter;
    }
    None
}
