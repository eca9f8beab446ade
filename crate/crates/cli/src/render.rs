//! SVG pictures of a run: the region, every car's path (initial positions
//! black, intermediate red, final blue), the final clipped Voronoi
//! partition in blue and each cell's largest inscribed circle in black.

use std::fmt::Write;

use dropfee::{voronoi_partition, Circle, ConvexRegion, Point, TraceRecord};

use crate::error::CliError;

/// Intermediate positions beyond this count are drawn only as paths.
const MAX_INTERMEDIATE_DOTS: usize = 20_000;
const CANVAS: f64 = 600.0;
const MARGIN: f64 = 20.0;

/// Everything drawn, in region coordinates.
#[derive(Clone, Debug)]
pub struct RenderModel {
    pub region: ConvexRegion,
    pub initial: Vec<Point>,
    /// Per car, the positions strictly between the first and last snapshot.
    pub intermediate: Vec<Vec<Point>>,
    pub final_positions: Vec<Point>,
    pub cells: Vec<ConvexRegion>,
    pub circles: Vec<Circle>,
}

impl RenderModel {
    pub fn from_records(records: &[TraceRecord], region: &ConvexRegion) -> Result<Self, CliError> {
        let (first, last) = match (records.first(), records.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(CliError::Failed("trace has no snapshots".into())),
        };
        let k = first.positions.len();
        if records.iter().any(|r| r.positions.len() != k) {
            return Err(CliError::Failed(
                "snapshots disagree on the fleet size".into(),
            ));
        }
        let mut intermediate = vec![Vec::new(); k];
        if records.len() > 2 {
            for r in &records[1..records.len() - 1] {
                for (path, &p) in intermediate.iter_mut().zip(&r.positions) {
                    path.push(p);
                }
            }
        }
        let cells = voronoi_partition(&last.positions, region)
            .map_err(|e| CliError::Degenerate(e.to_string()))?;
        let circles = cells
            .iter()
            .map(ConvexRegion::chebyshev_center)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Failed(e.to_string()))?;
        Ok(Self {
            region: region.clone(),
            initial: first.positions.clone(),
            intermediate,
            final_positions: last.positions.clone(),
            cells,
            circles,
        })
    }

    pub fn to_svg(&self) -> String {
        let (lo, hi) = self.region.bounding_box();
        let scale = (CANVAS - 2.0 * MARGIN) / (hi.x - lo.x).max(hi.y - lo.y);
        let width = (hi.x - lo.x) * scale + 2.0 * MARGIN;
        let height = (hi.y - lo.y) * scale + 2.0 * MARGIN;
        let px = |p: Point| ((p.x - lo.x) * scale + MARGIN, (hi.y - p.y) * scale + MARGIN);
        let poly = |q: &ConvexRegion| {
            q.vertices()
                .iter()
                .map(|&v| {
                    let (x, y) = px(v);
                    format!("{x:.3},{y:.3}")
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let dot = (CANVAS / 150.0).clamp(1.5, 4.0);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.3} {height:.3}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<polygon id="region" points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            poly(&self.region)
        );

        let _ = writeln!(
            s,
            r#"<g id="voronoi" fill="none" stroke="blue" stroke-width="1">"#
        );
        for (u, c) in self.cells.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<polygon class="cell" data-car="{u}" points="{}"/>"#,
                poly(c)
            );
        }
        let _ = writeln!(s, "</g>");

        let _ = writeln!(
            s,
            r#"<g id="circles" fill="none" stroke="black" stroke-width="1">"#
        );
        for (u, c) in self.circles.iter().enumerate() {
            let (x, y) = px(c.center);
            let _ = writeln!(
                s,
                r#"<circle class="inscribed" data-car="{u}" cx="{x:.3}" cy="{y:.3}" r="{:.3}"/>"#,
                c.radius * scale
            );
        }
        let _ = writeln!(s, "</g>");

        let _ = writeln!(
            s,
            r#"<g id="paths" fill="none" stroke="red" stroke-width="0.75">"#
        );
        for ((a, mid), b) in self
            .initial
            .iter()
            .zip(&self.intermediate)
            .zip(&self.final_positions)
        {
            let pts: Vec<String> = std::iter::once(a)
                .chain(mid)
                .chain(std::iter::once(b))
                .map(|&p| {
                    let (x, y) = px(p);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(s, r#"<polyline points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, "</g>");

        let total: usize = self.intermediate.iter().map(Vec::len).sum();
        let _ = writeln!(s, r#"<g id="intermediate" fill="red">"#);
        if total <= MAX_INTERMEDIATE_DOTS {
            for &p in self.intermediate.iter().flatten() {
                let (x, y) = px(p);
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.3}" cy="{y:.3}" r="{:.2}"/>"#,
                    0.5 * dot
                );
            }
        }
        let _ = writeln!(s, "</g>");

        for (id, color, pts) in [
            ("initial", "black", &self.initial),
            ("final", "blue", &self.final_positions),
        ] {
            let _ = writeln!(s, r#"<g id="{id}" fill="{color}">"#);
            for &p in pts {
                let (x, y) = px(p);
                let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{dot:.2}"/>"#);
            }
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}
