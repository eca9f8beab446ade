//! Position histories and their CSV encoding.
//!
//! One CSV row per car per recorded step, columns
//! `n,moved_car,car_id,x,y,social_cost`. `moved_car` is the 0-based index
//! of the car that moved at step `n`, `all` for a synchronous round, and `-`
//! for the initial snapshot. Floats carry 17 significant digits so that
//! reading a trace back yields bit-identical values.

use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

use crate::geometry::Point;

pub const CSV_HEADER: [&str; 6] = ["n", "moved_car", "car_id", "x", "y", "social_cost"];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace row {row}: {msg}")]
    Malformed { row: usize, msg: String },
    #[error("trace is empty")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moved {
    Initial,
    Car(usize),
    All,
}

impl fmt::Display for Moved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Moved::Initial => f.write_str("-"),
            Moved::Car(u) => write!(f, "{u}"),
            Moved::All => f.write_str("all"),
        }
    }
}

impl std::str::FromStr for Moved {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "-" => Ok(Moved::Initial),
            "all" => Ok(Moved::All),
            _ => s
                .parse()
                .map(Moved::Car)
                .map_err(|_| format!("bad moved_car {s:?}")),
        }
    }
}

/// Snapshot after step `n` (n = 0 is the initial state).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub n: u64,
    pub moved: Moved,
    pub positions: Vec<Point>,
    pub social_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// The run stopped because no car wanted to move any more.
    pub fixed_point: bool,
    /// Steps (asynchronous) or rounds (synchronous) actually executed.
    pub steps_run: u64,
}

impl Trace {
    pub fn initial(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_cost(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.social_cost)
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let n = r.n.to_string();
        let moved = r.moved.to_string();
        let cost = fmt_f64(r.social_cost);
        for (id, p) in r.positions.iter().enumerate() {
            w.write_record([
                n.as_str(),
                moved.as_str(),
                &id.to_string(),
                &fmt_f64(p.x),
                &fmt_f64(p.y),
                cost.as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ascii")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(TraceError::Malformed {
            row: 0,
            msg: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut records: Vec<TraceRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |msg: String| TraceError::Malformed { row: i + 1, msg };
        let field = |j: usize| {
            row.get(j)
                .ok_or_else(|| bad(format!("missing column {}", CSV_HEADER[j])))
        };
        let n: u64 = field(0)?.parse().map_err(|e| bad(format!("n: {e}")))?;
        let moved: Moved = field(1)?.parse().map_err(bad)?;
        let id: usize = field(2)?.parse().map_err(|e| bad(format!("car_id: {e}")))?;
        let x: f64 = field(3)?.parse().map_err(|e| bad(format!("x: {e}")))?;
        let y: f64 = field(4)?.parse().map_err(|e| bad(format!("y: {e}")))?;
        let cost: f64 = field(5)?
            .parse()
            .map_err(|e| bad(format!("social_cost: {e}")))?;

        let continues = matches!(records.last(), Some(last) if last.n == n);
        if continues {
            let last = records.last_mut().expect("checked above");
            if last.moved != moved {
                return Err(bad(format!("moved_car changes within step {n}")));
            }
            if id != last.positions.len() {
                return Err(bad(format!("car_id {id} out of order")));
            }
            last.positions.push(Point::new(x, y));
        } else {
            if id != 0 {
                return Err(bad(format!("step {n} does not start at car 0")));
            }
            if let Some(last) = records.last() {
                if n < last.n {
                    return Err(bad(format!("step index {n} does not increase")));
                }
            }
            records.push(TraceRecord {
                n,
                moved,
                positions: vec![Point::new(x, y)],
                social_cost: cost,
            });
        }
    }
    if records.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Vec<TraceRecord> {
        vec![
            TraceRecord {
                n: 0,
                moved: Moved::Initial,
                positions: vec![Point::new(0.1, 0.2), Point::new(0.7, 0.3)],
                social_cost: 10.0,
            },
            TraceRecord {
                n: 1,
                moved: Moved::Car(1),
                positions: vec![Point::new(0.1, 0.2), Point::new(0.65, 0.3)],
                social_cost: f64::INFINITY,
            },
        ]
    }

    #[test]
    fn header_and_layout() {
        let text = to_csv_string(&sample());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,moved_car,car_id,x,y,social_cost"));
        assert!(lines.next().unwrap().starts_with("0,-,0,"));
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains(",1,1,"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes()),
            Err(TraceError::Malformed { .. })
        ));
        let only_header = "n,moved_car,car_id,x,y,social_cost\n";
        assert!(matches!(
            read_csv(only_header.as_bytes()),
            Err(TraceError::Empty)
        ));
        let skipped = format!("{only_header}0,-,1,0.5,0.5,2\n");
        assert!(read_csv(skipped.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            rows in prop::collection::vec(
                (prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3), 0.0f64..1e6, 0usize..3),
                1..6,
            )
        ) {
            let records: Vec<TraceRecord> = rows
                .into_iter()
                .enumerate()
                .map(|(i, (pts, cost, mover))| TraceRecord {
                    n: i as u64,
                    moved: if i == 0 { Moved::Initial } else if mover == 2 { Moved::All } else { Moved::Car(mover) },
                    positions: pts.into_iter().map(|(x, y)| Point::new(x, y)).collect(),
                    social_cost: cost,
                })
                .collect();
            let text = to_csv_string(&records);
            let back = read_csv(text.as_bytes()).unwrap();
            prop_assert_eq!(back, records);
        }
    }
}
