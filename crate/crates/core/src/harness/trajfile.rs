//! Trajectory files.
//!
//! CSV layout, byte for byte:
//!
//! ```text
//! # ionpair-grover trajectory
//! # version = 0.1.0
//! # q = 2
//! # marked = 11
//! # scheme = paper
//! iteration,basis,bitstring,probability
//! 0,0,00,2.5e-1
//! 0,1,01,2.5e-1
//! ...
//! ```
//!
//! Header lines start with `# ` and hold `key = value` pairs after the title
//! line. Rows are sorted by `(iteration, basis)`, every iteration lists all
//! `2^q` basis states, and probabilities use Rust's shortest round-trip
//! exponent formatting (`{:e}`). The JSON mirror serialises the same
//! [`TrajectoryFile`] with serde.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::{Record, Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::gates::{bitstring, TargetIndex};
use crate::TOOL_VERSION;

/// Allowed deviation of each iteration's probabilities from summing to one.
pub const SUM_TOL: f64 = 1e-9;

const TITLE: &str = "# ionpair-grover trajectory";
const COLUMNS: &str = "iteration,basis,bitstring,probability";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub q: u32,
    pub marked: String,
    pub scheme: Scheme,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub iteration: usize,
    pub basis: usize,
    pub bitstring: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub header: Header,
    pub rows: Vec<Row>,
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let header = Header {
            q: traj.q,
            marked: traj.marked.bitstring(),
            scheme: traj.scheme,
            version: TOOL_VERSION.to_string(),
        };
        let rows = traj
            .records
            .iter()
            .flat_map(|r| {
                r.probabilities.iter().enumerate().map(move |(basis, &probability)| Row {
                    iteration: r.iteration,
                    basis,
                    bitstring: bitstring(basis, traj.q),
                    probability,
                })
            })
            .collect();
        TrajectoryFile { header, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let h = &self.header;
        writeln!(s, "{TITLE}").unwrap();
        writeln!(s, "# version = {}", h.version).unwrap();
        writeln!(s, "# q = {}", h.q).unwrap();
        writeln!(s, "# marked = {}", h.marked).unwrap();
        writeln!(s, "# scheme = {}", h.scheme.as_str()).unwrap();
        writeln!(s, "{COLUMNS}").unwrap();
        for r in &self.rows {
            writeln!(s, "{},{},{},{:e}", r.iteration, r.basis, r.bitstring, r.probability).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serialises") + "\n"
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(TITLE) {
            return Err(Error::Parse("missing trajectory title line".into()));
        }
        let (mut q, mut marked, mut scheme, mut version) = (None, None, None, None);
        let mut body_start = TITLE.len() + 1;
        for line in lines.by_ref() {
            body_start += line.len() + 1;
            let Some(kv) = line.strip_prefix("# ") else {
                if line == COLUMNS {
                    break;
                }
                return Err(Error::Parse(format!("unexpected line before column header: {line:?}")));
            };
            let (k, v) = kv.split_once(" = ").ok_or_else(|| Error::Parse(format!("malformed header line {line:?}")))?;
            match k {
                "q" => q = Some(v.parse::<u32>().map_err(|e| Error::Parse(format!("q: {e}")))?),
                "marked" => marked = Some(v.to_string()),
                "scheme" => scheme = Some(v.parse::<Scheme>()?),
                "version" => version = Some(v.to_string()),
                other => return Err(Error::Parse(format!("unknown header key {other:?}"))),
            }
        }
        let header = Header {
            q: q.ok_or_else(|| Error::Parse("header lacks q".into()))?,
            marked: marked.ok_or_else(|| Error::Parse("header lacks marked".into()))?,
            scheme: scheme.ok_or_else(|| Error::Parse("header lacks scheme".into()))?,
            version: version.ok_or_else(|| Error::Parse("header lacks version".into()))?,
        };
        let body = text.get(body_start.min(text.len())..).unwrap_or("");
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
        let mut rows = Vec::new();
        for rec in reader.deserialize::<(usize, usize, String, f64)>() {
            let (iteration, basis, bitstring, probability) = rec.map_err(|e| Error::Parse(e.to_string()))?;
            rows.push(Row { iteration, basis, bitstring, probability });
        }
        let file = TrajectoryFile { header, rows };
        file.validate()?;
        Ok(file)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    /// Checks the layout invariants: header consistency, sorted complete
    /// iterations and per-iteration sums within [`SUM_TOL`].
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        let marked = TargetIndex::from_bitstring(&h.marked)?;
        if marked.q() != h.q {
            return Err(Error::Parse(format!("marked {:?} is not a {}-qubit state", h.marked, h.q)));
        }
        let n = 1usize << h.q;
        if self.rows.len() % n != 0 || self.rows.is_empty() {
            return Err(Error::Parse(format!("{} rows is not a positive multiple of {n}", self.rows.len())));
        }
        for (it, chunk) in self.rows.chunks(n).enumerate() {
            let mut sum = 0.0;
            for (basis, row) in chunk.iter().enumerate() {
                if row.iteration != it || row.basis != basis {
                    return Err(Error::Parse(format!(
                        "row ({}, {}) out of order, expected ({it}, {basis})",
                        row.iteration, row.basis
                    )));
                }
                if row.bitstring != bitstring(basis, h.q) {
                    return Err(Error::Parse(format!("bitstring {:?} does not match basis {basis}", row.bitstring)));
                }
                if !(row.probability.is_finite() && row.probability >= 0.0) {
                    return Err(Error::Parse(format!("invalid probability {}", row.probability)));
                }
                sum += row.probability;
            }
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::Parse(format!("iteration {it} probabilities sum to {sum}")));
            }
        }
        Ok(())
    }

    /// Rebuilds the in-memory trajectory.
    pub fn to_trajectory(&self) -> Result<Trajectory> {
        self.validate()?;
        let n = 1usize << self.header.q;
        Ok(Trajectory {
            q: self.header.q,
            marked: TargetIndex::from_bitstring(&self.header.marked)?,
            scheme: self.header.scheme,
            records: self
                .rows
                .chunks(n)
                .enumerate()
                .map(|(iteration, c)| Record { iteration, probabilities: c.iter().map(|r| r.probability).collect() })
                .collect(),
        })
    }

    pub fn iterations(&self) -> usize {
        self.rows.len() >> self.header.q
    }
}
