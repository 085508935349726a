//! System and schedule files, heatmap and surface CSVs.
//!
//! Floats are written in shortest round-trip form and parsed with
//! `float_roundtrip`, so a save/load cycle reproduces every bit.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use actsched_core::{LtiSystem, Schedule};
use nalgebra::DMatrix;
use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};

/// Row-major matrix whose rows must all have the same length.
///
/// The length check runs inside the deserializer so that a ragged row is
/// reported at its position in the file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Rows(pub Vec<Vec<f64>>);

impl Rows {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Rows(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let cols = self.0.first().map_or(0, Vec::len);
        DMatrix::from_fn(self.0.len(), cols, |r, c| self.0[r][c])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.0.len(), self.0.first().map_or(0, Vec::len))
    }
}

impl<'de> Deserialize<'de> for Rows {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RowsVisitor;

        impl<'de> Visitor<'de> for RowsVisitor {
            type Value = Rows;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of equally long rows of numbers")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Rows, A::Error> {
                let mut rows: Vec<Vec<f64>> = Vec::new();
                while let Some(row) = seq.next_element::<Vec<f64>>()? {
                    if let Some(first) = rows.first() {
                        if row.len() != first.len() {
                            return Err(de::Error::custom(format!(
                                "ragged matrix: row {} has {} entries, row 0 has {}",
                                rows.len(),
                                row.len(),
                                first.len()
                            )));
                        }
                    }
                    rows.push(row);
                }
                Ok(Rows(rows))
            }
        }

        deserializer.deserialize_seq(RowsVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
}

impl SystemFile {
    pub fn from_system(sys: &LtiSystem, name: Option<String>) -> Self {
        SystemFile {
            name,
            a: Rows::from_matrix(sys.a()),
            b: Rows::from_matrix(sys.b()),
        }
    }

    pub fn to_system(&self, origin: &str) -> CliResult<LtiSystem> {
        let (ar, ac) = self.a.shape();
        let (br, bc) = self.b.shape();
        if ar == 0 || ar != ac {
            return Err(CliError::Dimension {
                origin: origin.into(),
                expected: "a non-empty square A".into(),
                found: format!("A of shape {ar}x{ac}"),
            });
        }
        if br != ar || bc == 0 {
            return Err(CliError::Dimension {
                origin: origin.into(),
                expected: format!("B with {ar} rows and at least one column"),
                found: format!("B of shape {br}x{bc}"),
            });
        }
        Ok(LtiSystem::new(self.a.to_matrix(), self.b.to_matrix())?)
    }
}

fn parse_error(origin: &str, e: serde_json::Error) -> CliError {
    CliError::Parse {
        origin: origin.into(),
        line: e.line(),
        column: e.column(),
        message: e
            .to_string()
            .trim_end_matches(&format!(" at line {} column {}", e.line(), e.column()))
            .to_string(),
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn parse_system(text: &str, origin: &str) -> CliResult<(LtiSystem, Option<String>)> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
    Ok((file.to_system(origin)?, file.name))
}

pub fn load_system(path: &Path) -> CliResult<(LtiSystem, Option<String>)> {
    parse_system(&read(path)?, &path.display().to_string())
}

pub fn save_system(path: &Path, sys: &LtiSystem, name: Option<String>) -> CliResult<()> {
    write_json(path, &SystemFile::from_system(sys, name))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub t: usize,
    pub m: usize,
    /// `m` rows of `t` scalings.
    pub s: Rows,
    pub d_avg: f64,
    pub algo: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ScheduleFile {
    pub fn new(schedule: &Schedule, algo: &str, params: BTreeMap<String, serde_json::Value>, seed: Option<u64>) -> Self {
        ScheduleFile {
            t: schedule.horizon(),
            m: schedule.inputs(),
            s: Rows::from_matrix(schedule.scalings()),
            d_avg: schedule.average_active(),
            algo: algo.into(),
            params,
            seed,
        }
    }

    pub fn to_schedule(&self, origin: &str) -> CliResult<Schedule> {
        let (r, c) = self.s.shape();
        if (r, c) != (self.m, self.t) {
            return Err(CliError::Dimension {
                origin: origin.into(),
                expected: format!("an {}x{} grid s", self.m, self.t),
                found: format!("{r}x{c}"),
            });
        }
        Ok(Schedule::new(self.s.to_matrix())?)
    }
}

pub fn parse_schedule(text: &str, origin: &str) -> CliResult<ScheduleFile> {
    serde_json::from_str(text).map_err(|e| parse_error(origin, e))
}

pub fn load_schedule(path: &Path) -> CliResult<ScheduleFile> {
    parse_schedule(&read(path)?, &path.display().to_string())
}

/// Indented JSON with arrays of scalars kept on one line, so matrices read
/// as one row per line.
pub fn to_json_text<T: Serialize>(value: &T) -> CliResult<String> {
    fn emit(v: &serde_json::Value, indent: usize, out: &mut String) -> CliResult<()> {
        use serde_json::Value;
        let pad = |n: usize| "  ".repeat(n);
        match v {
            Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
                out.push_str(&serde_json::to_string(v)?.replace(',', ", "));
            }
            Value::Array(items) => {
                out.push_str("[\n");
                for (i, x) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    emit(x, indent + 1, out)?;
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
            Value::Object(map) if !map.is_empty() => {
                out.push_str("{\n");
                for (i, (k, x)) in map.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    out.push_str(&serde_json::to_string(k)?);
                    out.push_str(": ");
                    emit(x, indent + 1, out)?;
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push('}');
            }
            _ => out.push_str(&serde_json::to_string(v)?),
        }
        Ok(())
    }
    let mut out = String::new();
    emit(&serde_json::to_value(value)?, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, to_json_text(value)?).map_err(|e| CliError::io(path, e))
}

/// `input,time,s,s_squared`, one row per cell, inputs outermost.
pub fn write_heatmap<W: Write>(schedule: &Schedule, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["input", "time", "s", "s_squared"])?;
    for i in 0..schedule.inputs() {
        for k in 0..schedule.horizon() {
            let s = schedule.scaling(i, k);
            w.write_record(&[i.to_string(), k.to_string(), s.to_string(), (s * s).to_string()])?;
        }
    }
    w.flush().map_err(|e| CliError::io("<heatmap>", e))?;
    Ok(())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Closed-form approximation factor `2 / (sqrt(x) + 1/sqrt(x))` with
/// `x = d * (t/n)`; `None` where `x < 1`.
pub fn surface_value(d: f64, t_over_n: f64) -> Option<f64> {
    let x = d * t_over_n;
    if x.is_nan() || x < 1.0 || !x.is_finite() {
        return None;
    }
    Some(2.0 / (x.sqrt() + 1.0 / x.sqrt()))
}

/// CSV `d,t_over_n,epsilon` over the grid, `d` outermost. Points with
/// `d t/n < 1` have an empty `epsilon`.
pub fn write_epsilon_surface<W: Write>(ds: &[f64], ratios: &[f64], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "t_over_n", "epsilon"])?;
    for &d in ds {
        for &r in ratios {
            let eps = surface_value(d, r).map_or_else(String::new, |e| e.to_string());
            w.write_record(&[d.to_string(), r.to_string(), eps])?;
        }
    }
    w.flush().map_err(|e| CliError::io("<surface>", e))?;
    Ok(())
}

