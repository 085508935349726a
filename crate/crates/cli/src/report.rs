//! Plain-text metric reports.

use std::fmt::Write as _;

use actsched_core::metrics::evaluate;
use actsched_core::{ControllabilityMatrix, DesignPool, Error, Gramian, MetricKind, Schedule};

use crate::error::CliResult;

/// Metric value, or `None` when the Gramian is singular.
pub fn metric_or_singular(kind: MetricKind, w: &Gramian, pool: &DesignPool) -> CliResult<Option<f64>> {
    match evaluate(kind, w, Some(pool)) {
        Ok(v) => Ok(Some(v)),
        Err(Error::SingularGramian { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6e}"),
        None => "uncontrollable".into(),
    }
}

/// Six metrics of `W`, and of `W_s` when given. V and G use the columns of
/// `C` as the design pool.
pub fn metrics_table(c: &ControllabilityMatrix, ws: Option<&Gramian>, bound: Option<f64>) -> CliResult<String> {
    let pool = DesignPool::from(c);
    let w = c.gramian();
    let mut out = String::new();
    match ws {
        None => {
            writeln!(out, "{:<14} {:>16}", "metric", "W").unwrap();
        }
        Some(_) => {
            writeln!(out, "{:<14} {:>16} {:>16} {:>12} {:>8}", "metric", "W", "W_s", "ratio", "bound").unwrap();
        }
    }
    for kind in MetricKind::ALL {
        let full = metric_or_singular(kind, &w, &pool)?;
        let Some(ws) = ws else {
            writeln!(out, "{:<14} {:>16}", kind.to_string(), fmt_value(full)).unwrap();
            continue;
        };
        let sched = metric_or_singular(kind, ws, &pool)?;
        let ratio = match (full, sched) {
            (Some(f), Some(s)) if f > 0.0 => Some(s / f),
            _ => None,
        };
        let check = match (ratio, bound) {
            (Some(r), Some(b)) => {
                if r <= b * (1.0 + 1e-8) {
                    "ok"
                } else {
                    "VIOLATED"
                }
            }
            _ => "-",
        };
        writeln!(
            out,
            "{:<14} {:>16} {:>16} {:>12} {:>8}",
            kind.to_string(),
            fmt_value(full),
            fmt_value(sched),
            ratio.map_or_else(|| "-".into(), |r| format!("{r:.6}")),
            check
        )
        .unwrap();
    }
    Ok(out)
}

/// Header lines describing a schedule.
pub fn schedule_summary(schedule: &Schedule) -> String {
    format!(
        "inputs m = {}, horizon t = {}, activations = {}, d_avg = {}, total energy = {:.6e}\n",
        schedule.inputs(),
        schedule.horizon(),
        schedule.support_size(),
        schedule.average_active(),
        schedule.total_energy()
    )
}
