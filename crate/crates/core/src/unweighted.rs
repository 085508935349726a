//! 0/1 schedules and exhaustive oracles for tiny instances.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::greedy::default_ridge;
use crate::metrics::{evaluate, DesignPool, MetricKind};
use crate::system::{controllability_matrix, ControllabilityMatrix, Gramian, Horizon, LtiSystem, Schedule};
use crate::weighted::{activation_budget, max_ratio_weights, whiten, BudgetKind, WeightedScheduleResult};
use crate::{Error, Result};

/// Largest `m * t` grid [`brute_force_schedule`] will enumerate.
pub const SCHEDULE_ENUMERATION_LIMIT: usize = 20;
/// Largest `binomial(m, floor(d))` [`brute_force_static`] will enumerate.
pub const STATIC_ENUMERATION_LIMIT: usize = 100_000;

/// Unweighted schedule: the max-ratio weights rounded up,
/// `s_i(k) = ceil(sqrt(c) / (1 + sqrt(m/d)))`, which is 1 exactly on the
/// support of `c`.
pub fn schedule_unweighted(sys: &LtiSystem, t: Horizon, d: f64) -> Result<WeightedScheduleResult> {
    let wh = whiten(sys, t, d)?;
    let c = max_ratio_weights(&wh)?;
    let g = 1.0 + (wh.m() as f64 / wh.d_eff()).sqrt();
    let energies: Vec<f64> = c
        .iter()
        .map(|&x| (x.sqrt() / g).ceil().min(1.0))
        .collect();
    let schedule = Schedule::from_column_energies(&energies, wh.m(), wh.t())?;
    let lower = 1.0 - (wh.n() as f64 / wh.kappa as f64).sqrt();
    let factor = g / lower;
    Ok(WeightedScheduleResult {
        schedule,
        epsilon: None,
        rho_bound_factor: factor * factor,
        budget_kind: BudgetKind::MaxRatio,
        gamma: None,
        kappa: wh.kappa,
    })
}

/// Metric value of a candidate plus whether it needed the ridge.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// `false` when the Gramian was singular and `alpha I` was added.
    pub controllable: bool,
}

impl OracleValue {
    /// Controllable candidates beat singular ones regardless of the ridged
    /// value; within each class the smaller value wins.
    pub fn better_than(&self, other: &OracleValue) -> bool {
        match (self.controllable, other.controllable) {
            (true, false) => true,
            (false, true) => false,
            _ => self.value < other.value,
        }
    }
}

/// Metric of `F F^T`, ridged by `alpha` only when singular.
pub fn ridged_value(
    factor: DMatrix<f64>,
    metric: MetricKind,
    pool: Option<&DesignPool>,
    alpha: f64,
) -> Result<OracleValue> {
    let w = Gramian::from_factor(factor);
    if w.is_positive_definite() {
        Ok(OracleValue {
            value: evaluate(metric, &w, pool)?,
            controllable: true,
        })
    } else {
        Ok(OracleValue {
            value: evaluate(metric, &w.ridged(alpha), pool)?,
            controllable: false,
        })
    }
}

/// Optimal 0/1 schedule found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOptimum {
    pub schedule: Schedule,
    pub value: OracleValue,
}

/// Grid cell `(input, time)` as the flat index `input * t + time`.
fn cell_column(c: &ControllabilityMatrix, cell: usize) -> usize {
    let t = c.horizon();
    let (input, time) = (cell / t, cell % t);
    c.flat_index(input, c.schedule_time(time))
}

fn selected_columns(c: &ControllabilityMatrix, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(c.state_dim(), cols.len(), |r, k| c.matrix()[(r, cols[k])])
}

/// Visits every nonempty subset of `0..len` with at most `max_size`
/// elements, in lexicographic order.
fn for_each_subset(len: usize, max_size: usize, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn go(
        start: usize,
        len: usize,
        max_size: usize,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        for next in start..len {
            cur.push(next);
            f(cur)?;
            if cur.len() < max_size {
                go(next + 1, len, max_size, cur, f)?;
            }
            cur.pop();
        }
        Ok(())
    }
    let mut cur = Vec::new();
    go(0, len, max_size, &mut cur, f)
}

/// Exhaustive search over 0/1 supports with at most `floor(d t)` cells.
///
/// Singular candidates are scored with the ridge `1e-8 lambda_max(W)` and
/// rank behind every controllable one. Ties keep the lexicographically first support (cells ordered input-major).
pub fn brute_force_schedule(
    sys: &LtiSystem,
    t: Horizon,
    d: f64,
    metric: MetricKind,
    pool: Option<&DesignPool>,
) -> Result<ScheduleOptimum> {
    let (m, tt) = (sys.input_count(), t.get());
    if m * tt > SCHEDULE_ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            size: m * tt,
            limit: SCHEDULE_ENUMERATION_LIMIT,
        });
    }
    let budget = activation_budget(tt, d)?.min(m * tt);
    if budget == 0 {
        return Err(Error::InvalidBudget("floor(d t) must be at least 1"));
    }
    let c = controllability_matrix(sys, t);
    let alpha = default_ridge(&c.gramian());
    let mut best: Option<(Vec<usize>, OracleValue)> = None;
    let mut cols = Vec::with_capacity(budget);
    for_each_subset(m * tt, budget, &mut |cells| {
        cols.clear();
        cols.extend(cells.iter().map(|&cell| cell_column(&c, cell)));
        let v = ridged_value(selected_columns(&c, &cols), metric, pool, alpha)?;
        if best.as_ref().is_none_or(|(_, b)| v.better_than(b)) {
            best = Some((cells.to_vec(), v));
        }
        Ok(())
    })?;
    let (cells, value) = best.expect("at least one subset");
    let mut s = DMatrix::zeros(m, tt);
    for cell in cells {
        s[(cell / tt, cell % tt)] = 1.0;
    }
    Ok(ScheduleOptimum {
        schedule: Schedule::new(s)?,
        value,
    })
}

/// Optimal static input set found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticOptimum {
    /// 0-based input indices, ascending.
    pub inputs: Vec<usize>,
    pub value: OracleValue,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Metric of the static schedule that keeps `inputs` active at all times.
pub fn static_value(
    c: &ControllabilityMatrix,
    inputs: &[usize],
    metric: MetricKind,
    pool: Option<&DesignPool>,
    alpha: f64,
) -> Result<OracleValue> {
    let m = c.inputs();
    if let Some(&bad) = inputs.iter().find(|&&j| j >= m) {
        return Err(Error::IndexOutOfRange { index: bad, len: m });
    }
    let cols: Vec<usize> = (0..c.horizon())
        .flat_map(|k| inputs.iter().map(move |&j| j + m * k))
        .collect();
    ridged_value(selected_columns(c, &cols), metric, pool, alpha)
}

/// Exhaustive search over input subsets of size at most `floor(d)`, each
/// active at every time.
pub fn brute_force_static(
    sys: &LtiSystem,
    t: Horizon,
    d: f64,
    metric: MetricKind,
    pool: Option<&DesignPool>,
) -> Result<StaticOptimum> {
    let m = sys.input_count();
    let size = activation_budget(1, d)?.min(m);
    if size == 0 {
        return Err(Error::InvalidBudget("floor(d) must be at least 1"));
    }
    let count = binomial(m, size);
    if count > STATIC_ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            size: count,
            limit: STATIC_ENUMERATION_LIMIT,
        });
    }
    let c = controllability_matrix(sys, t);
    let alpha = default_ridge(&c.gramian());
    let mut best: Option<StaticOptimum> = None;
    for_each_subset(m, size, &mut |inputs| {
        let v = static_value(&c, inputs, metric, pool, alpha)?;
        if best.as_ref().is_none_or(|b| v.better_than(&b.value)) {
            best = Some(StaticOptimum {
                inputs: inputs.to_vec(),
                value: v,
            });
        }
        Ok(())
    })?;
    Ok(best.expect("at least one subset"))
}
