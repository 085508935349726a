//! Greedy baselines: static input selection and time-varying column selection.
//!
//! Both greedily add the candidate with the largest decrease of the ridged
//! metric `rho(W_s + alpha I)`. Ties go to the lowest index. Reported final
//! values are computed without the ridge.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::linalg::Spectrum;
use crate::metrics::{evaluate, DesignPool, MetricKind};
use crate::system::{controllability_matrix, ControllabilityMatrix, Gramian, Horizon, LtiSystem, Schedule};
use crate::{Error, Result};

/// Relative size of the default ridge, `alpha = RIDGE_RTOL * lambda_max(W)`.
pub const RIDGE_RTOL: f64 = 1e-8;

/// Above this state dimension A-optimal static greedy uses low-rank updates.
const DIRECT_MAX_DIM: usize = 24;

/// Relative residual below which a Krylov direction counts as dependent.
const KRYLOV_RTOL: f64 = 1e-13;

/// `RIDGE_RTOL * lambda_max(w)`.
pub fn default_ridge(w: &Gramian) -> f64 {
    RIDGE_RTOL * Spectrum::of_symmetric(w.matrix()).max()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricOutcome {
    Value(f64),
    /// The selected Gramian is singular, no finite value exists.
    Uncontrollable,
}

impl MetricOutcome {
    pub fn value(self) -> Option<f64> {
        match self {
            MetricOutcome::Value(v) => Some(v),
            MetricOutcome::Uncontrollable => None,
        }
    }
}

fn outcome(w: &Gramian, metric: MetricKind, pool: Option<&DesignPool>) -> Result<MetricOutcome> {
    match evaluate(metric, w, pool) {
        Ok(v) => Ok(MetricOutcome::Value(v)),
        Err(Error::SingularGramian { .. }) => Ok(MetricOutcome::Uncontrollable),
        Err(e) => Err(e),
    }
}

fn ridged(matrix: &DMatrix<f64>, alpha: f64) -> Gramian {
    let n = matrix.nrows();
    Gramian::from_parts(matrix + DMatrix::identity(n, n) * alpha, None)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter("ridge must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStaticResult {
    /// Selected inputs in pick order.
    pub inputs: Vec<usize>,
    /// Selected inputs active at every time.
    pub schedule: Schedule,
    pub outcome: MetricOutcome,
}

/// Picks `d` inputs one at a time, each kept active over the whole horizon.
pub fn greedy_static(
    sys: &LtiSystem,
    t: Horizon,
    d: usize,
    metric: MetricKind,
    pool: Option<&DesignPool>,
    alpha: f64,
) -> Result<GreedyStaticResult> {
    let fast = metric == MetricKind::AOptimality && sys.state_dim() > DIRECT_MAX_DIM;
    greedy_static_with(sys, t, d, metric, pool, alpha, fast)
}

fn greedy_static_with(
    sys: &LtiSystem,
    t: Horizon,
    d: usize,
    metric: MetricKind,
    pool: Option<&DesignPool>,
    alpha: f64,
    low_rank: bool,
) -> Result<GreedyStaticResult> {
    let m = sys.input_count();
    if d == 0 || d > m {
        return Err(Error::InvalidBudget("static budget must lie in 1..=m"));
    }
    check_alpha(alpha)?;
    let c = controllability_matrix(sys, t);
    let inputs = if low_rank {
        static_picks_low_rank(&c, d, alpha)?
    } else {
        static_picks_direct(&c, d, metric, pool, alpha)?
    };
    let mut s = DMatrix::zeros(m, t.get());
    for &j in &inputs {
        s.row_mut(j).fill(1.0);
    }
    let schedule = Schedule::new(s)?;
    let w = c.scheduled_gramian(&schedule)?;
    Ok(GreedyStaticResult {
        inputs,
        schedule,
        outcome: outcome(&w, metric, pool)?,
    })
}

/// Static Gramian of input `j`, `sum_k A^k b_j b_j^T (A^k)^T`.
fn input_gramian(c: &ControllabilityMatrix, j: usize) -> DMatrix<f64> {
    let cols: Vec<_> = (0..c.horizon()).map(|k| c.column(j, k)).collect();
    let f = DMatrix::from_columns(&cols);
    &f * f.transpose()
}

fn static_picks_direct(
    c: &ControllabilityMatrix,
    d: usize,
    metric: MetricKind,
    pool: Option<&DesignPool>,
    alpha: f64,
) -> Result<Vec<usize>> {
    let m = c.inputs();
    let n = c.state_dim();
    let grams: Vec<_> = (0..m).map(|j| input_gramian(c, j)).collect();
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut w = DMatrix::zeros(n, n);
    let mut picks = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &j) in remaining.iter().enumerate() {
            let v = evaluate(metric, &ridged(&(&w + &grams[j]), alpha), pool)?;
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((pos, v));
            }
        }
        let (pos, _) = best.expect("remaining inputs");
        let j = remaining.remove(pos);
        w += &grams[j];
        picks.push(j);
    }
    Ok(picks)
}

/// Orthonormal basis of `span{b, Ab, ...}` restricted to the columns of
/// input `j`, and a square-root factor `F` with `F F^T` equal to the input's
/// static Gramian on that span.
fn low_rank_factor(c: &ControllabilityMatrix, j: usize) -> DMatrix<f64> {
    let n = c.state_dim();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for k in 0..c.horizon() {
        let col = c.column(j, k).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = col;
        for _ in 0..2 {
            for q in &basis {
                let p = q.dot(&r);
                r.axpy(-p, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > KRYLOV_RTOL * norm && basis.len() < n {
            basis.push(r / rn);
        }
    }
    if basis.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let q = DMatrix::from_columns(&basis);
    let cols: Vec<_> = (0..c.horizon()).map(|k| c.column(j, k)).collect();
    let proj = q.transpose() * DMatrix::from_columns(&cols);
    // F = Q S with S S^T = P P^T
    let small = Spectrum::of_factor(&proj);
    let sq = small.vectors() * DMatrix::from_diagonal(&small.values().map(|l| l.max(0.0).sqrt()));
    q * sq
}

/// A-optimal static greedy with Woodbury updates:
/// `tr((W + F F^T)^{-1}) = tr(M) - tr(K^{-1} (M F)^T (M F))`,
/// `K = I + F^T M F`, `M = (W + alpha I)^{-1}`.
///
/// `M F_j` is updated in place after each pick and recomputed from scratch
/// every [`REFRESH_EVERY`] picks to stop cancellation from accumulating.
fn static_picks_low_rank(c: &ControllabilityMatrix, d: usize, alpha: f64) -> Result<Vec<usize>> {
    let (n, m) = (c.state_dim(), c.inputs());
    let factors: Vec<DMatrix<f64>> = (0..m).map(|j| low_rank_factor(c, j)).collect();
    let mut mf: Vec<DMatrix<f64>> = factors.iter().map(|f| f / alpha).collect();
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut picks = Vec::with_capacity(d);
    for step in 0..d {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &j) in remaining.iter().enumerate() {
            let drop = woodbury_kernel(&factors[j], &mf[j])?.solve(&(mf[j].transpose() * &mf[j])).trace();
            if best.is_none_or(|(_, b)| drop > b) {
                best = Some((pos, drop));
            }
        }
        let (pos, _) = best.expect("remaining inputs");
        let s = remaining.remove(pos);
        w += &factors[s] * factors[s].transpose();
        picks.push(s);
        if (step + 1) % REFRESH_EVERY == 0 {
            let shifted = &w + DMatrix::identity(n, n) * alpha;
            let chol = Cholesky::new(shifted).ok_or(Error::InvalidParameter("ridged Gramian not positive"))?;
            for &j in &remaining {
                mf[j] = chol.solve(&factors[j]);
            }
        } else {
            // M' = M - Z K^{-1} Z^T with Z = M F_s
            let z = mf[s].clone();
            let kinv = woodbury_kernel(&factors[s], &z)?.inverse();
            let zk = &z * kinv;
            for &j in &remaining {
                let zt_f = z.transpose() * &factors[j];
                mf[j] -= &zk * zt_f;
            }
        }
    }
    Ok(picks)
}

const REFRESH_EVERY: usize = 8;

/// Cholesky factor of `K = I + F^T (M F)`.
fn woodbury_kernel(f: &DMatrix<f64>, mf: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let r = f.ncols();
    let k = DMatrix::identity(r, r) + f.transpose() * mf;
    Cholesky::new(crate::linalg::symmetrize(&k)).ok_or(Error::InvalidParameter("low-rank update not positive"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTimeVaryingResult {
    pub schedule: Schedule,
    pub outcome: MetricOutcome,
}

/// Picks `ceil(d t)` distinct columns of `C(t)` one at a time.
pub fn greedy_time_varying(
    sys: &LtiSystem,
    t: Horizon,
    d: f64,
    metric: MetricKind,
    pool: Option<&DesignPool>,
    alpha: f64,
) -> Result<GreedyTimeVaryingResult> {
    check_alpha(alpha)?;
    let (m, tt) = (sys.input_count(), t.get());
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidBudget("d must be positive and finite"));
    }
    let budget = ((d * tt as f64 - 1e-9).ceil() as usize).min(m * tt);
    if budget == 0 {
        return Err(Error::InvalidBudget("ceil(d t) must be at least 1"));
    }
    let c = controllability_matrix(sys, t);
    let taken = if metric == MetricKind::AOptimality {
        column_picks_rank_one(&c, budget, alpha)?
    } else {
        column_picks_direct(&c, budget, metric, pool, alpha)?
    };
    let energies: Vec<f64> = taken.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let schedule = Schedule::from_column_energies(&energies, m, tt)?;
    let ws = c.scheduled_gramian(&schedule)?;
    Ok(GreedyTimeVaryingResult {
        schedule,
        outcome: outcome(&ws, metric, pool)?,
    })
}

fn column_picks_direct(
    c: &ControllabilityMatrix,
    budget: usize,
    metric: MetricKind,
    pool: Option<&DesignPool>,
    alpha: f64,
) -> Result<Vec<bool>> {
    let n = c.state_dim();
    let cols = c.matrix().ncols();
    let mut taken = vec![false; cols];
    let mut w = DMatrix::zeros(n, n);
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for col in 0..cols {
            if taken[col] {
                continue;
            }
            let v = c.matrix().column(col);
            let cand = &w + v * v.transpose();
            let val = evaluate(metric, &ridged(&cand, alpha), pool)?;
            if best.is_none_or(|(_, b)| val < b) {
                best = Some((col, val));
            }
        }
        let (col, _) = best.expect("budget below column count");
        taken[col] = true;
        let v = c.matrix().column(col);
        w += v * v.transpose();
    }
    Ok(taken)
}

/// A-optimal column picks by Sherman-Morrison:
/// `tr(M) - tr((W + v v^T + alpha I)^{-1}) = |M v|^2 / (1 + v^T M v)`
/// with `M = (W + alpha I)^{-1}` refactored after every pick.
fn column_picks_rank_one(c: &ControllabilityMatrix, budget: usize, alpha: f64) -> Result<Vec<bool>> {
    let n = c.state_dim();
    let cols = c.matrix().ncols();
    let mut taken = vec![false; cols];
    let mut w = DMatrix::<f64>::zeros(n, n);
    for _ in 0..budget {
        let shifted = &w + DMatrix::identity(n, n) * alpha;
        let chol = Cholesky::new(shifted).ok_or(Error::InvalidParameter("ridged Gramian not positive"))?;
        let mc = chol.solve(c.matrix());
        let mut best: Option<(usize, f64)> = None;
        for col in 0..cols {
            if taken[col] {
                continue;
            }
            let mv = mc.column(col);
            let drop = mv.norm_squared() / (1.0 + c.matrix().column(col).dot(&mv));
            if best.is_none_or(|(_, b)| drop > b) {
                best = Some((col, drop));
            }
        }
        let (col, _) = best.expect("budget below column count");
        taken[col] = true;
        let v = c.matrix().column(col);
        w += v * v.transpose();
    }
    Ok(taken)
}
