//! Weighted sparse schedules from dual-set sparsification.
//!
//! All four schedulers whiten the controllability matrix, `V = W^{-1/2} C`,
//! and differ only in the second decomposition `U`, which decides what the
//! schedule's energy budget controls:
//!
//! | scheduler               | `U`                                   | certified            |
//! |-------------------------|---------------------------------------|----------------------|
//! | [`schedule_two_sided`]  | `V`                                   | `(1-e) W <= W_s <= (1+e) W` |
//! | [`schedule_max_ratio`]  | `I_{mt}`                              | `max s^2 <= gamma`   |
//! | [`schedule_per_input`]  | `[I_m ... I_m] / sqrt(t)`             | input energy `<= gamma` |
//! | [`schedule_per_time`]   | each `e_k` repeated `m` times, `/ sqrt(m)` | step energy `<= gamma` |
//!
//! The budget is `kappa = floor(d t)` activations. Bounds are reported for
//! the effective average `kappa / t`, which equals `d` when `d t` is integral.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::dualset::{dual_set, DecompositionPair};
use crate::system::{controllability_matrix, ControllabilityMatrix, Horizon, LtiSystem, Schedule};
use crate::{Error, Result};

/// Absorbs roundoff in `d * t` before taking the floor.
const FLOOR_SLACK: f64 = 1e-9;

/// `2 / (sqrt(dt/n) + sqrt(n/dt))`, at most 1. Needs `d t >= n`.
pub fn epsilon_bound(n: usize, t: usize, d: f64) -> Result<f64> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidParameter("n and t must be positive"));
    }
    let x = d * t as f64 / n as f64;
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::InvalidBudget("d * t must be at least n"));
    }
    Ok(2.0 / (x.sqrt() + 1.0 / x.sqrt()))
}

/// What the `gamma` of a [`WeightedScheduleResult`] bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BudgetKind {
    /// Two-sided Loewner approximation with factor `epsilon`.
    TwoSided,
    /// `max_{i,k} s_i(k)^2 <= gamma`.
    MaxRatio,
    /// `max_i sum_k s_i(k)^2 <= gamma`.
    PerInputEnergy,
    /// `max_k sum_i s_i(k)^2 <= gamma`.
    PerTimeEnergy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedScheduleResult {
    pub schedule: Schedule,
    /// Certified two-sided factor (two-sided scheduler only).
    pub epsilon: Option<f64>,
    /// Every systemic metric satisfies `rho(W_s) <= factor * rho(W)`.
    pub rho_bound_factor: f64,
    pub budget_kind: BudgetKind,
    pub gamma: Option<f64>,
    /// Activation budget actually used.
    pub kappa: usize,
}

impl WeightedScheduleResult {
    /// `kappa / t`
    pub fn effective_d(&self) -> f64 {
        self.kappa as f64 / self.schedule.horizon() as f64
    }
}

/// `floor(d t)` with a little slack for decimal inputs such as `1.875 * 8`.
pub fn activation_budget(t: usize, d: f64) -> Result<usize> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidBudget("d must be positive and finite"));
    }
    Ok((d * t as f64 + FLOOR_SLACK).floor() as usize)
}

/// Whitened controllability data shared by the schedulers.
pub(crate) struct Whitened {
    pub c: ControllabilityMatrix,
    /// `W^{-1/2} C`, rows orthonormal.
    pub v: DMatrix<f64>,
    pub kappa: usize,
}

impl Whitened {
    pub fn n(&self) -> usize {
        self.c.state_dim()
    }

    pub fn m(&self) -> usize {
        self.c.inputs()
    }

    pub fn t(&self) -> usize {
        self.c.horizon()
    }

    pub fn d_eff(&self) -> f64 {
        self.kappa as f64 / self.t() as f64
    }

    /// `(1 - sqrt(n / kappa))^{-2}`
    pub fn rho_factor(&self) -> f64 {
        let r = 1.0 - (self.n() as f64 / self.kappa as f64).sqrt();
        1.0 / (r * r)
    }
}

pub(crate) fn whiten(sys: &LtiSystem, t: Horizon, d: f64) -> Result<Whitened> {
    let n = sys.state_dim();
    let m = sys.input_count();
    if t.get() < n {
        return Err(Error::InvalidParameter("horizon must be at least the state dimension"));
    }
    let kappa = activation_budget(t.get(), d)?;
    if kappa <= n {
        return Err(Error::InvalidBudget("floor(d t) must exceed the state dimension"));
    }
    if kappa > m * t.get() {
        return Err(Error::InvalidBudget("floor(d t) exceeds the m t available columns"));
    }
    let c = controllability_matrix(sys, t);
    c.gramian().definite_spectrum()?;
    // With C = P S Q^T (thin), W^{-1/2} C = P Q^T; the SVD keeps the rows
    // orthonormal even when W is badly conditioned.
    let svd = c.matrix().clone().svd(true, true);
    let p = svd.u.expect("u requested");
    let qt = svd.v_t.expect("v_t requested");
    let v = p * qt;
    Ok(Whitened { c, v, kappa })
}

pub(crate) fn max_ratio_weights(wh: &Whitened) -> Result<Vec<f64>> {
    let pair = DecompositionPair::standard_basis(wh.v.clone())?;
    Ok(dual_set(&pair, wh.kappa)?.into_weights())
}

/// Two-sided `(epsilon, d)`-approximation of the Gramian.
pub fn schedule_two_sided(sys: &LtiSystem, t: Horizon, d: f64) -> Result<WeightedScheduleResult> {
    let wh = whiten(sys, t, d)?;
    let pair = DecompositionPair::new(wh.v.clone(), wh.v.clone())?;
    let c = dual_set(&pair, wh.kappa)?;
    let shrink = 1.0 + wh.n() as f64 / wh.kappa as f64;
    let energies: Vec<f64> = c.weights().iter().map(|x| x / shrink).collect();
    let schedule = Schedule::from_column_energies(&energies, wh.m(), wh.t())?;
    let epsilon = epsilon_bound(wh.n(), wh.t(), wh.d_eff())?;
    Ok(WeightedScheduleResult {
        schedule,
        epsilon: Some(epsilon),
        rho_bound_factor: 1.0 / (1.0 - epsilon),
        budget_kind: BudgetKind::TwoSided,
        gamma: None,
        kappa: wh.kappa,
    })
}

/// Bounds every single scaling: `s_i(k)^2 <= (1 + sqrt(m/d))^2`.
pub fn schedule_max_ratio(sys: &LtiSystem, t: Horizon, d: f64) -> Result<WeightedScheduleResult> {
    let wh = whiten(sys, t, d)?;
    let c = max_ratio_weights(&wh)?;
    let schedule = Schedule::from_column_energies(&c, wh.m(), wh.t())?;
    let g = 1.0 + (wh.m() as f64 / wh.d_eff()).sqrt();
    Ok(WeightedScheduleResult {
        schedule,
        epsilon: None,
        rho_bound_factor: wh.rho_factor(),
        budget_kind: BudgetKind::MaxRatio,
        gamma: Some(g * g),
        kappa: wh.kappa,
    })
}

/// Bounds each input's total energy: `sum_k s_i(k)^2 <= t (1 + sqrt(m/(dt)))^2`.
pub fn schedule_per_input(sys: &LtiSystem, t: Horizon, d: f64) -> Result<WeightedScheduleResult> {
    let wh = whiten(sys, t, d)?;
    let (m, tt) = (wh.m(), wh.t());
    let index = (0..m * tt).map(|col| col % m).collect();
    let pair = DecompositionPair::with_scaled_basis(wh.v.clone(), index, 1.0 / (tt as f64).sqrt(), m)?;
    let c = dual_set(&pair, wh.kappa)?;
    let schedule = Schedule::from_column_energies(c.weights(), m, tt)?;
    let g = 1.0 + (m as f64 / wh.kappa as f64).sqrt();
    Ok(WeightedScheduleResult {
        schedule,
        epsilon: None,
        rho_bound_factor: wh.rho_factor(),
        budget_kind: BudgetKind::PerInputEnergy,
        gamma: Some(tt as f64 * g * g),
        kappa: wh.kappa,
    })
}

/// Bounds the energy spent at each step: `sum_i s_i(k)^2 <= m (1 + sqrt(1/d))^2`.
pub fn schedule_per_time(sys: &LtiSystem, t: Horizon, d: f64) -> Result<WeightedScheduleResult> {
    let wh = whiten(sys, t, d)?;
    let (m, tt) = (wh.m(), wh.t());
    let index = (0..m * tt).map(|col| col / m).collect();
    let pair = DecompositionPair::with_scaled_basis(wh.v.clone(), index, 1.0 / (m as f64).sqrt(), tt)?;
    let c = dual_set(&pair, wh.kappa)?;
    let schedule = Schedule::from_column_energies(c.weights(), m, tt)?;
    let g = 1.0 + (1.0 / wh.d_eff()).sqrt();
    Ok(WeightedScheduleResult {
        schedule,
        epsilon: None,
        rho_bound_factor: wh.rho_factor(),
        budget_kind: BudgetKind::PerTimeEnergy,
        gamma: Some(m as f64 * g * g),
        kappa: wh.kappa,
    })
}
