//! Systemic controllability metrics.
//!
//! Each metric maps a positive-definite Gramian to a scalar that is
//! homogeneous of degree -1, nonincreasing in the Loewner order and convex.
//! Smaller is better.

use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::linalg::Spectrum;
use crate::system::{ControllabilityMatrix, Gramian};
use crate::{Error, Result};

const AXIOM_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// `tr W^{-1}`, average control energy.
    AOptimality,
    /// `det(W)^{-1/n}`, volume of the reachable ellipsoid.
    DOptimality,
    /// `1 / tr W`.
    TOptimality,
    /// `1 / lambda_min(W)`, worst-case control energy.
    EOptimality,
    /// `tr(C^T W^{-1} C)` over a design pool `C`.
    VOptimality,
    /// `max_j c_j^T W^{-1} c_j` over a design pool.
    GOptimality,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::AOptimality,
        MetricKind::DOptimality,
        MetricKind::TOptimality,
        MetricKind::EOptimality,
        MetricKind::VOptimality,
        MetricKind::GOptimality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::AOptimality => "A",
            MetricKind::DOptimality => "D",
            MetricKind::TOptimality => "T",
            MetricKind::EOptimality => "E",
            MetricKind::VOptimality => "V",
            MetricKind::GOptimality => "G",
        }
    }

    pub fn needs_pool(self) -> bool {
        matches!(self, MetricKind::VOptimality | MetricKind::GOptimality)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-optimality", self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    /// Accepts `A`, `a`, `A-optimality`, `a_optimality` and so on.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let letter = match s.len() {
            1 => s,
            _ => {
                let lower = s.get(1..).unwrap_or("");
                if lower.eq_ignore_ascii_case("-optimality")
                    || lower.eq_ignore_ascii_case("_optimality")
                {
                    &s[..1]
                } else {
                    return Err(Error::InvalidParameter("unknown metric"));
                }
            }
        };
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(letter))
            .ok_or(Error::InvalidParameter("unknown metric"))
    }
}

/// Candidate columns for V- and G-optimality, `n x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPool {
    matrix: DMatrix<f64>,
}

impl DesignPool {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        DesignPool { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl From<&ControllabilityMatrix> for DesignPool {
    fn from(c: &ControllabilityMatrix) -> Self {
        DesignPool::new(c.matrix().clone())
    }
}

/// Value of `metric` at `w`.
pub fn evaluate(metric: MetricKind, w: &Gramian, pool: Option<&DesignPool>) -> Result<f64> {
    if metric == MetricKind::TOptimality {
        let tr = w.trace();
        if !(tr > 0.0) {
            return Err(Error::SingularGramian { ratio: 0.0 });
        }
        return Ok(1.0 / tr);
    }
    let pool = if metric.needs_pool() {
        let p = pool.ok_or(Error::MissingDesignPool)?;
        if p.matrix().nrows() != w.dim() {
            return Err(Error::DimensionMismatch {
                what: "design pool rows",
                expected: w.dim(),
                found: p.matrix().nrows(),
            });
        }
        Some(p)
    } else {
        None
    };
    let spec = w.definite_spectrum()?;
    Ok(evaluate_spectrum(metric, &spec, pool))
}

/// Same as [`evaluate`] on an already checked positive-definite spectrum.
pub(crate) fn evaluate_spectrum(
    metric: MetricKind,
    spec: &Spectrum,
    pool: Option<&DesignPool>,
) -> f64 {
    let vals = spec.values();
    match metric {
        MetricKind::AOptimality => vals.iter().map(|l| 1.0 / l).sum(),
        MetricKind::DOptimality => {
            let logdet: f64 = vals.iter().map(|l| l.ln()).sum();
            (-logdet / vals.len() as f64).exp()
        }
        MetricKind::TOptimality => 1.0 / spec.trace(),
        MetricKind::EOptimality => 1.0 / spec.min(),
        MetricKind::VOptimality | MetricKind::GOptimality => {
            let pool = pool.expect("pool checked by caller");
            let y = spec.vectors().transpose() * pool.matrix();
            let per_column = (0..y.ncols()).map(|j| {
                (0..y.nrows())
                    .map(|k| y[(k, j)] * y[(k, j)] / vals[k])
                    .sum::<f64>()
            });
            if metric == MetricKind::VOptimality {
                per_column.sum()
            } else {
                per_column.fold(0.0, f64::max)
            }
        }
    }
}

/// `|kappa rho(kappa W) - rho(W)| / |rho(W)|` for `kappa > 1`.
pub fn check_homogeneity(
    metric: MetricKind,
    w: &Gramian,
    pool: Option<&DesignPool>,
    kappa: f64,
) -> Result<f64> {
    if !(kappa > 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter("homogeneity factor must exceed 1"));
    }
    let base = evaluate(metric, w, pool)?;
    let scaled = evaluate(metric, &w.scaled(kappa), pool)?;
    Ok((scaled * kappa - base).abs() / base.abs())
}

/// `rho(W2) <= rho(W1)` up to relative roundoff; the caller supplies `W1 <= W2`.
pub fn check_monotonicity(
    metric: MetricKind,
    w1: &Gramian,
    w2: &Gramian,
    pool: Option<&DesignPool>,
) -> Result<bool> {
    let v1 = evaluate(metric, w1, pool)?;
    let v2 = evaluate(metric, w2, pool)?;
    Ok(v2 <= v1 + AXIOM_RTOL * v1.abs())
}

/// `rho(c W1 + (1-c) W2) <= c rho(W1) + (1-c) rho(W2)` up to relative roundoff.
pub fn check_convexity(
    metric: MetricKind,
    w1: &Gramian,
    w2: &Gramian,
    c: f64,
    pool: Option<&DesignPool>,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter("convex weight must lie in [0, 1]"));
    }
    let v1 = evaluate(metric, w1, pool)?;
    let v2 = evaluate(metric, w2, pool)?;
    let mix = w1.scaled(c).sum(&w2.scaled(1.0 - c));
    let vm = evaluate(metric, &mix, pool)?;
    let scale = v1.abs().max(v2.abs());
    Ok(vm <= c * v1 + (1.0 - c) * v2 + AXIOM_RTOL * scale)
}
