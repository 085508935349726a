//! Deterministic dual-set spectral sparsification.
//!
//! Given two decompositions of identity `sum_i v_i v_i^T = I_n` and
//! `sum_i u_i u_i^T = I_l` over the same `t` indices, [`dual_set`] picks at
//! most `kappa` indices and weights `c_i >= 0` with
//!
//! ```text
//! lambda_min(sum c_i v_i v_i^T) >= (1 - sqrt(n/kappa))^2
//! lambda_max(sum c_i u_i u_i^T) <= (1 + sqrt(l/kappa))^2
//! ```
//!
//! using two moving barriers. At each step the index maximizing
//! `L(v_j) - U(u_j)` among those with `U(u_j) <= L(v_j)` is taken.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{identity_residual, symmetrize, Spectrum};
use crate::{Error, Result};

/// Tolerance on `||V V^T - I||_F` and `||U U^T - I||_F`.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

const DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
enum UpperSet {
    Dense(DMatrix<f64>),
    /// Column `j` is `scale * e_{index[j]}` in `R^dim`.
    ScaledBasis {
        index: Vec<usize>,
        scale: f64,
        dim: usize,
    },
}

/// The pair `(V, U)`: `V` is `n x t`, `U` is `l x t`, both with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionPair {
    v: DMatrix<f64>,
    u: UpperSet,
}

impl DecompositionPair {
    pub fn new(v: DMatrix<f64>, u: DMatrix<f64>) -> Result<Self> {
        check_lower(&v)?;
        if u.ncols() != v.ncols() {
            return Err(Error::DimensionMismatch {
                what: "U columns",
                expected: v.ncols(),
                found: u.ncols(),
            });
        }
        if u.nrows() == 0 || u.nrows() > u.ncols() {
            return Err(Error::InvalidParameter("U needs 1 <= l <= t rows"));
        }
        let residual = identity_residual(&u);
        if !(residual <= DECOMPOSITION_TOL) {
            return Err(Error::NotIdentityDecomposition { residual });
        }
        Ok(DecompositionPair {
            v,
            u: UpperSet::Dense(u),
        })
    }

    /// `U` whose column `j` is `scale * e_{index[j]}`; `U U^T = I` requires
    /// every basis index to be hit exactly `1/scale^2` times.
    pub fn with_scaled_basis(
        v: DMatrix<f64>,
        index: Vec<usize>,
        scale: f64,
        dim: usize,
    ) -> Result<Self> {
        check_lower(&v)?;
        if index.len() != v.ncols() {
            return Err(Error::DimensionMismatch {
                what: "U columns",
                expected: v.ncols(),
                found: index.len(),
            });
        }
        if dim == 0 || dim > index.len() {
            return Err(Error::InvalidParameter("U needs 1 <= l <= t rows"));
        }
        let mut counts = vec![0usize; dim];
        for &i in &index {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, len: dim });
            }
            counts[i] += 1;
        }
        let residual = counts
            .iter()
            .map(|&c| {
                let d = c as f64 * scale * scale - 1.0;
                d * d
            })
            .sum::<f64>()
            .sqrt();
        if !(residual <= DECOMPOSITION_TOL) {
            return Err(Error::NotIdentityDecomposition { residual });
        }
        Ok(DecompositionPair {
            v,
            u: UpperSet::ScaledBasis { index, scale, dim },
        })
    }

    /// `U = I_t`.
    pub fn standard_basis(v: DMatrix<f64>) -> Result<Self> {
        let t = v.ncols();
        DecompositionPair::with_scaled_basis(v, (0..t).collect(), 1.0, t)
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// `U` as a dense matrix.
    pub fn u(&self) -> DMatrix<f64> {
        match &self.u {
            UpperSet::Dense(u) => u.clone(),
            UpperSet::ScaledBasis { index, scale, dim } => {
                let mut u = DMatrix::zeros(*dim, index.len());
                for (j, &i) in index.iter().enumerate() {
                    u[(i, j)] = *scale;
                }
                u
            }
        }
    }

    /// `n`
    pub fn lower_dim(&self) -> usize {
        self.v.nrows()
    }

    /// `l`
    pub fn upper_dim(&self) -> usize {
        match &self.u {
            UpperSet::Dense(u) => u.nrows(),
            UpperSet::ScaledBasis { dim, .. } => *dim,
        }
    }

    /// `t`
    pub fn len(&self) -> usize {
        self.v.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.v.ncols() == 0
    }
}

fn check_lower(v: &DMatrix<f64>) -> Result<()> {
    if v.nrows() == 0 || v.nrows() >= v.ncols() {
        return Err(Error::InvalidParameter("V needs 1 <= n < t"));
    }
    let residual = identity_residual(v);
    if !(residual <= DECOMPOSITION_TOL) {
        return Err(Error::NotIdentityDecomposition { residual });
    }
    Ok(())
}

/// Nonnegative weights over the `t` indices, with at most `kappa` nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    c: Vec<f64>,
    kappa: usize,
}

impl WeightVector {
    pub fn weights(&self) -> &[f64] {
        &self.c
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn support_size(&self) -> usize {
        self.c.iter().filter(|&&x| x > 0.0).count()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.c
    }
}

/// Running matrices and barrier positions of one sparsification step.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierState {
    pub lower_matrix: DMatrix<f64>,
    pub upper_matrix: DMatrix<f64>,
    pub lower_shift: f64,
    pub upper_shift: f64,
    pub lower_step: f64,
    pub upper_step: f64,
    pub iteration: usize,
}

impl BarrierState {
    /// Zero matrices and the barrier positions of iteration `tau` for
    /// budget `kappa` on an `n`/`l` pair.
    pub fn start(n: usize, l: usize, kappa: usize) -> Self {
        let (lower_step, upper_step) = steps(n, l, kappa);
        let (lower_shift, upper_shift) = shifts(n, l, kappa, upper_step, 0);
        BarrierState {
            lower_matrix: DMatrix::zeros(n, n),
            upper_matrix: DMatrix::zeros(l, l),
            lower_shift,
            upper_shift,
            lower_step,
            upper_step,
            iteration: 0,
        }
    }
}

fn steps(n: usize, l: usize, kappa: usize) -> (f64, f64) {
    let k = kappa as f64;
    let upper = (1.0 + (l as f64 / k).sqrt()) / (1.0 - (n as f64 / k).sqrt());
    (1.0, upper)
}

fn shifts(n: usize, l: usize, kappa: usize, upper_step: f64, tau: usize) -> (f64, f64) {
    let k = kappa as f64;
    let tau = tau as f64;
    (
        tau - (k * n as f64).sqrt(),
        upper_step * (tau + (k * l as f64).sqrt()),
    )
}

/// `sum_i 1 / (lambda_i(M) - mu)`; needs `mu < lambda_min(M)`.
pub fn lower_barrier_phi(mu: f64, m: &DMatrix<f64>) -> Result<f64> {
    let spec = Spectrum::of_symmetric(m);
    let lo = spec.values()[0];
    if !(mu < lo) {
        return Err(Error::BarrierViolation {
            shift: mu,
            eigenvalue: lo,
        });
    }
    Ok(spec.values().iter().map(|l| 1.0 / (l - mu)).sum())
}

/// `sum_i 1 / (mu - lambda_i(M))`; needs `mu > lambda_max(M)`.
pub fn upper_barrier_phi(mu: f64, m: &DMatrix<f64>) -> Result<f64> {
    let spec = Spectrum::of_symmetric(m);
    let hi = spec.values()[spec.values().len() - 1];
    if !(mu > hi) {
        return Err(Error::BarrierViolation {
            shift: mu,
            eigenvalue: hi,
        });
    }
    Ok(spec.values().iter().map(|l| 1.0 / (mu - l)).sum())
}

/// Resolvent data of the lower barrier: `(Q, 1/(lambda - mu - delta), den)`.
struct LowerResolvent {
    vectors: DMatrix<f64>,
    inv: DVector<f64>,
    den: f64,
}

impl LowerResolvent {
    fn new(m: &DMatrix<f64>, mu: f64, delta: f64) -> Result<Self> {
        let spec = Spectrum::of_symmetric(m);
        let vals = spec.values();
        if !(mu < vals[0]) {
            return Err(Error::BarrierViolation {
                shift: mu,
                eigenvalue: vals[0],
            });
        }
        let inv = vals.map(|l| 1.0 / (l - mu - delta));
        let phi_now: f64 = vals.iter().map(|l| 1.0 / (l - mu)).sum();
        let den = inv.sum() - phi_now;
        if !(den.abs() >= DENOMINATOR_FLOOR) {
            return Err(Error::DegenerateDenominator { value: den });
        }
        Ok(LowerResolvent {
            vectors: spec.vectors().clone(),
            inv,
            den,
        })
    }

    /// Gains for every column of `v`.
    fn gains(&self, v: &DMatrix<f64>) -> Vec<f64> {
        let p = self.vectors.transpose() * v;
        (0..p.ncols())
            .map(|j| {
                let (mut q2, mut q1) = (0.0, 0.0);
                for i in 0..p.nrows() {
                    let x = p[(i, j)] * p[(i, j)];
                    q1 += x * self.inv[i];
                    q2 += x * self.inv[i] * self.inv[i];
                }
                q2 / self.den - q1
            })
            .collect()
    }
}

/// Resolvent data of the upper barrier: `(1/(mu + delta - lambda), den)`.
struct UpperResolvent {
    inv: DVector<f64>,
    den: f64,
}

impl UpperResolvent {
    /// `vals` are the eigenvalues of the upper matrix.
    fn new(vals: &DVector<f64>, mu: f64, delta: f64) -> Result<Self> {
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(mu > hi) {
            return Err(Error::BarrierViolation {
                shift: mu,
                eigenvalue: hi,
            });
        }
        let inv = vals.map(|l| 1.0 / (mu + delta - l));
        let phi_now: f64 = vals.iter().map(|l| 1.0 / (mu - l)).sum();
        let den = phi_now - inv.sum();
        if !(den.abs() >= DENOMINATOR_FLOOR) {
            return Err(Error::DegenerateDenominator { value: den });
        }
        Ok(UpperResolvent { inv, den })
    }

    fn gain_from_projection(&self, p: impl Iterator<Item = (usize, f64)>) -> f64 {
        let (mut q2, mut q1) = (0.0, 0.0);
        for (i, x) in p {
            let x = x * x;
            q1 += x * self.inv[i];
            q2 += x * self.inv[i] * self.inv[i];
        }
        q2 / self.den + q1
    }
}

/// `v^T R^2 v / (phi(mu+delta) - phi(mu)) - v^T R v` with
/// `R = (A - (mu+delta) I)^{-1}` on the lower barrier of `state`.
pub fn lower_gain(v: &DVector<f64>, state: &BarrierState) -> Result<f64> {
    check_len(v.len(), state.lower_matrix.nrows())?;
    let res = LowerResolvent::new(&state.lower_matrix, state.lower_shift, state.lower_step)?;
    let vm = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    Ok(res.gains(&vm)[0])
}

/// `u^T S^2 u / (phi(mu) - phi(mu+delta)) + u^T S u` with
/// `S = ((mu+delta) I - A)^{-1}` on the upper barrier of `state`.
pub fn upper_gain(u: &DVector<f64>, state: &BarrierState) -> Result<f64> {
    check_len(u.len(), state.upper_matrix.nrows())?;
    let spec = Spectrum::of_symmetric(&state.upper_matrix);
    let res = UpperResolvent::new(spec.values(), state.upper_shift, state.upper_step)?;
    let p = spec.vectors().transpose() * u;
    Ok(res.gain_from_projection(p.iter().copied().enumerate()))
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch {
            what: "vector length",
            expected,
            found,
        });
    }
    Ok(())
}

/// Runs `kappa` barrier steps and returns the rescaled weights.
///
/// Requires `n < kappa <= t`.
pub fn dual_set(pair: &DecompositionPair, kappa: usize) -> Result<WeightVector> {
    let (n, l, t) = (pair.lower_dim(), pair.upper_dim(), pair.len());
    if kappa <= n {
        return Err(Error::InvalidBudget("kappa must exceed the state dimension"));
    }
    if kappa > t {
        return Err(Error::InvalidBudget("kappa exceeds the number of columns"));
    }
    let (delta_lo, delta_up) = steps(n, l, kappa);
    let v = pair.v();
    let mut c = vec![0.0; t];
    let mut lower = DMatrix::<f64>::zeros(n, n);
    let mut upper_dense = match &pair.u {
        UpperSet::Dense(_) => Some(DMatrix::<f64>::zeros(l, l)),
        UpperSet::ScaledBasis { .. } => None,
    };
    let mut upper_diag = DVector::<f64>::zeros(l);

    for tau in 0..kappa {
        let (mu_lo, mu_up) = shifts(n, l, kappa, delta_up, tau);
        let lo = LowerResolvent::new(&lower, mu_lo, delta_lo)?;
        let lgain = lo.gains(v);
        let ugain: Vec<f64> = match (&pair.u, &upper_dense) {
            (UpperSet::Dense(u), Some(au)) => {
                let spec = Spectrum::of_symmetric(au);
                let up = UpperResolvent::new(spec.values(), mu_up, delta_up)?;
                let p = spec.vectors().transpose() * u;
                (0..t)
                    .map(|j| up.gain_from_projection(p.column(j).iter().copied().enumerate()))
                    .collect()
            }
            (UpperSet::ScaledBasis { index, scale, .. }, _) => {
                let up = UpperResolvent::new(&upper_diag, mu_up, delta_up)?;
                index
                    .iter()
                    .map(|&i| up.gain_from_projection(core::iter::once((i, *scale))))
                    .collect()
            }
            _ => unreachable!("upper storage matches the pair kind"),
        };

        let mut best: Option<(usize, f64)> = None;
        for j in 0..t {
            let (lg, ug) = (lgain[j], ugain[j]);
            if ug <= lg && ug + lg > 0.0 {
                let score = lg - ug;
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((j, score));
                }
            }
        }
        let (j, _) = best.ok_or(Error::NoFeasibleIndex { iteration: tau })?;
        let step = 2.0 / (ugain[j] + lgain[j]);
        c[j] += step;
        let vj = v.column(j);
        lower += vj * vj.transpose() * step;
        lower = symmetrize(&lower);
        match (&pair.u, &mut upper_dense) {
            (UpperSet::Dense(u), Some(au)) => {
                let uj = u.column(j);
                *au += uj * uj.transpose() * step;
                *au = symmetrize(au);
            }
            (UpperSet::ScaledBasis { index, scale, .. }, _) => {
                upper_diag[index[j]] += step * scale * scale;
            }
            _ => unreachable!("upper storage matches the pair kind"),
        }
    }

    let factor = (1.0 - (n as f64 / kappa as f64).sqrt()) / kappa as f64;
    for x in &mut c {
        *x *= factor;
    }
    Ok(WeightVector { c, kappa })
}

/// `lambda_min(sum c_i v_i v_i^T)` and `lambda_max(sum c_i u_i u_i^T)`.
pub fn weighted_extremes(pair: &DecompositionPair, c: &WeightVector) -> (f64, f64) {
    let w = DVector::from_column_slice(c.weights()).map(|x| x.sqrt());
    let v = pair.v() * DMatrix::from_diagonal(&w);
    let u = pair.u() * DMatrix::from_diagonal(&w);
    let lo = Spectrum::of_symmetric(&(&v * v.transpose())).values()[0];
    let hs = Spectrum::of_symmetric(&(&u * u.transpose()));
    let hi = hs.values()[hs.values().len() - 1];
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state1(lower: f64, upper: f64, mu_lo: f64, mu_up: f64) -> BarrierState {
        BarrierState {
            lower_matrix: DMatrix::from_element(1, 1, lower),
            upper_matrix: DMatrix::from_element(1, 1, upper),
            lower_shift: mu_lo,
            upper_shift: mu_up,
            lower_step: 1.0,
            upper_step: 1.0,
            iteration: 0,
        }
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn lower_phi_examples() {
        assert_eq!(lower_barrier_phi(0.0, &DMatrix::identity(2, 2)).unwrap(), 2.0);
        assert!((lower_barrier_phi(-1.0, &diag(&[1.0, 3.0])).unwrap() - 0.75).abs() < 1e-15);
        assert!((lower_barrier_phi(-3.0, &DMatrix::zeros(3, 3)).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            lower_barrier_phi(1.0, &DMatrix::identity(2, 2)),
            Err(Error::BarrierViolation { .. })
        ));
    }

    #[test]
    fn upper_phi_examples() {
        assert_eq!(upper_barrier_phi(2.0, &DMatrix::zeros(2, 2)).unwrap(), 1.0);
        assert_eq!(upper_barrier_phi(3.0, &DMatrix::identity(2, 2)).unwrap(), 1.0);
        assert!((upper_barrier_phi(4.0, &diag(&[0.0, 2.0])).unwrap() - 0.75).abs() < 1e-15);
        assert!(upper_barrier_phi(1.0, &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn gain_examples() {
        let s = state1(0.0, 0.0, -2.0, 1.0);
        let one = DVector::from_element(1, 1.0);
        assert!((lower_gain(&one, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!((upper_gain(&one, &s).unwrap() - 1.0).abs() < 1e-15);
        let zero = DVector::zeros(1);
        assert_eq!(lower_gain(&zero, &s).unwrap(), 0.0);
        assert_eq!(upper_gain(&zero, &s).unwrap(), 0.0);
        let two = DVector::from_element(1, 2.0);
        assert!((lower_gain(&two, &s).unwrap() - 4.0).abs() < 1e-14);
        assert!((upper_gain(&two, &s).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_quarter_columns() {
        let v = DMatrix::from_element(1, 4, 0.5);
        let pair = DecompositionPair::new(v.clone(), v).unwrap();
        let c = dual_set(&pair, 2).unwrap();
        assert!(c.support_size() <= 2);
        let total: f64 = c.weights().iter().map(|x| x * 0.25).sum();
        let lo = (1.0 - 0.5f64.sqrt()).powi(2);
        let hi = (1.0 + 0.5f64.sqrt()).powi(2);
        assert!(total >= lo - 1e-12 && total <= hi + 1e-12, "{total}");
    }

    #[test]
    fn first_pick_is_argmax_with_lowest_tie() {
        // four identical columns: every score ties, index 0 must win
        let v = DMatrix::from_element(1, 4, 0.5);
        let pair = DecompositionPair::new(v.clone(), v).unwrap();
        let c = dual_set(&pair, 2).unwrap();
        assert!(c.weights()[0] > 0.0);
    }

    #[test]
    fn standard_basis_matches_dense() {
        let q = DMatrix::from_fn(6, 6, |r, c| ((r * 6 + c) as f64 * 1.3).sin())
            .qr()
            .q();
        let v = q.rows(0, 2).into_owned();
        let fast = DecompositionPair::standard_basis(v.clone()).unwrap();
        let dense = DecompositionPair::new(v, DMatrix::identity(6, 6)).unwrap();
        let a = dual_set(&fast, 4).unwrap();
        let b = dual_set(&dense, 4).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn budget_checked() {
        let v = DMatrix::from_element(1, 4, 0.5);
        let pair = DecompositionPair::new(v.clone(), v).unwrap();
        assert!(matches!(dual_set(&pair, 1), Err(Error::InvalidBudget(_))));
        assert!(matches!(dual_set(&pair, 5), Err(Error::InvalidBudget(_))));
    }

    #[test]
    fn rejects_non_decomposition() {
        let v = DMatrix::from_element(1, 4, 0.6);
        assert!(matches!(
            DecompositionPair::new(v.clone(), v),
            Err(Error::NotIdentityDecomposition { .. })
        ));
        let v = DMatrix::from_element(1, 4, 0.5);
        assert!(DecompositionPair::with_scaled_basis(v, vec![0, 0, 1, 1], 1.0, 2).is_err());
    }
}
