//! Linear systems, controllability matrices and Gramians.
//!
//! Column convention: column `(j, k)` of the controllability matrix holds
//! `A^k b_j` and sits at flat position `j + m*k` (both 0-based). A weight on
//! that column is realized by the schedule entry `s_j(t-k-1)`, so that
//! `W_s = sum_k sum_j s_j(k)^2 (A^{t-k-1} b_j)(A^{t-k-1} b_j)^T` holds with
//! the actual activation time.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, DVectorView};

use crate::linalg::{rel_frobenius, symmetrize, Spectrum};
use crate::{Error, Result, CONTROLLABILITY_RTOL};

/// Slack applied on both ends of the `[1-eps, 1+eps]` sandwich test.
pub const SANDWICH_SLACK: f64 = 1e-8;

/// Below this `lambda_min/lambda_max` ratio spectral data are recomputed
/// from the Gramian's factor instead of the formed matrix.
const FACTOR_ROUTE_RATIO: f64 = 1e-6;

const SYMMETRY_RTOL: f64 = 1e-10;
const PSD_RTOL: f64 = 1e-10;

/// The pair `(A, B)` of `x(k+1) = A x(k) + B u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::InvalidParameter("state dimension must be at least 1"));
        }
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                what: "A columns",
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch {
                what: "B rows",
                expected: a.nrows(),
                found: b.nrows(),
            });
        }
        if b.ncols() == 0 {
            return Err(Error::InvalidParameter("input count must be at least 1"));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("system matrices must be finite"));
        }
        Ok(LtiSystem { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `n`
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// `m`
    pub fn input_count(&self) -> usize {
        self.b.ncols()
    }

    /// Same dynamics, inputs restricted to `inputs` (in the given order).
    pub fn with_inputs(&self, inputs: &[usize]) -> Result<LtiSystem> {
        let m = self.input_count();
        if let Some(&bad) = inputs.iter().find(|&&j| j >= m) {
            return Err(Error::IndexOutOfRange { index: bad, len: m });
        }
        let b = DMatrix::from_fn(self.state_dim(), inputs.len(), |r, c| self.b[(r, inputs[c])]);
        LtiSystem::new(self.a.clone(), b)
    }
}

/// Number of time steps `t >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Horizon(usize);

impl Horizon {
    pub fn new(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1"));
        }
        Ok(Horizon(t))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// `[B, AB, ..., A^{t-1}B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllabilityMatrix {
    matrix: DMatrix<f64>,
    inputs: usize,
    horizon: usize,
}

impl ControllabilityMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Flat position of `A^power b_input`.
    pub fn flat_index(&self, input: usize, power: usize) -> usize {
        input + self.inputs * power
    }

    /// Inverse of [`ControllabilityMatrix::flat_index`]: `(input, power)`.
    pub fn split_index(&self, flat: usize) -> (usize, usize) {
        (flat % self.inputs, flat / self.inputs)
    }

    /// Schedule time at which the column `A^power b_j` is injected.
    pub fn schedule_time(&self, power: usize) -> usize {
        self.horizon - power - 1
    }

    /// `A^power b_input`.
    pub fn column(&self, input: usize, power: usize) -> DVectorView<'_, f64> {
        self.matrix.column(self.flat_index(input, power))
    }

    /// Gramian of the full matrix, `C C^T`.
    pub fn gramian(&self) -> Gramian {
        Gramian::from_factor(self.matrix.clone())
    }

    /// `W_s` for a schedule over this matrix's horizon and inputs.
    pub fn scheduled_gramian(&self, schedule: &Schedule) -> Result<Gramian> {
        if schedule.inputs() != self.inputs {
            return Err(Error::DimensionMismatch {
                what: "schedule rows",
                expected: self.inputs,
                found: schedule.inputs(),
            });
        }
        if schedule.horizon() != self.horizon {
            return Err(Error::DimensionMismatch {
                what: "schedule columns",
                expected: self.horizon,
                found: schedule.horizon(),
            });
        }
        let n = self.state_dim();
        let mut cols = Vec::new();
        for time in 0..self.horizon {
            let power = self.horizon - time - 1;
            for j in 0..self.inputs {
                let s = schedule.scaling(j, time);
                if s > 0.0 {
                    cols.push(self.column(j, power) * s);
                }
            }
        }
        if cols.is_empty() {
            return Ok(Gramian::zeros(n));
        }
        Ok(Gramian::from_factor(DMatrix::from_columns(&cols)))
    }
}

/// Builds `[B, AB, ..., A^{t-1}B]` by repeated left-multiplication with `A`.
pub fn controllability_matrix(sys: &LtiSystem, t: Horizon) -> ControllabilityMatrix {
    let (n, m) = (sys.state_dim(), sys.input_count());
    let t = t.get();
    let mut matrix = DMatrix::zeros(n, m * t);
    let mut block = sys.b().clone();
    for k in 0..t {
        matrix.columns_mut(m * k, m).copy_from(&block);
        if k + 1 < t {
            block = sys.a() * &block;
        }
    }
    ControllabilityMatrix {
        matrix,
        inputs: m,
        horizon: t,
    }
}

/// `W(t) = sum_{i<t} A^i B B^T (A^i)^T`.
pub fn gramian(sys: &LtiSystem, t: Horizon) -> Gramian {
    controllability_matrix(sys, t).gramian()
}

/// `W_s(t)` of [`ControllabilityMatrix::scheduled_gramian`].
pub fn scheduled_gramian(sys: &LtiSystem, schedule: &Schedule, t: Horizon) -> Result<Gramian> {
    controllability_matrix(sys, t).scheduled_gramian(schedule)
}

/// Symmetric positive-semidefinite Gramian.
///
/// When the Gramian was produced as `F F^T` the factor is kept; spectral
/// queries on badly conditioned Gramians go through it.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    matrix: DMatrix<f64>,
    factor: Option<DMatrix<f64>>,
}

impl Gramian {
    /// Validates symmetry (relative Frobenius `1e-10`) and semidefiniteness
    /// (eigenvalues `>= -1e-10 ||W||_2`), then stores the symmetrized matrix.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                what: "Gramian columns",
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("Gramian entries must be finite"));
        }
        let sym = symmetrize(&matrix);
        if sym.norm() > 0.0 && rel_frobenius(&matrix, &sym) > SYMMETRY_RTOL {
            return Err(Error::InvalidParameter("Gramian is not symmetric"));
        }
        let spec = Spectrum::of_symmetric(&sym);
        let scale = spec.values().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if spec.values().iter().any(|&v| v < -PSD_RTOL * scale) {
            return Err(Error::InvalidParameter("Gramian is not positive semidefinite"));
        }
        Ok(Gramian {
            matrix: sym,
            factor: None,
        })
    }

    /// `F F^T`, keeping `F`.
    pub fn from_factor(factor: DMatrix<f64>) -> Self {
        if factor.ncols() == 0 {
            return Gramian::zeros(factor.nrows());
        }
        let matrix = symmetrize(&(&factor * factor.transpose()));
        Gramian {
            matrix,
            factor: Some(factor),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Gramian {
            matrix: DMatrix::zeros(n, n),
            factor: None,
        }
    }

    pub(crate) fn from_parts(matrix: DMatrix<f64>, factor: Option<DMatrix<f64>>) -> Self {
        Gramian { matrix, factor }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn factor(&self) -> Option<&DMatrix<f64>> {
        self.factor.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigen-pairs, ascending. Uses the factor when the formed matrix is
    /// too ill-conditioned to resolve its small eigenvalues.
    pub fn spectrum(&self) -> Spectrum {
        let direct = Spectrum::of_symmetric(&self.matrix);
        match &self.factor {
            Some(f) if direct.condition_ratio() < FACTOR_ROUTE_RATIO => Spectrum::of_factor(f),
            _ => direct,
        }
    }

    /// `lambda_min > CONTROLLABILITY_RTOL * lambda_max`.
    pub fn is_positive_definite(&self) -> bool {
        self.spectrum().is_positive_definite(CONTROLLABILITY_RTOL)
    }

    /// Spectrum, or `SingularGramian` if not positive definite.
    pub fn definite_spectrum(&self) -> Result<Spectrum> {
        let spec = self.spectrum();
        if spec.is_positive_definite(CONTROLLABILITY_RTOL) {
            Ok(spec)
        } else {
            Err(Error::SingularGramian {
                ratio: spec.condition_ratio(),
            })
        }
    }

    /// `kappa W`.
    pub fn scaled(&self, kappa: f64) -> Gramian {
        Gramian {
            matrix: &self.matrix * kappa,
            factor: self.factor.as_ref().map(|f| f * kappa.abs().sqrt()),
        }
    }

    /// `W + alpha I`.
    pub fn ridged(&self, alpha: f64) -> Gramian {
        let n = self.dim();
        let matrix = &self.matrix + DMatrix::identity(n, n) * alpha;
        let factor = self.factor.as_ref().map(|f| {
            let mut g = DMatrix::zeros(n, f.ncols() + n);
            g.columns_mut(0, f.ncols()).copy_from(f);
            g.columns_mut(f.ncols(), n)
                .copy_from(&(DMatrix::identity(n, n) * alpha.sqrt()));
            g
        });
        Gramian { matrix, factor }
    }

    /// `W + other`, concatenating factors when both have one.
    pub fn sum(&self, other: &Gramian) -> Gramian {
        let matrix = &self.matrix + &other.matrix;
        let factor = match (&self.factor, &other.factor) {
            (Some(f), Some(g)) => {
                let mut h = DMatrix::zeros(f.nrows(), f.ncols() + g.ncols());
                h.columns_mut(0, f.ncols()).copy_from(f);
                h.columns_mut(f.ncols(), g.ncols()).copy_from(g);
                Some(h)
            }
            _ => None,
        };
        Gramian { matrix, factor }
    }
}

/// `W^{-1/2}`, symmetric. Fails with `SingularGramian` if `W` is not
/// positive definite at [`CONTROLLABILITY_RTOL`].
pub fn gramian_sqrt_inv(w: &Gramian) -> Result<DMatrix<f64>> {
    Ok(w.definite_spectrum()?.inverse_sqrt())
}

/// Eigenvalues (ascending) of `W^{-1/2} W_s W^{-1/2}`.
pub fn relative_spectrum(w: &Gramian, ws: &Gramian) -> Result<DVector<f64>> {
    if w.dim() != ws.dim() {
        return Err(Error::DimensionMismatch {
            what: "Gramian size",
            expected: w.dim(),
            found: ws.dim(),
        });
    }
    let n = w.dim();
    let whiten = gramian_sqrt_inv(w)?;
    let spec = match ws.factor() {
        Some(g) => Spectrum::of_factor(&(&whiten * g)),
        None => Spectrum::of_symmetric(&(&whiten * ws.matrix() * &whiten)),
    };
    let k = spec.values().len();
    Ok(DVector::from_fn(n, |i, _| {
        if i < n - k {
            0.0
        } else {
            spec.values()[i - (n - k)]
        }
    }))
}

/// `(1-eps) W <= W_s <= (1+eps) W` up to [`SANDWICH_SLACK`].
pub fn is_eps_d_approximation(w: &Gramian, ws: &Gramian, eps: f64) -> Result<bool> {
    let rel = relative_spectrum(w, ws)?;
    let lo = rel.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(lo >= 1.0 - eps - SANDWICH_SLACK && hi <= 1.0 + eps + SANDWICH_SLACK)
}

/// Nonnegative scalings `s_i(k)` on an `m x t` grid (rows are inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    s: DMatrix<f64>,
}

impl Schedule {
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        if s.nrows() == 0 || s.ncols() == 0 {
            return Err(Error::InvalidParameter("schedule grid must be non-empty"));
        }
        if s.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidParameter("scalings must be finite and nonnegative"));
        }
        Ok(Schedule { s })
    }

    pub fn zeros(m: usize, t: usize) -> Self {
        Schedule {
            s: DMatrix::zeros(m, t),
        }
    }

    /// Every input active with unit scaling at every time.
    pub fn full(m: usize, t: usize) -> Self {
        Schedule {
            s: DMatrix::from_element(m, t, 1.0),
        }
    }

    /// Places the squared scaling `energies[j + m*k]` of column `A^k b_j`
    /// at `s_j(t-k-1)`.
    pub fn from_column_energies(energies: &[f64], m: usize, t: usize) -> Result<Self> {
        if energies.len() != m * t {
            return Err(Error::DimensionMismatch {
                what: "column weights",
                expected: m * t,
                found: energies.len(),
            });
        }
        let mut s = DMatrix::zeros(m, t);
        for (flat, &e) in energies.iter().enumerate() {
            let (j, k) = (flat % m, flat / m);
            s[(j, t - k - 1)] = e.max(0.0).sqrt();
        }
        Schedule::new(s)
    }

    pub fn inputs(&self) -> usize {
        self.s.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.s.ncols()
    }

    pub fn scaling(&self, input: usize, time: usize) -> f64 {
        self.s[(input, time)]
    }

    pub fn scalings(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn squared(&self) -> DMatrix<f64> {
        self.s.map(|x| x * x)
    }

    /// `sigma_k`
    pub fn active_set(&self, time: usize) -> Vec<usize> {
        (0..self.inputs())
            .filter(|&i| self.s[(i, time)] > 0.0)
            .collect()
    }

    /// Number of `(i, k)` with `s_i(k) > 0`.
    pub fn support_size(&self) -> usize {
        self.s.iter().filter(|&&x| x > 0.0).count()
    }

    /// `d = sum_k |sigma_k| / t`.
    pub fn average_active(&self) -> f64 {
        self.support_size() as f64 / self.horizon() as f64
    }

    pub fn is_binary(&self) -> bool {
        self.s.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    /// `max_{i,k} s_i(k)^2`
    pub fn max_squared(&self) -> f64 {
        self.s.iter().fold(0.0, |a, &x| a.max(x * x))
    }

    /// `max_i sum_k s_i(k)^2`
    pub fn max_input_energy(&self) -> f64 {
        (0..self.inputs())
            .map(|i| self.s.row(i).iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max_k sum_i s_i(k)^2`
    pub fn max_time_energy(&self) -> f64 {
        (0..self.horizon())
            .map(|k| self.s.column(k).iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `sum_{i,k} s_i(k)^2`
    pub fn total_energy(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum()
    }

    /// Copy with all squared scalings multiplied so that their sum is `total`.
    pub fn normalized_energy(&self, total: f64) -> Result<Schedule> {
        let current = self.total_energy();
        if current <= 0.0 || !(total > 0.0) {
            return Err(Error::InvalidParameter("cannot normalize an empty schedule"));
        }
        Schedule::new(&self.s * (total / current).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{example1_system, ExampleOneInputs};

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    #[test]
    fn identity_dynamics_repeat_b() {
        let sys = LtiSystem::new(eye(2), eye(2)).unwrap();
        let c = controllability_matrix(&sys, Horizon::new(3).unwrap());
        let expected = DMatrix::from_fn(2, 6, |r, col| if col % 2 == r { 1.0 } else { 0.0 });
        assert_eq!(c.matrix(), &expected);
    }

    #[test]
    fn nilpotent_second_block_vanishes() {
        let sys = LtiSystem::new(DMatrix::zeros(2, 2), eye(2)).unwrap();
        let c = controllability_matrix(&sys, Horizon::new(2).unwrap());
        assert_eq!(c.matrix().columns(0, 2), eye(2));
        assert_eq!(c.matrix().columns(2, 2), DMatrix::<f64>::zeros(2, 2));
    }

    #[test]
    fn example_one_controllability_rank() {
        let sys = example1_system(ExampleOneInputs::Full);
        let c = controllability_matrix(&sys, Horizon::new(8).unwrap());
        let sv = c.matrix().clone().svd(false, false).singular_values;
        let max = sv.max();
        assert_eq!(sv.iter().filter(|&&s| s > 1e-12 * max).count(), 8);
    }

    #[test]
    fn gramian_of_identity_dynamics() {
        let sys = LtiSystem::new(eye(2), eye(2)).unwrap();
        let w = gramian(&sys, Horizon::new(3).unwrap());
        assert!(rel_frobenius(w.matrix(), &(eye(2) * 3.0)) < 1e-15);
    }

    #[test]
    fn uniform_schedule_scales_gramian() {
        let sys = example1_system(ExampleOneInputs::Full);
        let t = Horizon::new(8).unwrap();
        let w = gramian(&sys, t);
        let ones = scheduled_gramian(&sys, &Schedule::full(8, 8), t).unwrap();
        assert!(rel_frobenius(ones.matrix(), w.matrix()) < 1e-12);
        let c = 0.7;
        let scaled = Schedule::new(DMatrix::from_element(8, 8, c)).unwrap();
        let ws = scheduled_gramian(&sys, &scaled, t).unwrap();
        assert!(rel_frobenius(ws.matrix(), &(w.matrix() * (c * c))) < 1e-12);
    }

    #[test]
    fn input_one_alone_is_uncontrollable() {
        let sys = example1_system(ExampleOneInputs::Full);
        let t = Horizon::new(8).unwrap();
        let mut s = DMatrix::zeros(8, 8);
        s.row_mut(0).fill(1.0);
        let ws = scheduled_gramian(&sys, &Schedule::new(s).unwrap(), t).unwrap();
        assert!(!ws.is_positive_definite());
    }

    #[test]
    fn schedule_dimension_checked() {
        let sys = LtiSystem::new(eye(2), eye(2)).unwrap();
        let err = scheduled_gramian(&sys, &Schedule::full(3, 2), Horizon::new(2).unwrap());
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sqrt_inv_examples() {
        let m = gramian_sqrt_inv(&Gramian::new(eye(3) * 4.0).unwrap()).unwrap();
        assert!(rel_frobenius(&m, &(eye(3) * 0.5)) < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 9.0]));
        let m = gramian_sqrt_inv(&Gramian::new(d).unwrap()).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 1.0 / 3.0]));
        assert!(rel_frobenius(&m, &expected) < 1e-15);
    }

    #[test]
    fn sqrt_inv_whitens_example_one_factor() {
        let sys = example1_system(ExampleOneInputs::Full);
        let c = controllability_matrix(&sys, Horizon::new(8).unwrap());
        let w = c.gramian();
        let m = gramian_sqrt_inv(&w).unwrap();
        let v = &m * c.matrix();
        assert!(crate::linalg::identity_residual(&v) < 1e-8);
    }

    #[test]
    fn sqrt_inv_rejects_singular() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 0.0]));
        assert!(matches!(
            gramian_sqrt_inv(&Gramian::new(d).unwrap()),
            Err(Error::SingularGramian { .. })
        ));
    }

    #[test]
    fn sandwich_examples() {
        let w = Gramian::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        assert!(is_eps_d_approximation(&w, &w, 0.0).unwrap());
        let half = w.scaled(0.5);
        assert!(!is_eps_d_approximation(&w, &half, 0.4).unwrap());
        assert!(is_eps_d_approximation(&w, &half, 0.5).unwrap());
    }

    #[test]
    fn column_energies_reverse_time() {
        // m = 2, t = 3: flat 1 is (j=1, k=0) -> time 2; flat 4 is (j=0, k=2) -> time 0
        let mut e = [0.0; 6];
        e[1] = 4.0;
        e[4] = 9.0;
        let s = Schedule::from_column_energies(&e, 2, 3).unwrap();
        assert_eq!(s.scaling(1, 2), 2.0);
        assert_eq!(s.scaling(0, 0), 3.0);
        assert_eq!(s.support_size(), 2);
        assert!((s.average_active() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.active_set(0), alloc::vec![0]);
    }

    #[test]
    fn schedule_rejects_negative() {
        assert!(Schedule::new(DMatrix::from_element(1, 1, -1.0)).is_err());
    }
}
