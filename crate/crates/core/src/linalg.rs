//! Dense symmetric eigen helpers shared by the rest of the crate.

use nalgebra::{DMatrix, DVector};

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `||a - b||_F / ||b||_F`, with `||b||_F` floored at the smallest normal float.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `||M M^T - I||_F`.
pub fn identity_residual(m: &DMatrix<f64>) -> f64 {
    let gram = m * m.transpose();
    (gram - DMatrix::identity(m.nrows(), m.nrows())).norm()
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Used instead of `SymmetricEigen`, whose results on some well-conditioned
/// inputs reconstruct the matrix to only ~1e-3 relative accuracy.
pub fn jacobi_eigen(mut a: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        let mut diag = 0.0;
        for c in 0..n {
            for r in 0..n {
                if r == c {
                    diag += a[(r, c)] * a[(r, c)];
                } else {
                    off += a[(r, c)] * a[(r, c)];
                }
            }
        }
        if off <= (f64::EPSILON * f64::EPSILON) * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                // skip rotations that cannot change either diagonal entry
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs().min(aqq.abs())) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diagonal(), v)
}

/// Eigen-pairs of a symmetric positive-semidefinite matrix, sorted ascending.
///
/// May be *partial*: when built from a factor with fewer columns than rows,
/// only the `k < dim` leading pairs are stored and the remaining eigenvalues
/// are exactly zero.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    dim: usize,
}

impl Spectrum {
    /// Full eigendecomposition of the symmetrized input.
    pub fn of_symmetric(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let (evals, evecs) = jacobi_eigen(symmetrize(m));
        let mut order: alloc::vec::Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| evals[i].total_cmp(&evals[j]));
        let values = DVector::from_iterator(dim, order.iter().map(|&i| evals[i]));
        let vectors = DMatrix::from_fn(dim, dim, |r, c| evecs[(r, order[c])]);
        Spectrum {
            values,
            vectors,
            dim,
        }
    }

    /// Spectrum of `F F^T` computed without forming the product.
    ///
    /// For `p >= n` this goes through `F^T = Q R` and the SVD of `R^T`, so
    /// small eigenvalues keep relative accuracy roughly `eps * cond(F)`
    /// instead of `eps * cond(F)^2`.
    pub fn of_factor(f: &DMatrix<f64>) -> Self {
        let (n, p) = f.shape();
        let (u, sigma) = if p >= n {
            let r = f.transpose().qr().r();
            let svd = r.transpose().svd(true, false);
            (svd.u.expect("u requested"), svd.singular_values)
        } else {
            let svd = f.clone().svd(true, false);
            (svd.u.expect("u requested"), svd.singular_values)
        };
        let k = sigma.len();
        let mut order: alloc::vec::Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| sigma[i].total_cmp(&sigma[j]));
        let values = DVector::from_iterator(k, order.iter().map(|&i| sigma[i] * sigma[i]));
        let vectors = DMatrix::from_fn(n, k, |r, c| u[(r, order[c])]);
        Spectrum {
            values,
            vectors,
            dim: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored eigenvalues, ascending. Shorter than `dim` for partial spectra.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Eigenvectors matching [`Spectrum::values`], one per column.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn is_complete(&self) -> bool {
        self.values.len() == self.dim
    }

    pub fn min(&self) -> f64 {
        if !self.is_complete() || self.values.is_empty() {
            0.0
        } else {
            self.values[0]
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `lambda_min / lambda_max` (0 for the zero matrix).
    pub fn condition_ratio(&self) -> f64 {
        let max = self.max();
        if max <= 0.0 {
            0.0
        } else {
            self.min() / max
        }
    }

    pub fn is_positive_definite(&self, rtol: f64) -> bool {
        let max = self.max();
        max > 0.0 && self.min() > rtol * max
    }

    pub fn trace(&self) -> f64 {
        self.values.sum()
    }

    /// `Q diag(g(lambda)) Q^T` over the stored pairs.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (c, &lam) in self.values.iter().enumerate() {
            let w = g(lam);
            scaled.column_mut(c).scale_mut(w);
        }
        &scaled * self.vectors.transpose()
    }

    /// `W^{-1/2}`; the caller must have checked positive definiteness.
    pub fn inverse_sqrt(&self) -> DMatrix<f64> {
        symmetrize(&self.apply(|l| 1.0 / l.sqrt()))
    }
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|c| m.column(c).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = m * scale;
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &x / k as f64;
        sum += &term;
        if term.norm() <= f64::EPSILON * 1e-3 * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
