#![allow(dead_code)]

use actsched_core::{Horizon, LtiSystem};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn gauss(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn matrix(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| self.gauss())
    }

    /// Haar-ish orthogonal matrix from the QR of a Gaussian matrix.
    pub fn orthogonal(&mut self, n: usize) -> DMatrix<f64> {
        self.matrix(n, n).qr().q()
    }

    /// `A = G / ||G||_2 * u` with `u` in `[0.8, 1]`, Gaussian `B`.
    pub fn system(&mut self, n: usize, m: usize) -> LtiSystem {
        let g = self.matrix(n, n);
        let norm = g.clone().svd(false, false).singular_values.max();
        let a = g * (self.range(0.8, 1.0) / norm);
        LtiSystem::new(a, self.matrix(n, m)).unwrap()
    }

    /// Positive-definite matrix with condition number at most `cond`.
    pub fn spd(&mut self, n: usize, cond: f64) -> DMatrix<f64> {
        let q = self.orthogonal(n);
        let d = DVector::from_fn(n, |_, _| cond.powf(self.uniform()));
        let m = &q * DMatrix::from_diagonal(&d) * q.transpose();
        (&m + m.transpose()) * 0.5
    }

    /// Random rank-one PSD perturbations `sum v v^T`.
    pub fn psd_terms(&mut self, n: usize, count: usize) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(n, n);
        for _ in 0..count {
            let v = DVector::from_fn(n, |_, _| self.gauss());
            acc += &v * v.transpose();
        }
        acc
    }
}

/// A controllable random system with a budget strictly between the state
/// dimension and the column count.
pub struct Instance {
    pub sys: LtiSystem,
    pub t: Horizon,
    pub kappa: usize,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.sys.state_dim()
    }

    pub fn m(&self) -> usize {
        self.sys.input_count()
    }

    pub fn d(&self) -> f64 {
        self.kappa as f64 / self.t.get() as f64
    }
}

/// `count` instances with `n <= max_n`, `2 <= m <= max_m`, `t = 2n` and an
/// integer budget `kappa` in `(max(n, t), m t]`, so that `d = kappa / t > 1`.
pub fn corpus(seed: u64, count: usize, max_n: usize, max_m: usize) -> Vec<Instance> {
    let mut gen = Gen::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = gen.int(2, max_n);
        let m = gen.int(2, max_m);
        let t = 2 * n;
        let sys = gen.system(n, m);
        let ht = Horizon::new(t).unwrap();
        if !actsched_core::system::gramian(&sys, ht).is_positive_definite() {
            continue;
        }
        let lo = n.max(t) + 1;
        let kappa = gen.int(lo, m * t);
        out.push(Instance { sys, t: ht, kappa });
    }
    out
}
