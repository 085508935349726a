//! Benchmark systems.
//!
//! * a fixed 8-state system whose diagonal dynamics are coupled through the
//!   last state,
//! * consensus networks `A = I - L/n` over random geometric graphs,
//! * linearized swing-equation power networks discretized with a zero-order hold.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::expm;
use crate::system::LtiSystem;
use crate::{Error, Result};

#[rustfmt::skip]
const EXAMPLE1_A: [f64; 64] = [
    1.0,  0.0,  0.0,  0.0, 0.0, 0.0, 0.0, -3.5,
    0.0,  2.0,  0.0,  0.0, 0.0, 0.0, 0.0, -3.0,
    0.0,  0.0,  3.0,  0.0, 0.0, 0.0, 0.0, -2.5,
    0.75, 0.5,  0.0,  4.0, 0.0, 0.0, 0.0, 1.625,
    0.0,  0.75, 0.5,  0.0, 5.0, 0.0, 0.0, 1.375,
    1.25, 0.0,  0.75, 0.0, 0.0, 6.0, 0.0, 1.5,
    1.5,  1.25, 1.0,  0.0, 0.0, 0.0, 7.0, 2.25,
    0.0,  0.0,  0.0,  0.0, 0.0, 0.0, 0.0, 8.0,
];

/// Input matrix of the 8-state example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleOneInputs {
    /// `B = I_8`.
    Full,
    /// `B = diag(1, 1, 0, 0, 0, 0, 0, 1)`.
    Minimal,
}

/// The fixed 8-state system.
pub fn example1_system(inputs: ExampleOneInputs) -> LtiSystem {
    let a = DMatrix::from_row_slice(8, 8, &EXAMPLE1_A);
    let b = match inputs {
        ExampleOneInputs::Full => DMatrix::identity(8, 8),
        ExampleOneInputs::Minimal => DMatrix::from_diagonal(&DVector::from_column_slice(&[
            1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ])),
    };
    LtiSystem::new(a, b).expect("fixed example is well formed")
}

/// Uniform double in `[0, 1)` from the top 53 bits of a draw.
pub(crate) fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Points in the unit square joined when at most `radius` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    positions: Vec<[f64; 2]>,
    radius: f64,
    laplacian: DMatrix<f64>,
}

impl GeometricGraph {
    pub fn from_positions(positions: Vec<[f64; 2]>, radius: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParameter("graph needs at least one node"));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive"));
        }
        let n = positions.len();
        let mut laplacian = DMatrix::zeros(n, n);
        for u in 0..n {
            for v in u + 1..n {
                let dx = positions[u][0] - positions[v][0];
                let dy = positions[u][1] - positions[v][1];
                if (dx * dx + dy * dy).sqrt() <= radius {
                    laplacian[(u, v)] = -1.0;
                    laplacian[(v, u)] = -1.0;
                    laplacian[(u, u)] += 1.0;
                    laplacian[(v, v)] += 1.0;
                }
            }
        }
        Ok(GeometricGraph {
            positions,
            radius,
            laplacian,
        })
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count())
            .map(|i| self.laplacian[(i, i)] as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && self.laplacian[(u, v)] != 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// `n` points drawn uniformly (x then y) from a ChaCha8 stream seeded by `seed`.
pub fn random_geometric_graph(n: usize, radius: f64, seed: u64) -> Result<GeometricGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| {
            let x = unit_f64(&mut rng);
            let y = unit_f64(&mut rng);
            [x, y]
        })
        .collect();
    GeometricGraph::from_positions(positions, radius)
}

/// `A = I - L/n`, `B = I`: every node is a potential leader.
pub fn consensus_system(graph: &GeometricGraph) -> LtiSystem {
    let n = graph.node_count();
    let a = DMatrix::identity(n, n) - graph.laplacian() / n as f64;
    LtiSystem::new(a, DMatrix::identity(n, n)).expect("square by construction")
}

/// Linearized swing dynamics `M theta'' + D theta' = -L theta + u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingParameters {
    inertia: DVector<f64>,
    damping: DVector<f64>,
    laplacian: DMatrix<f64>,
    sample_time: f64,
}

impl SwingParameters {
    pub fn new(
        inertia: DVector<f64>,
        damping: DVector<f64>,
        laplacian: DMatrix<f64>,
        sample_time: f64,
    ) -> Result<Self> {
        let g = inertia.len();
        if g == 0 {
            return Err(Error::InvalidParameter("need at least one generator"));
        }
        if damping.len() != g {
            return Err(Error::DimensionMismatch {
                what: "damping length",
                expected: g,
                found: damping.len(),
            });
        }
        if laplacian.shape() != (g, g) {
            return Err(Error::DimensionMismatch {
                what: "coupling Laplacian size",
                expected: g,
                found: laplacian.nrows(),
            });
        }
        if inertia.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter("inertia must be positive"));
        }
        if damping.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter("damping must be positive"));
        }
        if !(sample_time > 0.0) {
            return Err(Error::InvalidParameter("sample time must be positive"));
        }
        let scale = laplacian.norm().max(1.0);
        if (&laplacian - laplacian.transpose()).norm() > 1e-12 * scale
            || laplacian.row_sum().norm() > 1e-12 * scale
        {
            return Err(Error::InvalidParameter(
                "coupling must be a symmetric Laplacian with zero row sums",
            ));
        }
        Ok(SwingParameters {
            inertia,
            damping,
            laplacian,
            sample_time,
        })
    }

    /// Laplacian with unit stiffness on the listed lines.
    pub fn line_laplacian(g: usize, lines: &[(usize, usize)]) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(g, g);
        for &(u, v) in lines {
            l[(u, v)] -= 1.0;
            l[(v, u)] -= 1.0;
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
        }
        l
    }

    /// `g` generators on a path, every parameter equal to one.
    pub fn chain(g: usize, sample_time: f64) -> Result<Self> {
        let lines: Vec<_> = (1..g).map(|i| (i - 1, i)).collect();
        SwingParameters::new(
            DVector::from_element(g, 1.0),
            DVector::from_element(g, 1.0),
            Self::line_laplacian(g, &lines),
            sample_time,
        )
    }

    /// Ten generators with unit inertia and damping 0.1 on a ring with the
    /// chords (0,5), (2,7), (4,9), sampled every 0.2 s.
    pub fn ten_machine() -> Self {
        let mut lines: Vec<_> = (0..10).map(|i| (i, (i + 1) % 10)).collect();
        lines.extend([(0, 5), (2, 7), (4, 9)]);
        SwingParameters::new(
            DVector::from_element(10, 1.0),
            DVector::from_element(10, 0.1),
            Self::line_laplacian(10, &lines),
            0.2,
        )
        .expect("default parameters are valid")
    }

    pub fn generators(&self) -> usize {
        self.inertia.len()
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    /// Continuous-time pair `([0 I; -M^{-1} L  -M^{-1} D], [0; M^{-1}])`.
    pub fn continuous(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let g = self.generators();
        let minv = DMatrix::from_diagonal(&self.inertia.map(|x| 1.0 / x));
        let mut a = DMatrix::zeros(2 * g, 2 * g);
        a.view_mut((0, g), (g, g)).fill_with_identity();
        a.view_mut((g, 0), (g, g)).copy_from(&(-&minv * &self.laplacian));
        a.view_mut((g, g), (g, g))
            .copy_from(&(-&minv * DMatrix::from_diagonal(&self.damping)));
        let mut b = DMatrix::zeros(2 * g, g);
        b.view_mut((g, 0), (g, g)).copy_from(&minv);
        (a, b)
    }
}

impl Default for SwingParameters {
    fn default() -> Self {
        SwingParameters::ten_machine()
    }
}

/// Zero-order-hold discretization of `(A_c, B_c)` with step `dt`:
/// `[A B; 0 I] = exp(dt [A_c B_c; 0 0])`.
pub fn zoh(ac: &DMatrix<f64>, bc: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = bc.shape();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(bc * dt));
    let e = expm(&aug);
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    )
}

/// Discrete swing model with `2g` states (angles, then frequencies) and `g` inputs.
pub fn swing_system(params: &SwingParameters) -> LtiSystem {
    let (ac, bc) = params.continuous();
    let (a, b) = zoh(&ac, &bc, params.sample_time);
    LtiSystem::new(a, b).expect("square by construction")
}
