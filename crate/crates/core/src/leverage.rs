//! Leverage scores and the randomized leverage-score scheduler.
//!
//! The leverage score of a column `c` of `C(t)` is `c^T (C C^T)^+ c`; all
//! scores lie in `[0, 1]` and sum to `rank C`. Sampling `ceil(d t)` columns
//! with probability proportional to their score and weighting each draw by
//! `1 / (M pi)` gives an unbiased estimate of the Gramian.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::system::{controllability_matrix, ControllabilityMatrix, Horizon, LtiSystem, Schedule};
use crate::{Error, Result};

/// Relative singular-value cutoff of the pseudo-inverse.
pub const PINV_RTOL: f64 = 1e-12;

/// Constant `c0` in the sampling budget `c0 n ln n / (eps^2 t)`.
pub const SAMPLING_CONSTANT: f64 = 4.0;

/// Scores of every column, `m x t`, entry `(j, k)` for `A^k b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageTable {
    scores: DMatrix<f64>,
    total: f64,
}

impl LeverageTable {
    /// Scores indexed by `(input, power)`.
    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    /// Sum of all scores, equal to `rank C` up to roundoff.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Group score of one input, the sum of its column scores.
    pub fn group(&self, input: usize) -> Result<f64> {
        if input >= self.scores.nrows() {
            return Err(Error::IndexOutOfRange {
                index: input,
                len: self.scores.nrows(),
            });
        }
        Ok(self.scores.row(input).sum())
    }
}

/// Scores of an already built controllability matrix.
pub fn leverage_table(c: &ControllabilityMatrix) -> LeverageTable {
    let spec = c.gramian().spectrum();
    let vals = spec.values();
    let cutoff = PINV_RTOL * PINV_RTOL * spec.max();
    let keep: alloc::vec::Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > cutoff).collect();
    let basis = DMatrix::from_fn(c.state_dim(), keep.len(), |r, k| spec.vectors()[(r, keep[k])]);
    let y = basis.transpose() * c.matrix();
    let (m, t) = (c.inputs(), c.horizon());
    let mut scores = DMatrix::zeros(m, t);
    for col in 0..y.ncols() {
        let raw: f64 = keep
            .iter()
            .enumerate()
            .map(|(r, &k)| y[(r, col)] * y[(r, col)] / vals[k])
            .sum();
        let (j, k) = c.split_index(col);
        // exact scores lie in [0, 1]; clip roundoff
        scores[(j, k)] = raw.clamp(0.0, 1.0);
    }
    let total = scores.sum();
    LeverageTable { scores, total }
}

/// `l(A^k b_j) = (A^k b_j)^T (C C^T)^+ (A^k b_j)` for every column of `C(t)`.
pub fn leverage_scores(sys: &LtiSystem, t: Horizon) -> LeverageTable {
    leverage_table(&controllability_matrix(sys, t))
}

/// `tr(C_j^T (C C^T)^+ C_j)` with `C_j` the columns of input `j`.
pub fn group_leverage(sys: &LtiSystem, t: Horizon, input: usize) -> Result<f64> {
    if input >= sys.input_count() {
        return Err(Error::IndexOutOfRange {
            index: input,
            len: sys.input_count(),
        });
    }
    leverage_scores(sys, t).group(input)
}

/// How a draw of cell `(i, k)` updates the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// `s_i(k)^2 += 1 / (M pi)`, so that `E[W_s] = W`.
    #[default]
    Squared,
    /// `s_i(k) += 1 / (M pi)`, the biased variant.
    Literal,
}

/// Probabilities `pi(i, k)` over the schedule grid (rows are inputs,
/// columns schedule times).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    pi: DMatrix<f64>,
}

impl SamplingDistribution {
    /// From a leverage table of a controllable system: the cell at schedule
    /// time `k` gets the score of `A^{t-k-1} b_i`, normalized to sum 1.
    pub fn from_table(table: &LeverageTable, n: usize) -> Result<Self> {
        let total = table.total();
        if !(total >= n as f64 - 1e-6) {
            return Err(Error::SingularGramian {
                ratio: total / n as f64,
            });
        }
        let (m, t) = table.scores().shape();
        let pi = DMatrix::from_fn(m, t, |i, k| table.scores()[(i, t - k - 1)] / total);
        Ok(SamplingDistribution { pi })
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.pi
    }

    /// Draws `M = ceil(d t)` cells and builds the weighted schedule.
    pub fn sample(&self, d: f64, seed: u64, mode: Accumulation) -> Result<Schedule> {
        let (m, t) = self.pi.shape();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidBudget("d must be positive and finite"));
        }
        let draws = (d * t as f64 - 1e-9).ceil().max(1.0) as usize;
        // input-major flattening: cell i * t + k
        let mut cdf = alloc::vec::Vec::with_capacity(m * t);
        let mut acc = 0.0;
        let mut last_positive = 0;
        for i in 0..m {
            for k in 0..t {
                let p = self.pi[(i, k)];
                acc += p;
                if p > 0.0 {
                    last_positive = i * t + k;
                }
                cdf.push(acc);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc_s = DMatrix::<f64>::zeros(m, t);
        let scale = 1.0 / draws as f64;
        for _ in 0..draws {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let cell = match cdf.partition_point(|&c| c <= u) {
                idx if idx < cdf.len() => idx,
                _ => last_positive,
            };
            let (i, k) = (cell / t, cell % t);
            acc_s[(i, k)] += scale / self.pi[(i, k)];
        }
        let s = match mode {
            Accumulation::Squared => acc_s.map(|x| x.sqrt()),
            Accumulation::Literal => acc_s,
        };
        Schedule::new(s)
    }
}

/// Leverage-score sampling distribution of a controllable system.
pub fn sampling_distribution(sys: &LtiSystem, t: Horizon) -> Result<SamplingDistribution> {
    SamplingDistribution::from_table(&leverage_scores(sys, t), sys.state_dim())
}

/// Randomized schedule with `ceil(d t)` draws, accumulating squared scalings.
pub fn sample_schedule(sys: &LtiSystem, t: Horizon, d: f64, seed: u64) -> Result<Schedule> {
    sampling_distribution(sys, t)?.sample(d, seed, Accumulation::Squared)
}

/// `c0 n ln(n) / (eps^2 t)` for `eps` in `[1/sqrt(n), 1]`.
pub fn sampling_budget(n: usize, t: usize, eps: f64) -> Result<f64> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidParameter("n and t must be positive"));
    }
    let min = 1.0 / (n as f64).sqrt();
    if !(eps >= min && eps <= 1.0) {
        return Err(Error::InvalidEps { eps, min });
    }
    let n = n as f64;
    Ok(SAMPLING_CONSTANT * n * n.ln() / (eps * eps * t as f64))
}
