//! Priority vectors and their Laplacian consensus.
//!
//! Row `i` of a [`PriorityMatrix`] is agent `i`'s weighting of all `n`
//! objectives. The network update is `W(k+1) = P W(k)` with `P = I − cL`,
//! which preserves row sums and never lowers the smallest entry.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{Graph, GraphMatrices};

/// Inputs whose rows sum to within this of 1 are rescaled on ingestion.
pub const ROW_SUM_INGEST_TOLERANCE: f64 = 1e-6;

/// Default consensus gain as a fraction of the admissible upper limit `1/Δ_max`.
pub const DEFAULT_GAIN_FRACTION: f64 = 0.9;

/// ∞-norm disagreement below which priorities count as having reached consensus.
pub const CONSENSUS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriorityError {
    #[error("priority matrix must be {expected}x{expected}, got {rows}x{cols}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("priorities of agent {agent} sum to {sum}, expected 1 within {ROW_SUM_INGEST_TOLERANCE}")]
    RowSum { agent: usize, sum: f64 },
    #[error("priority w^{agent}_{objective} = {value} must lie strictly between 0 and 1")]
    NotStrictlyPositive {
        agent: usize,
        objective: usize,
        value: f64,
    },
    #[error("consensus gain c = {c} outside the open interval (0, 1/Δ_max = {upper})")]
    GainOutOfRange { c: f64, upper: f64 },
    #[error("dimension mismatch: operator is {operator}x{operator}, priorities are {priorities}x{priorities}")]
    DimensionMismatch { operator: usize, priorities: usize },
}

/// Square row-stochastic matrix of priorities.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityMatrix(DMatrix<f64>);

impl PriorityMatrix {
    /// Validates initial priorities given one row per agent.
    ///
    /// Every entry must be finite and strictly inside `(0, 1)`. Rows within
    /// [`ROW_SUM_INGEST_TOLERANCE`] of summing to 1 are rescaled; anything
    /// further off is rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PriorityError> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(PriorityError::Shape {
                    expected: n,
                    rows: n,
                    cols: row.len(),
                });
            }
        }
        let mut m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        for i in 0..n {
            for j in 0..n {
                let value = m[(i, j)];
                if !(value.is_finite() && value > 0.0 && value < 1.0) {
                    return Err(PriorityError::NotStrictlyPositive {
                        agent: i + 1,
                        objective: j + 1,
                        value,
                    });
                }
            }
            let sum = m.row(i).sum();
            if (sum - 1.0).abs() > ROW_SUM_INGEST_TOLERANCE {
                return Err(PriorityError::RowSum { agent: i + 1, sum });
            }
            if sum != 1.0 {
                m.row_mut(i).unscale_mut(sum);
            }
        }
        Ok(PriorityMatrix(m))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self, PriorityError> {
        if m.nrows() != m.ncols() {
            return Err(PriorityError::Shape {
                expected: m.nrows(),
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self::from_rows(&rows)
    }

    /// Every agent weights every objective `1/n`.
    pub fn uniform(n: usize) -> Self {
        PriorityMatrix(DMatrix::from_element(n, n, 1.0 / n as f64))
    }

    pub fn agent_count(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Agent `i`'s priority vector.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.0.row(i).transpose()
    }

    pub fn min_entry(&self) -> f64 {
        self.0.min()
    }

    /// Largest `|Σ_j w^i_j − 1|` over agents.
    pub fn row_sum_deviation(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_i ‖w^i − target‖∞`.
    pub fn disagreement(&self, target: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.0.nrows() {
            for j in 0..self.0.ncols() {
                worst = worst.max((self.0[(i, j)] - target[j]).abs());
            }
        }
        worst
    }

    pub fn is_consensual(&self) -> bool {
        self.disagreement(&average_priorities(self)) <= CONSENSUS_TOLERANCE
    }
}

/// `P = I − cL` together with the gain that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOperator {
    p: DMatrix<f64>,
    c: f64,
}

impl ConsensusOperator {
    /// Builds `P = I − cL`, requiring `0 < c < 1/Δ_max`.
    pub fn new(gm: &GraphMatrices, c: f64) -> Result<Self, PriorityError> {
        let upper = 1.0 / gm.max_degree as f64;
        if !(c > 0.0 && c < upper) {
            return Err(PriorityError::GainOutOfRange { c, upper });
        }
        let n = gm.laplacian.nrows();
        let p = DMatrix::identity(n, n) - &gm.laplacian * c;
        Ok(ConsensusOperator { p, c })
    }

    /// The `c → 0` limit, `P = I`.
    pub fn identity(n: usize) -> Self {
        ConsensusOperator {
            p: DMatrix::identity(n, n),
            c: 0.0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn gain(&self) -> f64 {
        self.c
    }
}

/// `0.9 / Δ_max`, used when a scenario does not pin `c`.
pub fn default_gain(gm: &GraphMatrices) -> f64 {
    DEFAULT_GAIN_FRACTION / gm.max_degree as f64
}

/// Network form of the priority update: `W(k+1) = P W(k)`.
pub fn priority_step(
    w: &PriorityMatrix,
    op: &ConsensusOperator,
) -> Result<PriorityMatrix, PriorityError> {
    if op.p.nrows() != w.agent_count() {
        return Err(PriorityError::DimensionMismatch {
            operator: op.p.nrows(),
            priorities: w.agent_count(),
        });
    }
    Ok(PriorityMatrix(&op.p * &w.0))
}

/// Per-agent form: `w^i(k+1) = w^i(k) + c Σ_j h^i_j (w^j(k) − w^i(k))`.
pub fn priority_step_local(
    graph: &Graph,
    w: &PriorityMatrix,
    c: f64,
) -> Result<PriorityMatrix, PriorityError> {
    let n = graph.agent_count();
    if n != w.agent_count() {
        return Err(PriorityError::DimensionMismatch {
            operator: n,
            priorities: w.agent_count(),
        });
    }
    let m = &w.0;
    let next = DMatrix::from_fn(n, n, |i, l| {
        let pull: f64 = graph
            .neighbors(i)
            .iter()
            .map(|&j| m[(j, l)] - m[(i, l)])
            .sum();
        m[(i, l)] + c * pull
    });
    Ok(PriorityMatrix(next))
}

/// The consensus limit `w̄ = (1/n) Σ_j w^j(0)`: column means of `W(0)`.
pub fn average_priorities(w0: &PriorityMatrix) -> DVector<f64> {
    let n = w0.agent_count();
    DVector::from_fn(n, |l, _| {
        (0..n).map(|i| w0.0[(i, l)]).sum::<f64>() / n as f64
    })
}

/// Uniform floor on the nonzero mixing weights: the smallest entry of `W(0)`.
pub fn eta_a(w0: &PriorityMatrix) -> Result<f64, PriorityError> {
    let mut best = f64::INFINITY;
    for i in 0..w0.0.nrows() {
        for j in 0..w0.0.ncols() {
            let value = w0.0[(i, j)];
            if !(value > 0.0) {
                return Err(PriorityError::NotStrictlyPositive {
                    agent: i + 1,
                    objective: j + 1,
                    value,
                });
            }
            best = best.min(value);
        }
    }
    Ok(best)
}
