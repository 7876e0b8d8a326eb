//! Row-stochastic mixing matrices built from priorities.
//!
//! Agent `i` keeps `w^i_j` for itself and its neighbors and folds the
//! priority it assigns to every non-neighbor into its own diagonal entry:
//!
//! ```text
//! A(k) = Z ∘ W(k) + diag((W(k) ∘ H̃) 1),   Z = H + I,   H̃ = J − Z
//! ```
//!
//! The result is row-stochastic but generally not doubly stochastic.
//! This module also holds the limit decomposition `Ā = W̄ + C`, transition
//! products `Φ(k, s) = A(k)···A(s)`, and the geometric rate bound on them.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::Graph;
use crate::priorities::{priority_step, ConsensusOperator, PriorityMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixingError {
    #[error("dimension mismatch: graph has {graph} agents, matrix has {matrix}")]
    DimensionMismatch { graph: usize, matrix: usize },
    #[error("transition product spans up to k = {product_end}; next factor must be A({}), got A({got})", product_end + 1)]
    SpanMismatch { product_end: usize, got: usize },
    #[error("eta = {0} must lie in (0, 1)")]
    EtaOutOfRange(f64),
    #[error("rate bound needs k >= s and n >= 2 (k = {k}, s = {s}, n = {n})")]
    InvalidSpan { k: usize, s: usize, n: usize },
    #[error("limit priority phi^{index} = {value} must be strictly positive")]
    DegenerateLimit { index: usize, value: f64 },
    #[error("transition rows still differ by {spread:e} after {steps} factors")]
    LimitNotReached { steps: usize, spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("power iteration did not settle within {iterations} iterations (last estimate {estimate})")]
    NotConverged { iterations: usize, estimate: f64 },
}

/// `A(k)` together with the round it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    pub a: DMatrix<f64>,
    pub k: usize,
}

impl MixingMatrix {
    pub fn agent_count(&self) -> usize {
        self.a.nrows()
    }
}

/// Mixing matrix for round `k` from the priorities `W`.
pub fn build_mixing(
    graph: &Graph,
    w: &PriorityMatrix,
    k: usize,
) -> Result<MixingMatrix, MixingError> {
    let n = graph.agent_count();
    if w.agent_count() != n {
        return Err(MixingError::DimensionMismatch {
            graph: n,
            matrix: w.agent_count(),
        });
    }
    let wm = w.as_matrix();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = wm[(i, i)];
        for j in 0..n {
            if j == i {
                continue;
            }
            if graph.has_edge(i, j) {
                a[(i, j)] = wm[(i, j)];
            } else {
                diag += wm[(i, j)];
            }
        }
        a[(i, i)] = diag;
    }
    Ok(MixingMatrix { a, k })
}

/// Audit of one mixing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingAudit {
    pub row_sum_deviation: f64,
    /// Entries outside the closed neighborhood that are not exactly zero.
    pub off_pattern_nonzero: usize,
    /// Smallest entry on the closed neighborhood (diagonal and edges).
    pub pattern_min: f64,
}

impl MixingAudit {
    pub fn passes(&self, eta: f64, row_tol: f64, floor_slack: f64) -> bool {
        self.row_sum_deviation <= row_tol
            && self.off_pattern_nonzero == 0
            && self.pattern_min >= eta - floor_slack
    }
}

pub fn audit_mixing(graph: &Graph, a: &DMatrix<f64>) -> MixingAudit {
    let n = graph.agent_count();
    let mut row_sum_deviation = 0.0f64;
    let mut off_pattern_nonzero = 0;
    let mut pattern_min = f64::INFINITY;
    for i in 0..n {
        row_sum_deviation = row_sum_deviation.max((a.row(i).sum() - 1.0).abs());
        for j in 0..n {
            if graph.in_closed_neighborhood(i, j) {
                pattern_min = pattern_min.min(a[(i, j)]);
            } else if a[(i, j)] != 0.0 {
                off_pattern_nonzero += 1;
            }
        }
    }
    MixingAudit {
        row_sum_deviation,
        off_pattern_nonzero,
        pattern_min,
    }
}

/// `Ā = W̄ + C` with `C = Q + F`, the mixing matrix at priority consensus.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitDecomposition {
    pub abar: DMatrix<f64>,
    pub wbar: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub phi: DVector<f64>,
    pub eta: f64,
}

/// Residuals of the identities the limit decomposition must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitResiduals {
    /// `‖W̄C‖_max`
    pub wbar_c: f64,
    /// `‖CW̄‖_max`
    pub c_wbar: f64,
    /// `max_r ‖(W̄ + C)^r − W̄^r − C^r‖_max` over `r = 2..=r_max`.
    pub power_split: f64,
    /// `‖Ā − (W̄ + C)‖_max`
    pub split: f64,
}

impl LimitDecomposition {
    pub fn agent_count(&self) -> usize {
        self.phi.len()
    }

    pub fn phi_min(&self) -> f64 {
        self.phi.min()
    }

    pub fn phi_floor_holds(&self) -> bool {
        self.phi_min() >= self.eta
    }

    pub fn residuals(&self, r_max: usize) -> LimitResiduals {
        let wbar_c = (&self.wbar * &self.c).amax();
        let c_wbar = (&self.c * &self.wbar).amax();
        let split = (&self.abar - (&self.wbar + &self.c)).amax();
        let mut power_split = 0.0f64;
        let mut sum_pow = self.abar.clone();
        let mut w_pow = self.wbar.clone();
        let mut c_pow = self.c.clone();
        for _ in 2..=r_max {
            sum_pow = &sum_pow * &self.abar;
            w_pow = &w_pow * &self.wbar;
            c_pow = &c_pow * &self.c;
            power_split = power_split.max((&sum_pow - &w_pow - &c_pow).amax());
        }
        LimitResiduals {
            wbar_c,
            c_wbar,
            power_split,
            split,
        }
    }

    pub fn c_spectral_radius(&self) -> Result<f64, SpectralError> {
        spectral_radius(&self.c)
    }
}

pub fn limit_decomposition(
    graph: &Graph,
    wbar: &DVector<f64>,
    eta: f64,
) -> Result<LimitDecomposition, MixingError> {
    let n = graph.agent_count();
    if wbar.len() != n {
        return Err(MixingError::DimensionMismatch {
            graph: n,
            matrix: wbar.len(),
        });
    }
    if let Some(index) = wbar.iter().position(|&v| !(v > 0.0)) {
        return Err(MixingError::DegenerateLimit {
            index: index + 1,
            value: wbar[index],
        });
    }
    let complement = graph.matrices().complement();
    let wbar_m = DMatrix::from_fn(n, n, |_, j| wbar[j]);
    let masked = wbar_m.component_mul(&complement);
    let q = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| masked.row(i).sum()));
    let f = -masked;
    let c = &q + &f;
    let abar = &wbar_m + &c;
    Ok(LimitDecomposition {
        abar,
        wbar: wbar_m,
        c,
        q,
        f,
        phi: wbar.clone(),
        eta,
    })
}

/// `Φ(k, s) = A(k) A(k−1) ··· A(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProduct {
    phi: DMatrix<f64>,
    s: usize,
    k: usize,
}

impl TransitionProduct {
    /// `Φ(s, s) = A(s)`.
    pub fn seed(a: &MixingMatrix) -> Self {
        TransitionProduct {
            phi: a.a.clone(),
            s: a.k,
            k: a.k,
        }
    }

    /// Extends `Φ(k, s)` to `Φ(k+1, s) = A(k+1) Φ(k, s)`.
    pub fn accumulate(&mut self, a: &MixingMatrix) -> Result<(), MixingError> {
        if a.k != self.k + 1 {
            return Err(MixingError::SpanMismatch {
                product_end: self.k,
                got: a.k,
            });
        }
        if a.agent_count() != self.phi.nrows() {
            return Err(MixingError::DimensionMismatch {
                graph: self.phi.nrows(),
                matrix: a.agent_count(),
            });
        }
        self.phi = &a.a * &self.phi;
        self.k = a.k;
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// `(s, k)`
    pub fn span(&self) -> (usize, usize) {
        (self.s, self.k)
    }

    /// `max_{i,j} |[Φ]^j_i − φ^j|`.
    pub fn distance_to_rank_one(&self, phi: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.phi.nrows() {
            for j in 0..self.phi.ncols() {
                worst = worst.max((self.phi[(i, j)] - phi[j]).abs());
            }
        }
        worst
    }

    /// Largest difference between two rows in any column.
    pub fn row_spread(&self) -> f64 {
        self.phi
            .column_iter()
            .map(|col| col.max() - col.min())
            .fold(0.0, f64::max)
    }
}

/// Geometric envelope on `|[Φ(k, s)]^j_i − φ^j(s)|`:
///
/// `2 (1 + η^{−B₀}) / (1 − η^{B₀}) · (1 − η^{B₀})^{(k − s)/B₀}` with `B₀ = n − 1`.
pub fn geometric_bound(eta: f64, n: usize, k: usize, s: usize) -> Result<f64, MixingError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(MixingError::EtaOutOfRange(eta));
    }
    if k < s || n < 2 {
        return Err(MixingError::InvalidSpan { k, s, n });
    }
    let b0 = (n - 1) as f64;
    let eta_b0 = eta.powf(b0);
    let prefactor = 2.0 * (1.0 + eta.powf(-b0)) / (1.0 - eta_b0);
    // (1 − η^{B₀})^t through log1p.
    let decay = ((k - s) as f64 / b0 * (-eta_b0).ln_1p()).exp();
    Ok(prefactor * decay)
}

/// The common row `φ(s)` that `Φ(k, s)` approaches as `k → ∞`, starting from
/// the priorities `W(s)`.
///
/// The product is extended one factor at a time until every column's rows
/// agree within `tol`. `from_updated` selects whether `A(k)` is built from
/// `W(k+1)` instead of `W(k)`, matching the engine's ordering flag.
pub fn transition_limit_row(
    graph: &Graph,
    w_s: &PriorityMatrix,
    op: &ConsensusOperator,
    from_updated: bool,
    tol: f64,
    max_factors: usize,
) -> Result<DVector<f64>, MixingError> {
    let mut w = w_s.clone();
    let mut product: Option<TransitionProduct> = None;
    for k in 0..max_factors {
        let next = priority_step(&w, op).map_err(|_| MixingError::DimensionMismatch {
            graph: op.matrix().nrows(),
            matrix: w.agent_count(),
        })?;
        let a = build_mixing(graph, if from_updated { &next } else { &w }, k)?;
        match product.as_mut() {
            None => product = Some(TransitionProduct::seed(&a)),
            Some(p) => p.accumulate(&a)?,
        }
        w = next;
        let p = product.as_ref().expect("seeded above");
        if p.row_spread() <= tol {
            return Ok(p.matrix().row_mean().transpose());
        }
    }
    Err(MixingError::LimitNotReached {
        steps: max_factors,
        spread: product.map(|p| p.row_spread()).unwrap_or(f64::INFINITY),
    })
}

/// Relative tolerance on successive power-iteration estimates.
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;
pub const SPECTRAL_MAX_ITERATIONS: usize = 200_000;

/// Spectral radius of a matrix with real spectrum by power iteration on `M²`.
///
/// Squaring folds `±λ` pairs onto `λ²`. Failure to settle is reported
/// separately from the radius itself.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    let n = m.nrows();
    let m2 = m * m;
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt() / (n as f64 + 1.0));
    v.normalize_mut();
    let mut estimate = 0.0f64;
    for it in 1..=SPECTRAL_MAX_ITERATIONS {
        let next = &m2 * &v;
        let norm = next.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let settled = (norm - estimate).abs() <= SPECTRAL_TOLERANCE * norm;
        estimate = norm;
        v = next / norm;
        if settled && it > 1 {
            return Ok(estimate.sqrt());
        }
    }
    Err(SpectralError::NotConverged {
        iterations: SPECTRAL_MAX_ITERATIONS,
        estimate: estimate.sqrt(),
    })
}
