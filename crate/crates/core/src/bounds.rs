//! Constants of the geometric transition rate and the running-average
//! performance bound, evaluated against completed runs.

use nalgebra::DVector;
use thiserror::Error;

use crate::engine::{RunConfig, RunResult};
use crate::priorities::{average_priorities, eta_a, PriorityError, PriorityMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("no oracle minimizer supplied")]
    MissingMinimizer,
    #[error("minimizer has dimension {got}, expected {expected}")]
    MinimizerDimension { expected: usize, got: usize },
    #[error("bound needs k ≥ 1, got {0}")]
    IterationTooSmall(usize),
    #[error("floor η = {0} must lie in (0, 1)")]
    EtaOutOfRange(f64),
    #[error("need at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error(transparent)]
    Priority(#[from] PriorityError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub eta: f64,
    /// `n − 1`
    pub b0: usize,
    /// `1 + η^{−B₀}`
    pub omega: f64,
    /// `1 − η^{B₀}`
    pub beta: f64,
    /// `1 − β^{1/B₀}`
    pub beta_root_gap: f64,
    pub c1: f64,
    pub c2: f64,
    /// Gradient bound over the visited trajectory.
    pub l: f64,
    pub alpha: f64,
    /// Agent count, as used in the bound formulas.
    pub m: usize,
    /// `‖y(0) − x*‖` with `y(0) = Σ_j φ^j x^j(0)`.
    pub dist0: f64,
    pub phi_min: f64,
    pub phi_norm_sq: f64,
}

/// Raw inputs for [`BoundReport::from_parts`].
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs<'a> {
    pub eta: f64,
    pub alpha: f64,
    pub gradient_bound: f64,
    pub phi: &'a DVector<f64>,
    pub x0: &'a [Vec<f64>],
    pub xstar: &'a [f64],
}

impl BoundReport {
    pub fn from_parts(inp: BoundInputs<'_>) -> Result<Self, BoundsError> {
        let n = inp.phi.len();
        if n < 2 {
            return Err(BoundsError::TooFewAgents(n));
        }
        if !(inp.eta > 0.0 && inp.eta < 1.0) {
            return Err(BoundsError::EtaOutOfRange(inp.eta));
        }
        let dim = inp.xstar.len();
        if let Some(x) = inp.x0.iter().find(|x| x.len() != dim) {
            return Err(BoundsError::MinimizerDimension {
                expected: x.len(),
                got: dim,
            });
        }
        let b0 = n - 1;
        let b0f = b0 as f64;
        let eta_b0 = inp.eta.powf(b0f);
        let omega = 1.0 + inp.eta.powf(-b0f);
        let beta = 1.0 - eta_b0;
        // 1 − (1 − η^{B₀})^{1/B₀} without cancellation for small η^{B₀}.
        let beta_root_gap = -((-eta_b0).ln_1p() / b0f).exp_m1();
        let phi_min = inp.phi.min();
        let phi_norm_sq = inp.phi.norm_squared();
        let max_x0 = inp
            .x0
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let c1 = 1.0 + 2.0 * max_x0 * (2.0 / phi_min + 1.0);
        let mf = n as f64;
        let c2 = 8.0 * mf * (1.0 + mf * omega / (beta * beta_root_gap)) + phi_norm_sq * mf;
        let dist0 = (0..dim)
            .map(|p| {
                let y: f64 = inp.x0.iter().zip(inp.phi.iter()).map(|(x, w)| w * x[p]).sum();
                (y - inp.xstar[p]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        Ok(BoundReport {
            eta: inp.eta,
            b0,
            omega,
            beta,
            beta_root_gap,
            c1,
            c2,
            l: inp.gradient_bound,
            alpha: inp.alpha,
            m: n,
            dist0,
            phi_min,
            phi_norm_sq,
        })
    }
}

/// Report for a finished run; `φ = w̄` and `L` is the run's largest gradient norm.
pub fn bound_constants(
    cfg: &RunConfig,
    result: &RunResult,
    xstar: Option<&[f64]>,
) -> Result<BoundReport, BoundsError> {
    let xstar = xstar.ok_or(BoundsError::MissingMinimizer)?;
    if xstar.len() != cfg.dim() {
        return Err(BoundsError::MinimizerDimension {
            expected: cfg.dim(),
            got: xstar.len(),
        });
    }
    let phi = average_priorities(&cfg.w0);
    BoundReport::from_parts(BoundInputs {
        eta: result.eta_a,
        alpha: cfg.alpha,
        gradient_bound: result.grad_max,
        phi: &phi,
        x0: &cfg.x0,
        xstar,
    })
}

/// The four terms of the gap bound at iteration `k`, in order.
pub fn performance_terms(r: &BoundReport, k: usize) -> Result<[f64; 4], BoundsError> {
    if k < 1 {
        return Err(BoundsError::IterationTooSmall(k));
    }
    let kf = k as f64;
    let m = r.m as f64;
    let l = r.l;
    let a = r.alpha;
    Ok([
        m * m * l * r.omega * r.c1 / (kf * r.beta * r.beta_root_gap),
        a * l * l * r.c2 / (2.0 * r.phi_min),
        (r.dist0 + a * m * l).powi(2) / (2.0 * kf * a * r.phi_min),
        2.0 * a * m * l * l / kf,
    ])
}

/// Upper bound on `f(x̂^i(k)) − f(x*)`.
pub fn performance_bound(r: &BoundReport, k: usize) -> Result<f64, BoundsError> {
    Ok(performance_terms(r, k)?.iter().sum())
}

/// The `k → ∞` value of [`performance_bound`].
pub fn performance_limit(r: &BoundReport) -> f64 {
    r.alpha * r.l * r.l * r.c2 / (2.0 * r.phi_min)
}

/// `α L² C₂ / (2 η_A(W0))`.
pub fn asymptotic_bound(r: &BoundReport, w0: &PriorityMatrix) -> Result<f64, BoundsError> {
    let eta = eta_a(w0)?;
    Ok(r.alpha * r.l * r.l * r.c2 / (2.0 * eta))
}
