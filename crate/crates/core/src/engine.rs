//! Round-synchronous execution of the interleaved priority-consensus and
//! prioritized gradient update, with running averages and sampled series.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::Graph;
use crate::mixing::{build_mixing, MixingError, MixingMatrix, TransitionProduct};
use crate::objectives::{Objective, ObjectiveError, WeightedProblem};
use crate::priorities::{
    average_priorities, default_gain, eta_a, priority_step, ConsensusOperator, PriorityError,
    PriorityMatrix,
};

pub const DEFAULT_RECORD_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error("{what}: expected {expected}, got {got}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("agent {agent}: {message}")]
    Agent { agent: usize, message: String },
    #[error("non-finite value at agent {agent}, coordinate {coord}, round {k}")]
    NonFinite { agent: usize, coord: usize, k: usize },
    #[error("run already finished at k = {0}")]
    Finished(usize),
    #[error(transparent)]
    Priority(#[from] PriorityError),
    #[error(transparent)]
    Mixing(#[from] MixingError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph: Graph,
    pub objectives: Vec<Objective>,
    pub w0: PriorityMatrix,
    pub x0: Vec<Vec<f64>>,
    pub alpha: f64,
    pub c: f64,
    pub k_max: usize,
    pub record_every: usize,
    /// Keep `Φ(k, 0)` at every sample.
    pub track_phi: bool,
    /// Rescale `α ∇f_i` to this norm when it is exceeded.
    pub l1_cap: Option<f64>,
    /// Build `A(k)` from `W(k+1)` instead of `W(k)`.
    pub a_from_updated_w: bool,
    pub threads: usize,
}

impl RunConfig {
    /// Config with `c = 0.9/Δ_max`, `record_every = 100`, all flags off.
    pub fn new(
        graph: Graph,
        objectives: Vec<Objective>,
        w0: PriorityMatrix,
        x0: Vec<Vec<f64>>,
        alpha: f64,
        k_max: usize,
    ) -> Self {
        let c = default_gain(&graph.matrices());
        RunConfig {
            graph,
            objectives,
            w0,
            x0,
            alpha,
            c,
            k_max,
            record_every: DEFAULT_RECORD_EVERY,
            track_phi: false,
            l1_cap: None,
            a_from_updated_w: false,
            threads: 1,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.graph.agent_count()
    }

    /// Decision dimension `m`.
    pub fn dim(&self) -> usize {
        self.x0.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let n = self.graph.agent_count();
        if self.objectives.len() != n {
            return Err(EngineError::CountMismatch {
                what: "objective count vs agents",
                expected: n,
                got: self.objectives.len(),
            });
        }
        if self.w0.agent_count() != n {
            return Err(EngineError::CountMismatch {
                what: "priority rows vs agents",
                expected: n,
                got: self.w0.agent_count(),
            });
        }
        if self.x0.len() != n {
            return Err(EngineError::CountMismatch {
                what: "initial states vs agents",
                expected: n,
                got: self.x0.len(),
            });
        }
        let m = self.dim();
        if m == 0 {
            return Err(EngineError::Config {
                field: "initial_states",
                message: "decision dimension must be at least 1".into(),
            });
        }
        for (i, x) in self.x0.iter().enumerate() {
            if x.len() != m {
                return Err(EngineError::Agent {
                    agent: i + 1,
                    message: format!("initial state has dimension {}, expected {m}", x.len()),
                });
            }
            if let Some(p) = x.iter().position(|v| !v.is_finite()) {
                return Err(EngineError::NonFinite {
                    agent: i + 1,
                    coord: p + 1,
                    k: 0,
                });
            }
        }
        for (i, f) in self.objectives.iter().enumerate() {
            if f.min_dim() > m {
                return Err(EngineError::Agent {
                    agent: i + 1,
                    message: format!("objective reads coordinate {} but m = {m}", f.min_dim()),
                });
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(EngineError::Config {
                field: "alpha",
                message: format!("{} must be positive", self.alpha),
            });
        }
        if self.k_max < 1 {
            return Err(EngineError::Config {
                field: "k_max",
                message: "must be at least 1".into(),
            });
        }
        if self.record_every < 1 {
            return Err(EngineError::Config {
                field: "record_every",
                message: "must be at least 1".into(),
            });
        }
        if let Some(cap) = self.l1_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(EngineError::Config {
                    field: "l1_cap",
                    message: format!("{cap} must be positive"),
                });
            }
        }
        if self.threads < 1 {
            return Err(EngineError::Config {
                field: "threads",
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// `Σ_j w̄_j f_j` on the decision space.
    pub fn consensus_problem(&self) -> Result<WeightedProblem, EngineError> {
        Ok(WeightedProblem::new(
            self.objectives.clone(),
            average_priorities(&self.w0),
            self.dim(),
        )?)
    }
}

/// Everything an observer sees about round `k`, after it completes.
pub struct Round<'a> {
    pub k: usize,
    /// `W(k)`
    pub w_before: &'a PriorityMatrix,
    /// `W(k+1)`
    pub w_after: &'a PriorityMatrix,
    /// The mixing matrix applied to `x(k)`.
    pub mixing: &'a MixingMatrix,
    /// `x(k+1)`
    pub x_next: &'a [Vec<f64>],
    /// `Φ(k, 0)` when tracking is on.
    pub phi: Option<&'a TransitionProduct>,
}

pub trait RoundObserver: Send {
    /// Called with the mixing matrix before it is applied; test hook for
    /// fault injection.
    fn tamper(&mut self, _mixing: &mut MixingMatrix) {}

    fn observe(&mut self, _round: &Round<'_>) {}
}

pub struct NoObserver;

impl RoundObserver for NoObserver {}

/// Live state between rounds.
#[derive(Debug, Clone)]
pub struct RunState {
    k: usize,
    w: PriorityMatrix,
    x: Vec<Vec<f64>>,
    iterate_sum: Vec<Vec<f64>>,
    grad_max: f64,
    step_norm_max: f64,
    clipped_steps: usize,
    eta_a: f64,
    op: ConsensusOperator,
    phi: Option<TransitionProduct>,
}

pub fn init_run(cfg: &RunConfig) -> Result<RunState, EngineError> {
    cfg.validate()?;
    let op = ConsensusOperator::new(&cfg.graph.matrices(), cfg.c)?;
    let eta = eta_a(&cfg.w0)?;
    let n = cfg.agent_count();
    Ok(RunState {
        k: 0,
        w: cfg.w0.clone(),
        x: cfg.x0.clone(),
        iterate_sum: vec![vec![0.0; cfg.dim()]; n],
        grad_max: 0.0,
        step_norm_max: 0.0,
        clipped_steps: 0,
        eta_a: eta,
        op,
        phi: None,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

struct AgentUpdate {
    x: Vec<f64>,
    grad_norm: f64,
    step_norm: f64,
    clipped: bool,
}

fn agent_update(
    cfg: &RunConfig,
    a: &DMatrix<f64>,
    x: &[Vec<f64>],
    i: usize,
    k: usize,
) -> Result<AgentUpdate, EngineError> {
    let m = x[i].len();
    let mut grad = vec![0.0; m];
    cfg.objectives[i].gradient_into(&x[i], &mut grad)?;
    let grad_norm = norm(&grad);
    let step_norm = cfg.alpha * grad_norm;
    let mut scale = cfg.alpha;
    let mut clipped = false;
    if let Some(cap) = cfg.l1_cap {
        if step_norm > cap {
            scale *= cap / step_norm;
            clipped = true;
        }
    }
    let mut next = vec![0.0; m];
    for (j, xj) in x.iter().enumerate() {
        let aij = a[(i, j)];
        if aij != 0.0 {
            for (out, v) in next.iter_mut().zip(xj) {
                *out += aij * v;
            }
        }
    }
    for (p, (out, g)) in next.iter_mut().zip(&grad).enumerate() {
        *out -= scale * g;
        if !out.is_finite() {
            return Err(EngineError::NonFinite {
                agent: i + 1,
                coord: p + 1,
                k: k + 1,
            });
        }
    }
    Ok(AgentUpdate {
        x: next,
        grad_norm,
        step_norm,
        clipped,
    })
}

impl RunState {
    /// Rounds completed so far.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn priorities(&self) -> &PriorityMatrix {
        &self.w
    }

    pub fn iterates(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    /// Largest `‖∇f_i(x^i(k))‖` seen so far.
    pub fn grad_max(&self) -> f64 {
        self.grad_max
    }

    /// Largest `‖α ∇f_i(x^i(k))‖` seen so far, before any cap.
    pub fn step_norm_max(&self) -> f64 {
        self.step_norm_max
    }

    pub fn transition(&self) -> Option<&TransitionProduct> {
        self.phi.as_ref()
    }

    /// `x̂^i(k) = (1/k) Σ_{h=1}^k x^i(h)`; `None` before the first round.
    pub fn running_average(&self) -> Option<Vec<Vec<f64>>> {
        if self.k == 0 {
            return None;
        }
        let k = self.k as f64;
        Some(
            self.iterate_sum
                .iter()
                .map(|s| s.iter().map(|v| v / k).collect())
                .collect(),
        )
    }

    /// One synchronous round.
    pub fn step(&mut self, cfg: &RunConfig) -> Result<(), EngineError> {
        self.step_observed(cfg, &mut NoObserver)
    }

    pub fn step_observed(
        &mut self,
        cfg: &RunConfig,
        observer: &mut dyn RoundObserver,
    ) -> Result<(), EngineError> {
        if self.k >= cfg.k_max {
            return Err(EngineError::Finished(self.k));
        }
        let k = self.k;
        let w_next = priority_step(&self.w, &self.op)?;
        let source = if cfg.a_from_updated_w { &w_next } else { &self.w };
        let mut mixing = build_mixing(&cfg.graph, source, k)?;
        observer.tamper(&mut mixing);

        let n = cfg.agent_count();
        let updates: Vec<AgentUpdate> = if cfg.threads > 1 {
            (0..n)
                .into_par_iter()
                .map(|i| agent_update(cfg, &mixing.a, &self.x, i, k))
                .collect::<Result<_, _>>()?
        } else {
            (0..n)
                .map(|i| agent_update(cfg, &mixing.a, &self.x, i, k))
                .collect::<Result<_, _>>()?
        };

        let mut x_next = Vec::with_capacity(n);
        for (sum, u) in self.iterate_sum.iter_mut().zip(updates) {
            self.grad_max = self.grad_max.max(u.grad_norm);
            self.step_norm_max = self.step_norm_max.max(u.step_norm);
            self.clipped_steps += usize::from(u.clipped);
            for (s, v) in sum.iter_mut().zip(&u.x) {
                *s += v;
            }
            x_next.push(u.x);
        }

        if cfg.track_phi {
            match self.phi.as_mut() {
                None => self.phi = Some(TransitionProduct::seed(&mixing)),
                Some(p) => p.accumulate(&mixing)?,
            }
        }

        observer.observe(&Round {
            k,
            w_before: &self.w,
            w_after: &w_next,
            mixing: &mixing,
            x_next: &x_next,
            phi: self.phi.as_ref(),
        });

        self.w = w_next;
        self.x = x_next;
        self.k += 1;
        Ok(())
    }
}

/// One recorded point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub k: usize,
    /// `x̂^i(k)` per agent.
    pub xhat: Vec<Vec<f64>>,
    /// `Σ_j w̄_j f_j(x̂^i(k))` per agent.
    pub value: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub k_max: usize,
    pub xhat: Vec<Vec<f64>>,
    pub x_final: Vec<Vec<f64>>,
    pub w_final: PriorityMatrix,
    pub wbar: DVector<f64>,
    pub eta_a: f64,
    pub c: f64,
    /// Sampled at `k = 1`, every `record_every`, and `k_max`.
    pub samples: Vec<Sample>,
    /// `Φ(k, 0)` at the sampled rounds.
    pub phi_series: Option<Vec<(usize, DMatrix<f64>)>>,
    /// Largest `‖∇f_i(x^i(k))‖` over all agents and rounds.
    pub grad_max: f64,
    /// Largest `‖α ∇f_i(x^i(k))‖` before any cap.
    pub step_norm_max: f64,
    pub clipped_steps: usize,
    pub wallclock: f64,
}

impl RunResult {
    /// Coordinate-wise mean of the agents' `x̂`.
    pub fn xhat_mean(&self) -> Vec<f64> {
        mean_rows(&self.xhat)
    }

    pub fn x_final_mean(&self) -> Vec<f64> {
        mean_rows(&self.x_final)
    }
}

pub fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let m = rows.first().map_or(0, Vec::len);
    (0..m)
        .map(|p| rows.iter().map(|r| r[p]).sum::<f64>() / n)
        .collect()
}

fn is_sampled(k: usize, cfg: &RunConfig) -> bool {
    k == 1 || k.is_multiple_of(cfg.record_every) || k == cfg.k_max
}

pub fn run(cfg: &RunConfig) -> Result<RunResult, EngineError> {
    run_observed(cfg, &mut NoObserver)
}

pub fn run_observed(
    cfg: &RunConfig,
    observer: &mut dyn RoundObserver,
) -> Result<RunResult, EngineError> {
    if cfg.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| EngineError::Threads(e.to_string()))?;
        pool.install(|| run_inner(cfg, observer))
    } else {
        run_inner(cfg, observer)
    }
}

fn run_inner(cfg: &RunConfig, observer: &mut dyn RoundObserver) -> Result<RunResult, EngineError> {
    let started = Instant::now();
    let mut state = init_run(cfg)?;
    let problem = cfg.consensus_problem()?;
    let mut samples = Vec::new();
    let mut phi_series = cfg.track_phi.then(Vec::new);
    while state.k < cfg.k_max {
        state.step_observed(cfg, observer)?;
        if is_sampled(state.k, cfg) {
            let xhat = state.running_average().expect("k ≥ 1");
            let value = xhat
                .iter()
                .map(|x| problem.value(x))
                .collect::<Result<Vec<_>, _>>()?;
            samples.push(Sample {
                k: state.k,
                xhat,
                value,
            });
            if let (Some(series), Some(p)) = (phi_series.as_mut(), state.phi.as_ref()) {
                series.push((state.k, p.matrix().clone()));
            }
        }
    }
    Ok(RunResult {
        k_max: cfg.k_max,
        xhat: state.running_average().expect("k_max ≥ 1"),
        wbar: problem.weights().clone(),
        eta_a: state.eta_a,
        c: cfg.c,
        samples,
        phi_series,
        grad_max: state.grad_max,
        step_norm_max: state.step_norm_max,
        clipped_steps: state.clipped_steps,
        x_final: state.x,
        w_final: state.w,
        wallclock: started.elapsed().as_secs_f64(),
    })
}

/// One point of a priority sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    /// Position of the setting in the input list.
    pub setting: usize,
    pub wbar: DVector<f64>,
    /// Mean over agents of `x̂(k_max)`.
    pub xhat: Vec<f64>,
    /// `f_j(x̂)` for each objective.
    pub values: Vec<f64>,
    /// `Σ_j w̄_j f_j(x̂)`
    pub weighted: f64,
}

/// Runs `base` once per initial priority matrix; points sorted by `w̄₁`.
pub fn pareto_sweep(
    base: &RunConfig,
    priority_list: &[PriorityMatrix],
) -> Result<Vec<FrontPoint>, EngineError> {
    let mut points = Vec::with_capacity(priority_list.len());
    for (setting, w0) in priority_list.iter().enumerate() {
        let cfg = RunConfig {
            w0: w0.clone(),
            ..base.clone()
        };
        let result = run(&cfg)?;
        let xhat = result.xhat_mean();
        let values = cfg
            .objectives
            .iter()
            .map(|f| f.evaluate(&xhat))
            .collect::<Result<Vec<_>, _>>()?;
        let weighted = values.iter().zip(result.wbar.iter()).map(|(f, w)| f * w).sum();
        points.push(FrontPoint {
            setting,
            wbar: result.wbar,
            xhat,
            values,
            weighted,
        });
    }
    points.sort_by(|a, b| a.wbar[0].total_cmp(&b.wbar[0]));
    Ok(points)
}
