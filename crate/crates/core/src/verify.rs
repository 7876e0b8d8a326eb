//! Full-pipeline audit of a run: mixing-matrix structure, priority floor,
//! limit identities, transition-product rate, and the performance bound.

use std::fmt::Write as _;

use nalgebra::DVector;
use thiserror::Error;

use crate::bounds::{asymptotic_bound, bound_constants, performance_bound, BoundsError};
use crate::engine::{run_observed, EngineError, Round, RoundObserver, RunConfig, RunResult};
use crate::graph::Graph;
use crate::mixing::{
    audit_mixing, geometric_bound, limit_decomposition, transition_limit_row, MixingError,
    MixingMatrix, TransitionProduct,
};
use crate::objectives::{oracle_minimizer, ObjectiveError};
use crate::priorities::{average_priorities, ConsensusOperator};

pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Rounding allowance below the priority floor.
pub const FLOOR_SLACK: f64 = 1e-15;
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const POWER_SPLIT_TOLERANCE: f64 = 1e-10;
pub const POWER_SPLIT_MAX: usize = 20;
pub const LIMIT_ROW_TOLERANCE: f64 = 1e-14;
pub const LIMIT_ROW_MAX_FACTORS: usize = 10_000_000;
pub const LATE_LIMIT_TOLERANCE: f64 = 1e-8;

/// Floating-point allowance on `|Φ(k, s) − 1φᵀ|`: `k − s + 1` products of
/// `n`-term sums, plus the tolerance of the limit row itself.
pub fn rate_slack(n: usize, k: usize, s: usize) -> f64 {
    LIMIT_ROW_TOLERANCE + (k - s + 1) as f64 * n as f64 * f64::EPSILON
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Mixing(#[from] MixingError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<Check>,
}

impl AuditReport {
    fn add(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Adds 0.25 to `A(0)[1,1]` before it is applied.
    pub inject_fault: bool,
    /// Start rounds `s` for the rate check; default `{0, K/4, K/2}`.
    pub starts: Option<Vec<usize>>,
}

struct Auditor {
    graph: Graph,
    op: ConsensusOperator,
    from_updated: bool,
    eta: f64,
    k_max: usize,
    record_every: usize,
    inject_fault: bool,

    rounds: usize,
    row_dev: f64,
    off_pattern: usize,
    pattern_min: f64,
    w_row_dev: f64,
    floor_drops: usize,
    worst_floor_drop: f64,

    starts: Vec<usize>,
    products: Vec<Option<TransitionProduct>>,
    limits: Vec<Option<DVector<f64>>>,
    rate_samples: usize,
    rate_violations: usize,
    worst_rate_ratio: f64,
    error: Option<MixingError>,
}

impl Auditor {
    fn record(&mut self, k: usize) -> bool {
        (k + 1).is_multiple_of(self.record_every) || k + 1 == self.k_max || k == 0
    }
}

impl RoundObserver for Auditor {
    fn tamper(&mut self, mixing: &mut MixingMatrix) {
        if self.inject_fault && mixing.k == 0 {
            mixing.a[(0, 0)] += 0.25;
        }
    }

    fn observe(&mut self, r: &Round<'_>) {
        self.rounds += 1;
        let audit = audit_mixing(&self.graph, &r.mixing.a);
        self.row_dev = self.row_dev.max(audit.row_sum_deviation);
        self.off_pattern += audit.off_pattern_nonzero;
        self.pattern_min = self.pattern_min.min(audit.pattern_min);

        self.w_row_dev = self.w_row_dev.max(r.w_after.row_sum_deviation());
        let drop = r.w_before.min_entry() - r.w_after.min_entry();
        if drop > FLOOR_SLACK {
            self.floor_drops += 1;
        }
        self.worst_floor_drop = self.worst_floor_drop.max(drop);

        let sample = self.record(r.k);
        for idx in 0..self.starts.len() {
            let s = self.starts[idx];
            if r.k < s {
                continue;
            }
            if r.k == s {
                self.products[idx] = Some(TransitionProduct::seed(r.mixing));
                match transition_limit_row(
                    &self.graph,
                    r.w_before,
                    &self.op,
                    self.from_updated,
                    LIMIT_ROW_TOLERANCE,
                    LIMIT_ROW_MAX_FACTORS,
                ) {
                    Ok(row) => self.limits[idx] = Some(row),
                    Err(e) => self.error = Some(e),
                }
            } else if let Some(p) = self.products[idx].as_mut() {
                if let Err(e) = p.accumulate(r.mixing) {
                    self.error = Some(e);
                }
            }
            if sample {
                if let (Some(p), Some(phi)) = (&self.products[idx], &self.limits[idx]) {
                    let dist = p.distance_to_rank_one(phi);
                    match geometric_bound(self.eta, self.graph.agent_count(), r.k, s) {
                        Ok(bound) => {
                            self.rate_samples += 1;
                            let slack = rate_slack(self.graph.agent_count(), r.k, s);
                            if dist > bound + slack {
                                self.rate_violations += 1;
                            }
                            if bound > slack {
                                self.worst_rate_ratio = self.worst_rate_ratio.max(dist / bound);
                            }
                        }
                        Err(e) => self.error = Some(e),
                    }
                }
            }
        }
    }
}

/// Runs `cfg` under audit and reports one check per property.
pub fn verify_matrix(
    cfg: &RunConfig,
    opts: &VerifyOptions,
) -> Result<(AuditReport, RunResult), VerifyError> {
    cfg.validate()?;
    let op = ConsensusOperator::new(&cfg.graph.matrices(), cfg.c).map_err(EngineError::from)?;
    let eta = cfg.w0.min_entry();
    let mut starts = opts
        .starts
        .clone()
        .unwrap_or_else(|| vec![0, cfg.k_max / 4, cfg.k_max / 2]);
    starts.retain(|&s| s < cfg.k_max);
    starts.sort_unstable();
    starts.dedup();
    let mut auditor = Auditor {
        graph: cfg.graph.clone(),
        op,
        from_updated: cfg.a_from_updated_w,
        eta,
        k_max: cfg.k_max,
        record_every: cfg.record_every,
        inject_fault: opts.inject_fault,
        rounds: 0,
        row_dev: 0.0,
        off_pattern: 0,
        pattern_min: f64::INFINITY,
        w_row_dev: 0.0,
        floor_drops: 0,
        worst_floor_drop: f64::NEG_INFINITY,
        products: vec![None; starts.len()],
        limits: vec![None; starts.len()],
        starts,
        rate_samples: 0,
        rate_violations: 0,
        worst_rate_ratio: 0.0,
        error: None,
    };
    let result = run_observed(cfg, &mut auditor)?;
    if let Some(e) = auditor.error.take() {
        return Err(e.into());
    }

    let mut rep = AuditReport::default();
    rep.add(
        "mixing row sums",
        auditor.row_dev <= ROW_SUM_TOLERANCE,
        format!(
            "max |row sum - 1| = {:.3e} over {} rounds (tolerance {ROW_SUM_TOLERANCE:e})",
            auditor.row_dev, auditor.rounds
        ),
    );
    rep.add(
        "mixing sparsity",
        auditor.off_pattern == 0,
        format!("{} nonzero entries outside the closed neighborhood", auditor.off_pattern),
    );
    rep.add(
        "mixing floor",
        auditor.pattern_min >= eta - FLOOR_SLACK,
        format!("min entry on pattern {:.6e} vs eta_a {:.6e}", auditor.pattern_min, eta),
    );
    rep.add(
        "priority row sums",
        auditor.w_row_dev <= ROW_SUM_TOLERANCE,
        format!("max |row sum - 1| = {:.3e}", auditor.w_row_dev),
    );
    rep.add(
        "priority minimum non-decreasing",
        auditor.floor_drops == 0,
        format!(
            "{} rounds where the minimum fell by more than {FLOOR_SLACK:e} (largest change {:.3e})",
            auditor.floor_drops, auditor.worst_floor_drop
        ),
    );

    let wbar = average_priorities(&cfg.w0);
    let dec = limit_decomposition(&cfg.graph, &wbar, eta)?;
    let res = dec.residuals(POWER_SPLIT_MAX);
    rep.add(
        "limit floor",
        dec.phi_floor_holds(),
        format!("min wbar {:.6e} vs eta_a {:.6e}", dec.phi_min(), eta),
    );
    rep.add(
        "limit identities",
        res.wbar_c <= IDENTITY_TOLERANCE && res.c_wbar <= IDENTITY_TOLERANCE,
        format!("|Wbar C| = {:.3e}, |C Wbar| = {:.3e}", res.wbar_c, res.c_wbar),
    );
    rep.add(
        "limit power split",
        res.power_split <= POWER_SPLIT_TOLERANCE,
        format!(
            "max over r = 2..{POWER_SPLIT_MAX} of |(Wbar+C)^r - Wbar^r - C^r| = {:.3e}",
            res.power_split
        ),
    );
    match dec.c_spectral_radius() {
        Ok(rho) => rep.add("limit residual radius", rho < 1.0, format!("rho(C) = {rho:.12}")),
        Err(e) => rep.add("limit residual radius", false, e.to_string()),
    }

    rep.add(
        "transition rate",
        auditor.rate_violations == 0 && auditor.rate_samples > 0,
        format!(
            "{} of {} sampled (k, s) exceed the envelope; starts {:?}; worst ratio {:.3e}",
            auditor.rate_violations, auditor.rate_samples, auditor.starts, auditor.worst_rate_ratio
        ),
    );
    if let (Some(&s), Some(Some(p))) = (auditor.starts.last(), auditor.products.last()) {
        let d = p.distance_to_rank_one(&wbar);
        rep.add(
            "transition limit",
            d <= LATE_LIMIT_TOLERANCE,
            format!(
                "max |Phi({}, {s}) - 1 wbar^T| = {d:.3e} (tolerance {LATE_LIMIT_TOLERANCE:e})",
                cfg.k_max - 1
            ),
        );
    }

    bound_checks(cfg, &result, &mut rep)?;
    Ok((rep, result))
}

fn bound_checks(
    cfg: &RunConfig,
    result: &RunResult,
    rep: &mut AuditReport,
) -> Result<(), VerifyError> {
    let problem = cfg.consensus_problem()?;
    let start = crate::engine::mean_rows(&cfg.x0);
    let xstar = oracle_minimizer(&problem, &start)?;
    let fstar = problem.value(xstar.as_slice())?;
    let report = bound_constants(cfg, result, Some(xstar.as_slice()))?;
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    let mut previous = f64::INFINITY;
    let mut increases = 0;
    for s in &result.samples {
        let b = performance_bound(&report, s.k)?;
        if b > previous {
            increases += 1;
        }
        previous = b;
        for v in &s.value {
            let gap = v - fstar;
            if gap > b {
                violations += 1;
            }
            worst_margin = worst_margin.min(b - gap);
        }
    }
    rep.add(
        "performance bound",
        violations == 0,
        format!(
            "{violations} agent samples above the bound; smallest margin {worst_margin:.6e}"
        ),
    );
    rep.add(
        "performance bound non-increasing",
        increases == 0,
        format!("{increases} increases across {} samples", result.samples.len()),
    );
    let final_gap = result
        .samples
        .last()
        .map(|s| s.value.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v - fstar)))
        .unwrap_or(f64::NAN);
    let asym = asymptotic_bound(&report, &cfg.w0)?;
    rep.add(
        "asymptotic bound",
        asym >= final_gap,
        format!("asymptote {asym:.6e} vs final gap {final_gap:.6e}"),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_scenario;

    fn short(name: &str, k_max: usize) -> RunConfig {
        let mut cfg = builtin_scenario(name).unwrap().config;
        cfg.k_max = k_max;
        cfg.record_every = 50;
        cfg
    }

    #[test]
    fn clean_run_passes() {
        let mut cfg = short("scenario1-row7", 20_000);
        cfg.record_every = 1_000;
        let (rep, _) = verify_matrix(&cfg, &VerifyOptions::default()).unwrap();
        assert!(rep.all_passed(), "{}", rep.render());
    }

    #[test]
    fn injected_fault_is_caught() {
        let opts = VerifyOptions {
            inject_fault: true,
            ..Default::default()
        };
        let (rep, _) = verify_matrix(&short("scenario1-row7", 200), &opts).unwrap();
        assert!(!rep.get("mixing row sums").unwrap().passed);
        assert!(rep.render().contains("FAIL mixing row sums"));
    }
}
