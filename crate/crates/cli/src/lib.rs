//! Subcommand implementations behind the `pareto-consensus` binary.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;

use pareto_consensus::bounds::{asymptotic_bound, bound_constants, performance_bound};
use pareto_consensus::engine::{mean_rows, pareto_sweep, run, RunResult};
use pareto_consensus::fixtures;
use pareto_consensus::objectives::oracle_minimizer;
use pareto_consensus::report::{
    front_table, read_priorities_csv, summary_table, trajectory_table, write_priorities_csv,
    Metadata, ResultTable, SUMMARY_DIGITS, TRAJECTORY_DIGITS,
};
use pareto_consensus::scenario::{builtin_names, builtin_text, parse_scenario_with, Overrides};
use pareto_consensus::verify::{verify_matrix, AuditReport, VerifyOptions};
use pareto_consensus::Scenario;

/// Loads `builtin:NAME` or a scenario file path.
pub fn load_scenario(source: &str, ov: Overrides) -> Result<Scenario> {
    let text = match source.strip_prefix("builtin:") {
        Some(name) => builtin_text(name)?,
        None => fs::read_to_string(source).with_context(|| format!("reading scenario {source}"))?,
    };
    parse_scenario_with(&text, ov).with_context(|| format!("scenario {source}"))
}

fn metadata(s: &Scenario) -> Metadata {
    Metadata::new(&s.name, &s.config, s.c_defaulted, s.config.w0.min_entry())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Output of [`cmd_run`].
pub struct RunOutput {
    pub result: RunResult,
    pub xstar: DVector<f64>,
    pub fstar: f64,
    pub trajectory: ResultTable,
    pub summary: ResultTable,
}

/// Runs a scenario; writes the trajectory CSV to `out` and the summary row
/// to `summary` when given.
pub fn cmd_run(s: &Scenario, out: &Path, summary: Option<&Path>) -> Result<RunOutput> {
    let cfg = &s.config;
    let result = run(cfg)?;
    let problem = cfg.consensus_problem()?;
    let xstar = oracle_minimizer(&problem, &mean_rows(&cfg.x0))?;
    let fstar = problem.value(xstar.as_slice())?;
    let meta = metadata(s);
    let trajectory = trajectory_table(&result, fstar)?;
    write(out, &trajectory.to_csv(&meta, TRAJECTORY_DIGITS)?)?;
    let table = summary_table(cfg, &result, xstar.as_slice())?;
    if let Some(path) = summary {
        write(path, &table.to_csv(&meta, SUMMARY_DIGITS)?)?;
    }
    Ok(RunOutput {
        result,
        xstar,
        fstar,
        trajectory,
        summary: table,
    })
}

/// One run per priority record; front CSV sorted by the first consensus weight.
pub fn cmd_sweep(s: &Scenario, priorities: &Path, out: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(priorities)
        .with_context(|| format!("reading priorities {}", priorities.display()))?;
    let list = read_priorities_csv(&text)?;
    let n = s.config.agent_count();
    if let Some(w) = list.iter().find(|w| w.agent_count() != n) {
        bail!(
            "priorities file has {}x{} matrices, scenario has {n} agents",
            w.agent_count(),
            w.agent_count()
        );
    }
    let front = pareto_sweep(&s.config, &list)?;
    let table = front_table(&front)?;
    let eta = list.iter().map(|w| w.min_entry()).fold(f64::INFINITY, f64::min);
    let meta = Metadata::new(&s.name, &s.config, s.c_defaulted, eta);
    write(out, &table.to_csv(&meta, TRAJECTORY_DIGITS)?)?;
    Ok(table)
}

pub fn cmd_verify(s: &Scenario, inject_fault: bool) -> Result<AuditReport> {
    let opts = VerifyOptions {
        inject_fault,
        ..Default::default()
    };
    let (report, _) = verify_matrix(&s.config, &opts)?;
    Ok(report)
}

/// `k, gap, bound, asymptote` at every sampled round.
pub fn cmd_verify_bounds(s: &Scenario, out: &Path) -> Result<ResultTable> {
    let cfg = &s.config;
    let result = run(cfg)?;
    let problem = cfg.consensus_problem()?;
    let xstar = oracle_minimizer(&problem, &mean_rows(&cfg.x0))?;
    let fstar = problem.value(xstar.as_slice())?;
    let report = bound_constants(cfg, &result, Some(xstar.as_slice()))?;
    let asym = asymptotic_bound(&report, &cfg.w0)?;
    let mut table = ResultTable::new(
        ["k", "gap", "bound", "asymptote"]
            .iter()
            .map(|h| h.to_string())
            .collect(),
    );
    for sample in &result.samples {
        let gap = sample
            .value
            .iter()
            .fold(f64::NEG_INFINITY, |a, v| a.max(v - fstar));
        table.push(vec![
            sample.k as f64,
            gap,
            performance_bound(&report, sample.k)?,
            asym,
        ])?;
    }
    write(out, &table.to_csv(&metadata(s), TRAJECTORY_DIGITS)?)?;
    Ok(table)
}

/// Built-in scenario names and the named objectives.
pub fn fixtures_list() -> String {
    let mut s = String::from("scenarios:\n");
    for name in builtin_names() {
        s.push_str(&format!("  builtin:{name}\n"));
    }
    s.push_str("objectives:\n");
    for o in fixtures::all_named_objectives() {
        s.push_str(&format!("  {} (dimension {})\n", o.name, o.dim));
    }
    s
}

/// The twenty initial priority settings of the two-agent scenario as a CSV.
pub fn fixtures_priorities_csv() -> Result<String> {
    let list: Vec<_> = (1..=fixtures::SCENARIO1_PRIORITIES.len())
        .map(|r| fixtures::scenario1_priorities(r).expect("fixture rows are valid"))
        .collect();
    Ok(write_priorities_csv(&list)?)
}
