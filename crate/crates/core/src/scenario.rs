//! Scenario files: a TOML description of topology, objectives, initial
//! priorities and states, and run parameters.
//!
//! ```toml
//! name = "example"
//! alpha = 2e-5
//! k_max = 100000
//! record_every = 100            # optional, default 100
//! c = 0.45                      # optional, default 0.9 / max degree
//! builtin_objectives = "scenario1"   # or [[objective]] tables
//! initial_priorities = [[0.134, 0.866], [0.022, 0.978]]   # or "uniform"
//! initial_states = [[485.0], [200.0]]
//!
//! [topology]
//! kind = "complete"   # path | ring | ring_plus_chords | random | edges
//! n = 2
//! # stride = 5        (ring_plus_chords)
//! # p = 0.3, seed = 1 (random)
//! # edges = [[1, 2]]  (edges, 1-based)
//!
//! [[objective]]
//! kind = "affine_quadratic"   # coord, scale, center, offset
//! coord = 1
//! scale = 2.0
//! center = 15.0
//!
//! [flags]
//! track_phi = false
//! l1_cap = 10.0
//! a_from_updated_w = false
//! ```
//!
//! Other objective kinds: `quadratic_form` (coords, matrix), `linear`
//! (coords, coeffs, offset), `exp_sum` (terms = [{coord, scale, rate}]),
//! `sum_of_squares` (coords), `composite` (parts = [{weight, objective}]).
//! Coordinates are 1-based.

use nalgebra::DMatrix;
use serde::Deserialize;
use thiserror::Error;

use crate::engine::{EngineError, RunConfig, DEFAULT_RECORD_EVERY};
use crate::fixtures;
use crate::graph::Graph;
use crate::objectives::{ExpTerm, Objective};
use crate::priorities::{default_gain, ConsensusOperator, PriorityError, PriorityMatrix};

pub const SCENARIO1_TOML: &str = include_str!("../fixtures/scenario1.toml");
pub const SCENARIO2_TOML: &str = include_str!("../fixtures/scenario2.toml");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
}

fn field(path: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Field {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    alpha: f64,
    k_max: usize,
    record_every: Option<usize>,
    c: Option<f64>,
    topology: TopologyEntry,
    builtin_objectives: Option<String>,
    #[serde(default)]
    objective: Vec<ObjectiveEntry>,
    initial_priorities: PriorityEntry,
    initial_states: Vec<Vec<f64>>,
    #[serde(default)]
    flags: Flags,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyEntry {
    kind: String,
    n: usize,
    stride: Option<usize>,
    p: Option<f64>,
    seed: Option<u64>,
    edges: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PriorityEntry {
    Named(String),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Flags {
    #[serde(default)]
    track_phi: bool,
    l1_cap: Option<f64>,
    #[serde(default)]
    a_from_updated_w: bool,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveEntry {
    AffineQuadratic {
        coord: usize,
        scale: f64,
        center: f64,
        #[serde(default)]
        offset: f64,
    },
    QuadraticForm {
        coords: Vec<usize>,
        matrix: Vec<Vec<f64>>,
    },
    Linear {
        coords: Vec<usize>,
        coeffs: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    ExpSum {
        terms: Vec<ExpEntry>,
    },
    SumOfSquares {
        coords: Vec<usize>,
    },
    Composite {
        parts: Vec<PartEntry>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpEntry {
    coord: usize,
    scale: f64,
    rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartEntry {
    weight: f64,
    objective: ObjectiveEntry,
}

/// A parsed scenario with the defaults that were filled in.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub config: RunConfig,
    pub c_defaulted: bool,
    pub record_every_defaulted: bool,
    /// Objective set name when `builtin_objectives` was used.
    pub builtin_objectives: Option<String>,
}

fn zero_based(path: &str, coord: usize) -> Result<usize, ScenarioError> {
    coord
        .checked_sub(1)
        .ok_or_else(|| field(path, "coordinates are 1-based; got 0"))
}

fn coords0(path: &str, coords: &[usize]) -> Result<Vec<usize>, ScenarioError> {
    coords.iter().map(|&c| zero_based(path, c)).collect()
}

fn build_objective(path: &str, entry: &ObjectiveEntry) -> Result<Objective, ScenarioError> {
    let bad = |e: crate::objectives::ObjectiveError| field(path, e);
    match entry {
        ObjectiveEntry::AffineQuadratic {
            coord,
            scale,
            center,
            offset,
        } => Objective::affine_quadratic(
            zero_based(&format!("{path}.coord"), *coord)?,
            *scale,
            *center,
            *offset,
        )
        .map_err(bad),
        ObjectiveEntry::QuadraticForm { coords, matrix } => {
            let d = coords.len();
            if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                return Err(field(
                    format!("{path}.matrix"),
                    format!("must be {d}x{d} to match coords"),
                ));
            }
            let q = DMatrix::from_fn(d, d, |r, c| matrix[r][c]);
            Objective::quadratic_form(coords0(&format!("{path}.coords"), coords)?, q).map_err(bad)
        }
        ObjectiveEntry::Linear {
            coords,
            coeffs,
            offset,
        } => Objective::linear(coords0(&format!("{path}.coords"), coords)?, coeffs.clone(), *offset)
            .map_err(bad),
        ObjectiveEntry::ExpSum { terms } => {
            let terms = terms
                .iter()
                .enumerate()
                .map(|(t, e)| {
                    Ok(ExpTerm {
                        coord: zero_based(&format!("{path}.terms[{t}].coord"), e.coord)?,
                        scale: e.scale,
                        rate: e.rate,
                    })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            Objective::exp_sum(terms).map_err(bad)
        }
        ObjectiveEntry::SumOfSquares { coords } => Ok(Objective::sum_of_squares(coords0(
            &format!("{path}.coords"),
            coords,
        )?)),
        ObjectiveEntry::Composite { parts } => {
            let parts = parts
                .iter()
                .enumerate()
                .map(|(t, p)| {
                    Ok((
                        p.weight,
                        build_objective(&format!("{path}.parts[{t}].objective"), &p.objective)?,
                    ))
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            Objective::composite(parts).map_err(bad)
        }
    }
}

fn build_graph(t: &TopologyEntry, seed_override: Option<u64>) -> Result<Graph, ScenarioError> {
    fn need<T>(t: &TopologyEntry, name: &str, v: Option<T>) -> Result<T, ScenarioError> {
        v.ok_or_else(|| field(format!("topology.{name}"), format!("required for kind `{}`", t.kind)))
    }
    let g = match t.kind.as_str() {
        "complete" => Graph::complete(t.n),
        "path" => Graph::path(t.n),
        "ring" => Graph::ring(t.n),
        "ring_plus_chords" => Graph::ring_plus_chords(t.n, need(t, "stride", t.stride)?),
        "random" => Graph::random_connected(
            t.n,
            need(t, "p", t.p)?,
            seed_override.or(t.seed).unwrap_or(0),
        ),
        "edges" => {
            let edges: Vec<(usize, usize)> = need(t, "edges", t.edges.as_ref())?
                .iter()
                .map(|e| (e[0], e[1]))
                .collect();
            Graph::new(t.n, &edges)
        }
        other => {
            return Err(field(
                "topology.kind",
                format!(
                    "unknown kind `{other}` (expected complete, path, ring, ring_plus_chords, random or edges)"
                ),
            ))
        }
    };
    g.map_err(|e| field("topology", e))
}

fn priority_error(e: PriorityError) -> ScenarioError {
    match e {
        PriorityError::RowSum { agent, .. } | PriorityError::NotStrictlyPositive { agent, .. } => {
            field(format!("initial_priorities[{}]", agent - 1), e)
        }
        other => field("initial_priorities", other),
    }
}

/// Options applied on top of the file contents.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    /// Seed for `random` topologies.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    parse_scenario_with(text, Overrides::default())
}

pub fn parse_scenario_with(text: &str, ov: Overrides) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let graph = build_graph(&file.topology, ov.seed)?;
    let n = graph.agent_count();

    let objectives = match (&file.builtin_objectives, file.objective.is_empty()) {
        (Some(_), false) => {
            return Err(field(
                "objective",
                "give either builtin_objectives or [[objective]] tables, not both",
            ))
        }
        (Some(name), true) => match name.as_str() {
            "scenario1" => fixtures::scenario1_objectives(),
            "scenario2" => fixtures::scenario2_objectives(),
            other => {
                return Err(field(
                    "builtin_objectives",
                    format!("unknown set `{other}` (expected scenario1 or scenario2)"),
                ))
            }
        },
        (None, true) => return Err(field("objective", "no objectives given")),
        (None, false) => file
            .objective
            .iter()
            .enumerate()
            .map(|(i, s)| build_objective(&format!("objective[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?,
    };
    if objectives.len() != n {
        return Err(field(
            "objective",
            format!("{} objectives for {n} agents", objectives.len()),
        ));
    }

    let w0 = match &file.initial_priorities {
        PriorityEntry::Named(s) if s == "uniform" => PriorityMatrix::uniform(n),
        PriorityEntry::Named(s) => {
            return Err(field(
                "initial_priorities",
                format!("`{s}` is not a matrix or \"uniform\""),
            ))
        }
        PriorityEntry::Rows(rows) => PriorityMatrix::from_rows(rows).map_err(priority_error)?,
    };
    if w0.agent_count() != n {
        return Err(field(
            "initial_priorities",
            format!("{} rows for {n} agents", w0.agent_count()),
        ));
    }

    let gm = graph.matrices();
    let c_defaulted = file.c.is_none();
    let c = file.c.unwrap_or_else(|| default_gain(&gm));
    ConsensusOperator::new(&gm, c).map_err(|e| field("c", e))?;

    let record_every_defaulted = file.record_every.is_none();
    let config = RunConfig {
        graph,
        objectives,
        w0,
        x0: file.initial_states,
        alpha: file.alpha,
        c,
        k_max: file.k_max,
        record_every: file.record_every.unwrap_or(DEFAULT_RECORD_EVERY),
        track_phi: file.flags.track_phi,
        l1_cap: file.flags.l1_cap,
        a_from_updated_w: file.flags.a_from_updated_w,
        threads: ov.threads.unwrap_or(1),
    };
    config.validate().map_err(|e| match e {
        EngineError::Config { field: f, message } => field(f, message),
        EngineError::CountMismatch { what, expected, got } => {
            field("initial_states", format!("{what}: expected {expected}, got {got}"))
        }
        EngineError::Agent { agent, message } => {
            field(format!("initial_states[{}]", agent - 1), message)
        }
        other => field("scenario", other),
    })?;

    Ok(Scenario {
        name: file.name,
        config,
        c_defaulted,
        record_every_defaulted,
        builtin_objectives: file.builtin_objectives,
    })
}

/// Names accepted by [`builtin_text`].
pub fn builtin_names() -> Vec<String> {
    let mut names = vec!["scenario1".to_string(), "scenario2".to_string()];
    names.extend((1..=20).map(|r| format!("scenario1-row{r}")));
    names
}

/// Scenario text for a built-in name; `scenario1-rowN` swaps in the N-th
/// priority setting.
pub fn builtin_text(name: &str) -> Result<String, ScenarioError> {
    match name {
        "scenario1" => Ok(SCENARIO1_TOML.to_string()),
        "scenario2" => Ok(SCENARIO2_TOML.to_string()),
        _ => {
            let row: usize = name
                .strip_prefix("scenario1-row")
                .and_then(|r| r.parse().ok())
                .filter(|r| (1..=20).contains(r))
                .ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))?;
            let p = fixtures::SCENARIO1_PRIORITIES[row - 1];
            let text = SCENARIO1_TOML
                .replace("name = \"scenario1\"", &format!("name = \"{name}\""))
                .replace(
                    "initial_priorities = [[0.134, 0.866], [0.022, 0.978]]",
                    &format!(
                        "initial_priorities = [[{:?}, {:?}], [{:?}, {:?}]]",
                        p[0], p[1], p[2], p[3]
                    ),
                );
            Ok(text)
        }
    }
}

pub fn builtin_scenario(name: &str) -> Result<Scenario, ScenarioError> {
    parse_scenario(&builtin_text(name)?)
}
