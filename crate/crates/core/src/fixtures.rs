//! Built-in experiment fixtures: the two-objective scalar problem with its
//! twenty priority settings, and the twenty-objective, ten-dimensional
//! problem over twenty agents.

use nalgebra::DMatrix;

use crate::graph::Graph;
use crate::objectives::{ExpTerm, Objective};
use crate::priorities::PriorityMatrix;

pub const SCENARIO1_ALPHA: f64 = 2e-5;
pub const SCENARIO1_K_MAX: usize = 100_000;
pub const SCENARIO1_X0: [f64; 2] = [485.0, 200.0];

/// Initial priority rows `(agent 1: w1, w2, agent 2: w1, w2)`.
pub const SCENARIO1_PRIORITIES: [[f64; 4]; 20] = [
    [0.134, 0.866, 0.022, 0.978],
    [0.577, 0.423, 0.026, 0.974],
    [0.139, 0.861, 0.476, 0.524],
    [0.561, 0.439, 0.269, 0.731],
    [0.560, 0.440, 0.301, 0.699],
    [0.521, 0.479, 0.372, 0.628],
    [0.433, 0.567, 0.471, 0.529],
    [0.647, 0.353, 0.308, 0.692],
    [0.287, 0.713, 0.801, 0.199],
    [0.447, 0.553, 0.646, 0.354],
    [0.362, 0.638, 0.788, 0.212],
    [0.849, 0.151, 0.373, 0.627],
    [0.749, 0.251, 0.504, 0.496],
    [0.549, 0.451, 0.728, 0.272],
    [0.780, 0.220, 0.669, 0.331],
    [0.896, 0.104, 0.598, 0.402],
    [0.716, 0.284, 0.839, 0.161],
    [0.937, 0.063, 0.830, 0.170],
    [0.884, 0.116, 0.944, 0.056],
    [0.939, 0.061, 0.981, 0.019],
];

/// Published results per setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub wbar: [f64; 2],
    pub xstar: f64,
    pub xhat: f64,
    pub value_at_xstar: f64,
    pub value_at_xhat: f64,
}

const fn row(w1: f64, w2: f64, xs: f64, xh: f64, fs: f64, fh: f64) -> ReferenceRow {
    ReferenceRow {
        wbar: [w1, w2],
        xstar: xs,
        xhat: xh,
        value_at_xstar: fs,
        value_at_xhat: fh,
    }
}

pub const SCENARIO1_REFERENCE: [ReferenceRow; 20] = [
    row(0.078, 0.922, -265.57, -265.56, 21_849.0, 21_849.0),
    row(0.301, 0.699, -232.34, -232.33, 50_241.0, 50_241.0),
    row(0.307, 0.693, -231.32, -231.31, 50_840.0, 50_840.0),
    row(0.415, 0.585, -210.92, -210.91, 60_258.0, 60_258.0),
    row(0.430, 0.570, -207.71, -207.70, 61_325.0, 61_325.0),
    row(0.447, 0.553, -204.20, -204.19, 62_375.0, 62_375.0),
    row(0.452, 0.548, -203.07, -203.06, 62_688.0, 62_688.0),
    row(0.477, 0.523, -197.42, -197.41, 64_077.0, 64_077.0),
    row(0.544, 0.456, -181.39, -181.38, 66_550.0, 66_550.0),
    row(0.546, 0.454, -180.70, -180.69, 66_612.0, 66_612.0),
    row(0.575, 0.425, -173.09, -173.08, 67_064.0, 67_064.0),
    row(0.611, 0.389, -163.16, -163.15, 67_069.0, 67_069.0),
    row(0.626, 0.374, -158.57, -158.56, 66_863.0, 66_863.0),
    row(0.639, 0.361, -154.86, -154.85, 66_606.0, 66_606.0),
    row(0.724, 0.276, -126.37, -126.36, 62_224.0, 62_224.0),
    row(0.747, 0.253, -118.03, -118.03, 60_231.0, 60_231.0),
    row(0.777, 0.223, -106.02, -106.01, 56_865.0, 56_865.0),
    row(0.883, 0.117, -56.99, -56.96, 38_136.0, 38_136.0),
    row(0.914, 0.086, -40.30, -40.25, 30_263.0, 30_263.0),
    row(0.960, 0.040, -12.26, -12.18, 15_674.0, 15_674.0),
];

/// `2(x − 15)² + 100` and `5(x + 275)² + 10000`.
pub fn scenario1_objectives() -> Vec<Objective> {
    vec![
        Objective::affine_quadratic(0, 2.0, 15.0, 100.0).expect("valid"),
        Objective::affine_quadratic(0, 5.0, -275.0, 10_000.0).expect("valid"),
    ]
}

pub fn scenario1_graph() -> Graph {
    Graph::complete(2).expect("two agents")
}

/// Priority setting `row` (1-based, 1..=20).
pub fn scenario1_priorities(row: usize) -> Option<PriorityMatrix> {
    let r = SCENARIO1_PRIORITIES.get(row.checked_sub(1)?)?;
    PriorityMatrix::from_rows(&[vec![r[0], r[1]], vec![r[2], r[3]]]).ok()
}

pub const SCENARIO2_AGENTS: usize = 20;
pub const SCENARIO2_DIM: usize = 10;
pub const SCENARIO2_ALPHA: f64 = 1e-4;
pub const SCENARIO2_K_MAX: usize = 100_000;
pub const SCENARIO2_CHORD_STRIDE: usize = 5;

fn exp(coord: usize, scale: f64, rate: f64) -> ExpTerm {
    ExpTerm { coord, scale, rate }
}

fn quad2(scale: f64) -> Objective {
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]) * scale;
    Objective::quadratic_form(vec![0, 1], q).expect("positive definite")
}

/// The twenty objectives, in agent order.
///
/// The nineteenth is `2(x1² + x1 x2 + x2²)`; the form with a linear `x1`
/// term is not convex.
pub fn scenario2_objectives() -> Vec<Objective> {
    let ok = |r: Result<Objective, _>| r.expect("valid fixture");
    vec![
        quad2(1.0),
        quad2(5.0),
        ok(Objective::linear(vec![0, 1, 2], vec![10.0, 15.0, 20.0], 0.0)),
        Objective::sum_of_squares((0..10).collect()),
        ok(Objective::exp_sum(vec![exp(0, 1.0, 1.0)])),
        ok(Objective::affine_quadratic(0, 3.0, -17.0, 150.0)),
        ok(Objective::affine_quadratic(0, 30.0, -3.0, 30.0)),
        ok(Objective::affine_quadratic(0, 7.0, 10.0, 10.0)),
        Objective::sum_of_squares(vec![0, 1]),
        ok(Objective::linear(vec![0, 1, 2], vec![1.0; 3], 0.0)),
        ok(Objective::affine_quadratic(0, 2.0, 0.0, 0.0)),
        ok(Objective::affine_quadratic(0, 1.0, 0.0, 0.0)),
        ok(Objective::linear(vec![0], vec![5.0], 150.0)),
        ok(Objective::linear((0..6).collect(), vec![1.0; 6], 0.0)),
        ok(Objective::affine_quadratic(0, 10.0, -25.0, 0.0)),
        ok(Objective::exp_sum(vec![
            exp(0, 1.0, 2.0),
            exp(1, 1.0, 3.0),
            exp(2, 1.0, 3.0),
            exp(3, 1.0, 3.0),
        ])),
        Objective::sum_of_squares((0..6).collect()),
        ok(Objective::affine_quadratic(0, 15.0, 15.0, -100.0)),
        quad2(2.0),
        ok(Objective::exp_sum(vec![exp(0, 100.0, 1.0)])),
    ]
}

/// Ring over all agents plus chords `(i, i + 5 mod 20)`.
pub fn scenario2_graph() -> Graph {
    Graph::ring_plus_chords(SCENARIO2_AGENTS, SCENARIO2_CHORD_STRIDE).expect("connected")
}

/// Spread initial states in `[−5, 5]`, with the exponential coordinates
/// `x2..x4` capped at 1.
pub fn scenario2_initial_states() -> Vec<Vec<f64>> {
    (0..SCENARIO2_AGENTS)
        .map(|i| {
            (0..SCENARIO2_DIM)
                .map(|p| {
                    let v = ((7 * i + 3 * p) % 11) as f64 - 5.0;
                    if (1..=3).contains(&p) {
                        v.min(1.0)
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

/// A named objective from either scenario.
#[derive(Debug, Clone)]
pub struct NamedObjective {
    pub name: String,
    pub objective: Objective,
    pub dim: usize,
}

/// All 22 objectives: `s1.f1`, `s1.f2`, `s2.f1` .. `s2.f20`.
pub fn all_named_objectives() -> Vec<NamedObjective> {
    let s1 = scenario1_objectives().into_iter().enumerate().map(|(i, o)| NamedObjective {
        name: format!("s1.f{}", i + 1),
        objective: o,
        dim: 1,
    });
    let s2 = scenario2_objectives().into_iter().enumerate().map(|(i, o)| NamedObjective {
        name: format!("s2.f{}", i + 1),
        objective: o,
        dim: SCENARIO2_DIM,
    });
    s1.chain(s2).collect()
}
