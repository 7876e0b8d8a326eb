use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pareto_consensus::fixtures::{
    all_named_objectives, scenario1_objectives, scenario2_objectives, SCENARIO1_PRIORITIES,
    SCENARIO1_REFERENCE, SCENARIO2_AGENTS, SCENARIO2_DIM,
};
use pareto_consensus::objectives::{
    centralized_minimize, fd_check, oracle_minimizer, quadratic_minimizer, WeightedProblem,
    ORACLE_TOLERANCE,
};
use nalgebra::DVector;

/// Sampling box; `rate · x ≤ 9`.
const BOX: f64 = 3.0;
const FD_STEP: f64 = 1e-6;
const FD_TOLERANCE: f64 = 1e-5;

fn random_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-BOX..BOX)).collect()
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for named in all_named_objectives() {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let x = random_point(named.dim, &mut rng);
            let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            worst = worst.max(fd_check(&named.objective, &x, FD_STEP * scale).unwrap());
        }
        assert!(worst <= FD_TOLERANCE, "{}: {worst:e}", named.name);
    }
}

#[test]
fn fixture_objectives_are_midpoint_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for named in all_named_objectives() {
        for _ in 0..1000 {
            let x = random_point(named.dim, &mut rng);
            let y = random_point(named.dim, &mut rng);
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let f = |p: &[f64]| named.objective.evaluate(p).unwrap();
            let (fx, fy, fm) = (f(&x), f(&y), f(&mid));
            let slack = 1e-12 * (1.0 + fx.abs() + fy.abs());
            assert!(fm <= 0.5 * (fx + fy) + slack, "{} at {x:?}, {y:?}", named.name);
        }
    }
}

/// Two-agent closed form: `x* = Σ w_j a_j c_j / Σ w_j a_j` for `a_j (x − c_j)² + d_j`.
fn scenario1_closed_form(wbar: [f64; 2]) -> f64 {
    let (a, c) = ([2.0, 5.0], [15.0, -275.0]);
    (wbar[0] * a[0] * c[0] + wbar[1] * a[1] * c[1]) / (wbar[0] * a[0] + wbar[1] * a[1])
}

fn column_means(row: &[f64; 4]) -> [f64; 2] {
    [(row[0] + row[2]) / 2.0, (row[1] + row[3]) / 2.0]
}

#[test]
fn two_agent_minimizers_agree_with_the_closed_form() {
    for row in &SCENARIO1_PRIORITIES {
        let wbar = column_means(row);
        let expected = scenario1_closed_form(wbar);
        let p = WeightedProblem::new(scenario1_objectives(), DVector::from_column_slice(&wbar), 1)
            .unwrap();
        let exact = quadratic_minimizer(&p).unwrap()[0];
        let descent = centralized_minimize(&p, &[0.0], ORACLE_TOLERANCE).unwrap();
        assert!((exact - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        assert!((descent.x[0] - expected).abs() <= 1e-8 * expected.abs().max(1.0));
    }
}

#[test]
fn two_agent_reference_weights_and_minimizers() {
    for (row, reference) in SCENARIO1_PRIORITIES.iter().zip(&SCENARIO1_REFERENCE) {
        let wbar = column_means(row);
        for j in 0..2 {
            assert!((wbar[j] - reference.wbar[j]).abs() <= 1e-3, "{wbar:?} vs {:?}", reference.wbar);
        }
        let xstar = scenario1_closed_form(wbar);
        assert!((xstar - reference.xstar).abs() <= 0.15, "{xstar} vs {}", reference.xstar);
        let p = WeightedProblem::new(scenario1_objectives(), DVector::from_column_slice(&wbar), 1)
            .unwrap();
        let f = p.value(&[xstar]).unwrap();
        let rel = (f - reference.value_at_xstar).abs() / reference.value_at_xstar.abs();
        assert!(rel <= 0.01, "{f} vs {}", reference.value_at_xstar);
    }
}

fn golden_section(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    while hi - lo > tol {
        if ga <= gb {
            hi = b;
            b = a;
            gb = ga;
            a = hi - r * (hi - lo);
            ga = g(a);
        } else {
            lo = a;
            a = b;
            ga = gb;
            b = lo + r * (hi - lo);
            gb = g(b);
        }
    }
    0.5 * (lo + hi)
}

/// Cyclic coordinate search on function values only.
fn coordinate_search(p: &WeightedProblem, dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for _ in 0..5_000 {
        let mut moved = 0.0f64;
        for c in 0..dim {
            let old = x[c];
            let mut probe = x.clone();
            let best = golden_section(
                |v| {
                    probe[c] = v;
                    p.value(&probe).unwrap()
                },
                old - 40.0,
                old + 40.0,
                1e-11,
            );
            x[c] = best;
            moved = moved.max((best - old).abs());
        }
        if moved <= 1e-10 {
            break;
        }
    }
    x
}

#[test]
fn twenty_agent_oracle_matches_an_independent_search() {
    let weights = DVector::from_element(SCENARIO2_AGENTS, 1.0 / SCENARIO2_AGENTS as f64);
    let p = WeightedProblem::new(scenario2_objectives(), weights, SCENARIO2_DIM).unwrap();
    let oracle = centralized_minimize(&p, &[0.0; SCENARIO2_DIM], ORACLE_TOLERANCE).unwrap();
    assert!(oracle.grad_norm <= ORACLE_TOLERANCE);
    let via_entry = oracle_minimizer(&p, &[1.0; SCENARIO2_DIM]).unwrap();
    assert!((&via_entry - &oracle.x).amax() <= 1e-7);

    let search = coordinate_search(&p, SCENARIO2_DIM);
    let gap = search
        .iter()
        .zip(oracle.x.iter())
        .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
    assert!(gap <= 1e-5, "coordinate search {search:?} vs oracle {:?}", oracle.x);
    let fs = p.value(&search).unwrap();
    assert!((fs - oracle.value).abs() <= 1e-12 * oracle.value.abs());
    assert!((oracle.value - 576.4015103).abs() <= 1e-6, "f* = {}", oracle.value);
}

#[test]
fn weighted_problems_reject_bad_weights() {
    let objs = scenario1_objectives();
    assert!(WeightedProblem::new(objs.clone(), DVector::from_column_slice(&[0.5, 0.6]), 1).is_err());
    assert!(WeightedProblem::new(objs.clone(), DVector::from_column_slice(&[1.0, 0.0]), 1).is_err());
    assert!(WeightedProblem::new(objs, DVector::from_column_slice(&[1.0]), 1).is_err());
}
