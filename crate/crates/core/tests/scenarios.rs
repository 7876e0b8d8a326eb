use pareto_consensus::engine::{pareto_sweep, run, EngineError};
use pareto_consensus::fixtures::{self, SCENARIO1_REFERENCE};
use pareto_consensus::objectives::oracle_minimizer;
use pareto_consensus::report::{read_priorities_csv, write_priorities_csv};
use pareto_consensus::scenario::{builtin_names, builtin_scenario, parse_scenario, ScenarioError};

fn two_agent(row: usize, k_max: usize) -> pareto_consensus::RunConfig {
    let mut cfg = builtin_scenario(&format!("scenario1-row{row}")).unwrap().config;
    cfg.k_max = k_max;
    cfg
}

#[test]
fn builtins_match_the_fixture_module() {
    assert_eq!(builtin_names().len(), 22);
    let s1 = builtin_scenario("scenario1").unwrap();
    assert_eq!(s1.config.w0, fixtures::scenario1_priorities(1).unwrap());
    assert_eq!(s1.config.x0, vec![vec![485.0], vec![200.0]]);
    assert_eq!(s1.config.alpha, fixtures::SCENARIO1_ALPHA);
    assert!(s1.c_defaulted);
    assert_eq!(s1.config.c, 0.9);
    for row in 1..=20 {
        let s = builtin_scenario(&format!("scenario1-row{row}")).unwrap();
        assert_eq!(s.config.w0, fixtures::scenario1_priorities(row).unwrap());
    }
    let s2 = builtin_scenario("scenario2").unwrap();
    assert_eq!(s2.config.x0, fixtures::scenario2_initial_states());
    assert_eq!(s2.config.graph, fixtures::scenario2_graph());
    assert_eq!(s2.config.objectives, fixtures::scenario2_objectives());
    assert!(s2.config.w0.is_consensual());
}

#[test]
fn two_agent_final_iterates_settle_near_the_weighted_minimizer() {
    let cfg = two_agent(1, fixtures::SCENARIO1_K_MAX);
    let result = run(&cfg).unwrap();
    let xstar = oracle_minimizer(&cfg.consensus_problem().unwrap(), &[0.0]).unwrap()[0];
    assert!((xstar - SCENARIO1_REFERENCE[0].xstar).abs() <= 0.15);
    for x in &result.x_final {
        assert!((x[0] - xstar).abs() <= 0.05, "{} vs {xstar}", x[0]);
    }
    // The running average still carries the start-up transient.
    assert!(result.xhat_mean()[0] > xstar);
}

#[test]
fn samples_follow_the_recording_schedule() {
    let mut cfg = two_agent(3, 250);
    cfg.record_every = 100;
    let ks: Vec<usize> = run(&cfg).unwrap().samples.iter().map(|s| s.k).collect();
    assert_eq!(ks, vec![1, 100, 200, 250]);
}

#[test]
fn a_single_round_averages_one_iterate() {
    let cfg = two_agent(1, 1);
    let result = run(&cfg).unwrap();
    assert_eq!(result.samples.len(), 1);
    assert_eq!(result.xhat, result.x_final);
}

#[test]
fn mixing_order_flag_only_matters_before_priority_consensus() {
    let mut cfg = two_agent(5, 2_000);
    let plain = run(&cfg).unwrap();
    cfg.a_from_updated_w = true;
    let updated = run(&cfg).unwrap();
    assert_ne!(plain.xhat, updated.xhat);

    let mut s2 = builtin_scenario("scenario2").unwrap().config;
    s2.k_max = 300;
    let plain = run(&s2).unwrap();
    s2.a_from_updated_w = true;
    let updated = run(&s2).unwrap();
    assert_eq!(plain.xhat, updated.xhat);
}

#[test]
fn twenty_agent_gap_shrinks() {
    let mut cfg = builtin_scenario("scenario2").unwrap().config;
    cfg.k_max = 5_000;
    cfg.record_every = 500;
    let problem = cfg.consensus_problem().unwrap();
    let xstar = oracle_minimizer(&problem, &[0.0; 10]).unwrap();
    let fstar = problem.value(xstar.as_slice()).unwrap();
    let result = run(&cfg).unwrap();
    let gap = |i: usize| {
        result.samples[i]
            .value
            .iter()
            .fold(f64::NEG_INFINITY, |a, v| a.max(v - fstar))
    };
    assert!(gap(result.samples.len() - 1) < 0.5 * gap(0));
}

#[test]
fn diverging_iterates_are_reported() {
    let mut cfg = builtin_scenario("scenario2").unwrap().config;
    cfg.alpha = 10.0;
    cfg.k_max = 2_000;
    match run(&cfg) {
        Err(EngineError::NonFinite { .. }) => {}
        other => panic!("expected a non-finite error, got {other:?}"),
    }
}

#[test]
fn sweep_points_are_sorted_by_first_weight() {
    let base = two_agent(1, 2_000);
    let list: Vec<_> = [20, 1, 10].iter().map(|&r| fixtures::scenario1_priorities(r).unwrap()).collect();
    let front = pareto_sweep(&base, &list).unwrap();
    assert_eq!(front.iter().map(|p| p.setting).collect::<Vec<_>>(), vec![1, 2, 0]);
    for p in &front {
        let w = p.wbar[0] * p.values[0] + p.wbar[1] * p.values[1];
        assert!((w - p.weighted).abs() <= 1e-9 * w.abs());
    }
}

#[test]
fn priority_csv_round_trips() {
    let list: Vec<_> = (1..=20).map(|r| fixtures::scenario1_priorities(r).unwrap()).collect();
    let text = write_priorities_csv(&list).unwrap();
    assert_eq!(read_priorities_csv(&text).unwrap(), list);
}

#[test]
fn scenario_errors_name_the_problem() {
    let base = pareto_consensus::scenario::SCENARIO1_TOML;
    let unknown = format!("{base}\nsurprise = 1\n");
    let err = parse_scenario(&unknown).unwrap_err();
    assert!(matches!(err, ScenarioError::Parse(_)));
    assert!(err.to_string().contains("surprise"), "{err}");

    let zero = base.replace("[[0.134, 0.866], [0.022, 0.978]]", "[[1.0, 0.0], [0.022, 0.978]]");
    assert!(parse_scenario(&zero).is_err());

    let gain = format!("c = 2.0\n{base}");
    let err = parse_scenario(&gain).unwrap_err().to_string();
    assert!(err.contains("c"), "{err}");

    assert!(matches!(
        builtin_scenario("scenario3"),
        Err(ScenarioError::UnknownBuiltin(_))
    ));
}

#[test]
fn inline_objectives_parse() {
    let text = r#"
name = "inline"
alpha = 1e-3
k_max = 500
initial_priorities = "uniform"
initial_states = [[1.0, 2.0], [3.0, 4.0], [0.0, 0.0]]

[topology]
kind = "path"
n = 3

[[objective]]
kind = "affine_quadratic"
coord = 1
scale = 2.0
center = 1.0

[[objective]]
kind = "exp_sum"
terms = [{ coord = 2, scale = 1.0, rate = 0.5 }]

[[objective]]
kind = "composite"
parts = [
  { weight = 1.0, objective = { kind = "sum_of_squares", coords = [1, 2] } },
  { weight = 0.5, objective = { kind = "linear", coords = [2], coeffs = [3.0] } },
]
"#;
    let s = parse_scenario(text).unwrap();
    assert_eq!(s.config.agent_count(), 3);
    assert_eq!(s.config.dim(), 2);
    assert!(s.c_defaulted && s.record_every_defaulted);
    assert!(run(&s.config).unwrap().xhat.iter().flatten().all(|v| v.is_finite()));
}
