use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pareto_consensus::bounds::{performance_bound, BoundInputs, BoundReport};
use pareto_consensus::engine::{init_run, run, RunConfig};
use pareto_consensus::graph::Graph;
use pareto_consensus::mixing::{audit_mixing, build_mixing, limit_decomposition};
use pareto_consensus::objectives::Objective;
use pareto_consensus::priorities::{
    average_priorities, default_gain, priority_step, priority_step_local, ConsensusOperator,
    PriorityMatrix,
};

fn random_priorities(n: usize, rng: &mut ChaCha8Rng) -> PriorityMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    PriorityMatrix::from_rows(&rows).unwrap()
}

fn random_weights(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let raw = DVector::from_fn(n, |_, _| rng.random_range(0.05..1.0));
    let s = raw.sum();
    raw / s
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = (Graph, u64)> {
    (2..=max_n, 0.05f64..0.9, any::<u64>())
        .prop_map(|(n, p, seed)| (Graph::random_connected(n, p, seed).unwrap(), seed))
}

fn quadratic_agents(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Objective> {
    (0..n)
        .map(|_| {
            let parts = (0..dim)
                .map(|p| {
                    let q = Objective::affine_quadratic(
                        p,
                        rng.random_range(0.5..5.0),
                        rng.random_range(-10.0..10.0),
                        rng.random_range(0.0..3.0),
                    )
                    .unwrap();
                    (1.0, q)
                })
                .collect();
            Objective::composite(parts).unwrap()
        })
        .collect()
}

fn small_config(graph: Graph, seed: u64, k_max: usize) -> RunConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = graph.agent_count();
    let dim = 2;
    let objectives = quadratic_agents(n, dim, &mut rng);
    let w0 = random_priorities(n, &mut rng);
    let x0 = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-20.0..20.0)).collect())
        .collect();
    let mut cfg = RunConfig::new(graph, objectives, w0, x0, 1e-2, k_max);
    cfg.record_every = 7;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_symmetric_psd_with_zero_row_sums((g, _) in graph_strategy(12)) {
        let gm = g.matrices();
        let l = &gm.laplacian;
        prop_assert_eq!(l, &l.transpose());
        for i in 0..g.agent_count() {
            prop_assert_eq!(l.row(i).sum(), 0.0);
            prop_assert_eq!(l[(i, i)], g.degree(i) as f64);
        }
        let eig = SymmetricEigen::new(l.clone()).eigenvalues;
        prop_assert!(eig.min() >= -1e-12, "smallest eigenvalue {}", eig.min());
        let positive = eig.iter().filter(|&&v| v > 1e-9).count();
        prop_assert_eq!(positive, g.agent_count() - 1);
    }

    #[test]
    fn priority_steps_keep_rows_and_raise_the_floor((g, seed) in graph_strategy(10)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gm = g.matrices();
        let c = default_gain(&gm);
        let op = ConsensusOperator::new(&gm, c).unwrap();
        let mut w = random_priorities(g.agent_count(), &mut rng);
        for _ in 0..300 {
            let next = priority_step(&w, &op).unwrap();
            let local = priority_step_local(&g, &w, c).unwrap();
            let gap = (next.as_matrix() - local.as_matrix()).amax();
            prop_assert!(gap <= 1e-15, "network and local forms differ by {gap:e}");
            prop_assert!(next.row_sum_deviation() <= 1e-12);
            prop_assert!(next.min_entry() >= w.min_entry() - 1e-15);
            w = next;
        }
    }

    #[test]
    fn priorities_reach_the_column_average((g, seed) in graph_strategy(8)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gm = g.matrices();
        let op = ConsensusOperator::new(&gm, default_gain(&gm)).unwrap();
        let w0 = random_priorities(g.agent_count(), &mut rng);
        let wbar = average_priorities(&w0);
        let mut w = w0;
        for _ in 0..10_000 {
            w = priority_step(&w, &op).unwrap();
        }
        prop_assert!(w.disagreement(&wbar) <= 1e-9, "disagreement {:e}", w.disagreement(&wbar));
    }

    #[test]
    fn mixing_matrices_pass_the_audit((g, seed) in graph_strategy(10)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_priorities(g.agent_count(), &mut rng);
        let a = build_mixing(&g, &w, 0).unwrap();
        let audit = audit_mixing(&g, &a.a);
        prop_assert!(audit.passes(w.min_entry(), 1e-12, 0.0), "{audit:?}");
        for i in 0..g.agent_count() {
            for j in 0..g.agent_count() {
                if i != j && g.has_edge(i, j) {
                    prop_assert_eq!(a.a[(i, j)], w.as_matrix()[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn limit_decomposition_identities((g, seed) in graph_strategy(8)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wbar = random_weights(g.agent_count(), &mut rng);
        let dec = limit_decomposition(&g, &wbar, wbar.min()).unwrap();
        let res = dec.residuals(20);
        prop_assert!(res.wbar_c <= 1e-12 && res.c_wbar <= 1e-12, "{res:?}");
        prop_assert!(res.power_split <= 1e-10, "{res:?}");
        prop_assert!(res.split <= 1e-15, "{res:?}");
        prop_assert!(dec.c_spectral_radius().unwrap() < 1.0);
    }

    #[test]
    fn engine_priorities_follow_operator_powers((g, seed) in graph_strategy(7)) {
        let cfg = small_config(g, seed, 50);
        let mut state = init_run(&cfg).unwrap();
        let op = ConsensusOperator::new(&cfg.graph.matrices(), cfg.c).unwrap();
        let power = op.matrix().clone().pow(50);
        for _ in 0..50 {
            state.step(&cfg).unwrap();
        }
        let expected = &power * cfg.w0.as_matrix();
        let gap = (state.priorities().as_matrix() - expected).amax();
        prop_assert!(gap <= 1e-12, "gap {gap:e}");
    }

    #[test]
    fn running_average_is_the_mean_of_visited_iterates((g, seed) in graph_strategy(6)) {
        let cfg = small_config(g, seed, 40);
        let mut state = init_run(&cfg).unwrap();
        let n = cfg.agent_count();
        let mut sum = vec![vec![0.0; cfg.dim()]; n];
        for k in 1..=40 {
            state.step(&cfg).unwrap();
            for (s, x) in sum.iter_mut().zip(state.iterates()) {
                for (a, b) in s.iter_mut().zip(x) {
                    *a += b;
                }
            }
            let avg = state.running_average().unwrap();
            for (s, a) in sum.iter().zip(&avg) {
                for (u, v) in s.iter().zip(a) {
                    prop_assert!((u / k as f64 - v).abs() <= 1e-12 * (1.0 + v.abs()));
                }
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_any_bit((g, seed) in graph_strategy(8)) {
        let mut cfg = small_config(g, seed, 300);
        let one = run(&cfg).unwrap();
        cfg.threads = 3;
        let three = run(&cfg).unwrap();
        prop_assert_eq!(&one.xhat, &three.xhat);
        prop_assert_eq!(&one.x_final, &three.x_final);
        prop_assert_eq!(&one.samples, &three.samples);
    }

    #[test]
    fn relabeling_agents_permutes_the_outputs((g, seed) in graph_strategy(6)) {
        let cfg = small_config(g, seed, 200);
        let n = cfg.agent_count();
        let perm: Vec<usize> = (0..n).rev().collect();
        let edges: Vec<(usize, usize)> =
            cfg.graph.edges().map(|(i, j)| (perm[i] + 1, perm[j] + 1)).collect();
        let mut inverse = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let w = cfg.w0.as_matrix();
        let wp = DMatrix::from_fn(n, n, |i, j| w[(inverse[i], inverse[j])]);
        let permuted = RunConfig {
            graph: Graph::new(n, &edges).unwrap(),
            objectives: inverse.iter().map(|&i| cfg.objectives[i].clone()).collect(),
            w0: PriorityMatrix::from_matrix(&wp).unwrap(),
            x0: inverse.iter().map(|&i| cfg.x0[i].clone()).collect(),
            ..cfg.clone()
        };
        let a = run(&cfg).unwrap();
        let b = run(&permuted).unwrap();
        for i in 0..n {
            for (u, v) in a.xhat[i].iter().zip(&b.xhat[perm[i]]) {
                prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn performance_bound_is_non_increasing(
        n in 2usize..8,
        eta_frac in 0.1f64..0.99,
        alpha in 1e-6f64..1e-2,
        l in 0.1f64..100.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_weights(n, &mut rng);
        let x0: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-50.0..50.0)]).collect();
        let r = BoundReport::from_parts(BoundInputs {
            eta: phi.min() * eta_frac,
            alpha,
            gradient_bound: l,
            phi: &phi,
            x0: &x0,
            xstar: &[rng.random_range(-50.0..50.0)],
        })
        .unwrap();
        let mut previous = f64::INFINITY;
        for k in [1usize, 2, 3, 10, 100, 1_000, 10_000, 100_000, 1_000_000] {
            let b = performance_bound(&r, k).unwrap();
            prop_assert!(b.is_finite() && b <= previous, "k = {k}: {b} after {previous}");
            previous = b;
        }
    }
}
