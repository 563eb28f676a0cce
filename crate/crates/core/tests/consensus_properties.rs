use nalgebra::{DMatrix, DVector, SymmetricEigen};
use paca_core::{
    metropolis_weights, random_connected_graph, rng, run_paca, Graph, NoiseKind, NoiseSchedule,
    Trace, WeightMatrix,
};
use proptest::prelude::*;

/// Edge set of `random_connected_graph(20, 0.2, stream(7, 0))`, frozen.
const GOLDEN_EDGES: [(usize, usize); 58] = [
    (0, 8), (0, 12), (0, 13), (0, 18), (1, 2), (1, 6), (1, 9), (1, 13), (1, 16), (1, 17),
    (2, 5), (2, 8), (2, 12), (2, 15), (2, 18), (3, 4), (3, 13), (3, 14), (3, 18), (4, 6),
    (4, 9), (4, 17), (4, 18), (5, 8), (5, 9), (5, 10), (5, 12), (5, 14), (5, 15), (5, 16),
    (5, 17), (5, 19), (6, 10), (6, 13), (6, 16), (7, 8), (7, 15), (7, 16), (7, 17), (7, 18),
    (8, 9), (8, 12), (8, 14), (8, 19), (9, 17), (9, 18), (10, 12), (10, 13), (10, 19), (11, 12),
    (11, 14), (11, 18), (12, 13), (13, 18), (15, 18), (16, 19), (17, 19), (18, 19),
];

fn dense(w: &WeightMatrix) -> DMatrix<f64> {
    let n = w.size();
    DMatrix::from_fn(n, n, |i, j| w.get(i, j))
}

/// Second-largest eigenvalue modulus of a symmetric weight matrix.
fn slem(w: &WeightMatrix) -> f64 {
    let mut moduli: Vec<f64> = SymmetricEigen::new(dense(w))
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    moduli[1]
}

fn deviation_norm(x: &[f64], xbar: f64) -> f64 {
    x.iter().map(|v| (v - xbar).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn golden_random_graph() {
    let g = random_connected_graph(20, 0.2, &mut rng::stream(7, 0)).unwrap();
    assert_eq!(g.edges().collect::<Vec<_>>(), GOLDEN_EDGES.to_vec());
}

#[test]
fn independent_schedule_std_at_step_two() {
    let s = NoiseSchedule::independent(NoiseKind::Gaussian, 1.0, 0.25, 4).unwrap();
    let n = 100_000;
    let draws = &s.generate(n, &mut rng::stream(31, 0))[2];
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    // CLT standard error of a Gaussian sample standard deviation
    let stderr = 0.25 / (2.0 * (n - 1) as f64).sqrt();
    assert!((sd - 0.25).abs() < 3.0 * stderr, "sd {sd}");
}

#[test]
fn noiseless_runs_contract_by_at_most_the_slem() {
    for seed in 0..10 {
        let g = random_connected_graph(15, 0.3, &mut rng::stream(seed, 0)).unwrap();
        let w = metropolis_weights(&g);
        let lambda = slem(&w);
        let s = NoiseSchedule::independent(NoiseKind::Gaussian, 0.0, 0.5, 0).unwrap();
        let x0: Vec<f64> = (0..15).map(|i| (i * i) as f64 - 40.0).collect();
        let t = run_paca(&g, &w, &x0, &s, 60, &mut rng::stream(seed, 2)).unwrap();
        let xbar = t.average();
        for k in 0..60 {
            let (a, b) = (deviation_norm(&t.states[k], xbar), deviation_norm(&t.states[k + 1], xbar));
            if a > 1e-9 {
                assert!(b / a <= lambda + 1e-6, "seed {seed} k {k}: {} > {lambda}", b / a);
            }
        }
        let bound = lambda.powi(60) * deviation_norm(&t.states[0], xbar);
        assert!(t.max_deviation(60) <= bound + 1e-9);
    }
}

#[test]
fn zero_noise_reaches_the_average() {
    let g = random_connected_graph(20, 0.2, &mut rng::stream(7, 0)).unwrap();
    let w = metropolis_weights(&g);
    let s = NoiseSchedule::independent(NoiseKind::Gaussian, 0.0, 0.5, 0).unwrap();
    let x0: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let t = run_paca(&g, &w, &x0, &s, 500, &mut rng::stream(7, 2)).unwrap();
    assert!(t.max_deviation(500) < 1e-9);
}

#[test]
fn states_match_dense_matrix_oracle() {
    let g = random_connected_graph(12, 0.3, &mut rng::stream(4, 0)).unwrap();
    let w = metropolis_weights(&g);
    let s = NoiseSchedule::telescoping(NoiseKind::Laplace, 2.0, 0.6, 8).unwrap();
    let x0: Vec<f64> = (0..12).map(|i| (i as f64).sin() * 10.0).collect();
    let t = run_paca(&g, &w, &x0, &s, 30, &mut rng::stream(4, 2)).unwrap();
    let wm = dense(&w);
    let mut x = DVector::from_vec(x0);
    for k in 0..=30 {
        for i in 0..12 {
            assert!((x[i] - t.states[k][i]).abs() < 1e-9);
        }
        x = &wm * (x + DVector::from_vec(t.noises[k].clone()));
    }
}

#[test]
fn telescoping_consensus_on_twenty_nodes() {
    let g = random_connected_graph(20, 0.2, &mut rng::stream(11, 0)).unwrap();
    let w = metropolis_weights(&g);
    let k = 20;
    let s = NoiseSchedule::telescoping(NoiseKind::Gaussian, 1.0, 0.5, k).unwrap();
    let x0: Vec<f64> = (0..20).map(|i| 3.0 * i as f64 - 20.0).collect();
    let t = run_paca(&g, &w, &x0, &s, k + 200, &mut rng::stream(11, 2)).unwrap();
    assert!(t.max_deviation(k + 200) < 1e-6, "{}", t.max_deviation(k + 200));
    let total0: f64 = x0.iter().sum();
    for step in k + 1..=k + 200 {
        let total: f64 = t.states[step].iter().sum();
        assert!((total - total0).abs() < 1e-9);
    }
}

fn graph_strategy() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 3usize..16, 0.0f64..0.6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sums_are_conserved((seed, n, p) in graph_strategy(), family in prop_oneof![
        Just(NoiseKind::Gaussian), Just(NoiseKind::Laplace), Just(NoiseKind::Uniform)
    ], horizon in 1usize..12) {
        let g = random_connected_graph(n, p, &mut rng::stream(seed, 0)).unwrap();
        let w = metropolis_weights(&g);
        w.validate(&g).unwrap();
        let s = NoiseSchedule::telescoping(family, 1.5, 0.7, horizon).unwrap();
        let x0: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
        let t = run_paca(&g, &w, &x0, &s, horizon + 5, &mut rng::stream(seed, 2)).unwrap();
        for r in t.sum_conservation_residuals() {
            prop_assert!(r.abs() < 1e-9);
        }
        for k in 0..=t.iterations() {
            for i in 0..n {
                prop_assert_eq!(t.outputs[k][i], t.states[k][i] + t.noises[k][i]);
            }
        }
        for i in 0..n {
            let total: f64 = (0..=horizon).map(|k| t.noise(i, k)).sum();
            prop_assert!(total.abs() < 1e-12);
        }
        for k in horizon + 1..=t.iterations() {
            prop_assert!(t.noises[k].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn metropolis_weights_are_doubly_stochastic((seed, n, p) in graph_strategy()) {
        let g = random_connected_graph(n, p, &mut rng::stream(seed, 0)).unwrap();
        let w = metropolis_weights(&g);
        prop_assert!(w.validate(&g).is_ok());
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(w.get(i, j), w.get(j, i));
            }
        }
    }
}

fn sample_trace(seed: u64) -> Trace {
    let g = random_connected_graph(8, 0.3, &mut rng::stream(seed, 0)).unwrap();
    let w = metropolis_weights(&g);
    let s = NoiseSchedule::telescoping(NoiseKind::Gaussian, 1.0, 0.5, 6).unwrap();
    let x0: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 + 1.0 / 3.0).collect();
    let mut t = run_paca(&g, &w, &x0, &s, 12, &mut rng::stream(seed, 2)).unwrap();
    t.metadata.seed = Some(seed);
    t
}

#[test]
fn trace_round_trip_is_bit_exact() {
    let t = sample_trace(5);
    let dir = std::env::temp_dir().join(format!("paca-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.json");
    t.save(&path).unwrap();
    let back = Trace::load(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    for (a, b) in t.outputs.iter().flatten().zip(back.outputs.iter().flatten()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    for (a, b) in t.states.iter().flatten().zip(back.states.iter().flatten()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(t, back);
    assert_eq!(t.to_json().unwrap(), back.to_json().unwrap());
}

#[test]
fn replay_is_deterministic() {
    assert_eq!(sample_trace(9).to_json().unwrap(), sample_trace(9).to_json().unwrap());
    assert_ne!(sample_trace(9).to_json().unwrap(), sample_trace(10).to_json().unwrap());
}

#[test]
fn triangle_single_step() {
    let g = Graph::triangle();
    let w = metropolis_weights(&g);
    let s = NoiseSchedule::independent(NoiseKind::Gaussian, 0.0, 0.5, 0).unwrap();
    let t = run_paca(&g, &w, &[1.0, 2.0, 3.0], &s, 1, &mut rng::stream(0, 0)).unwrap();
    for v in &t.states[1] {
        assert!((v - 2.0).abs() < 1e-15);
    }
}

#[test]
fn short_runs_are_rejected() {
    let g = Graph::triangle();
    let w = metropolis_weights(&g);
    let s = NoiseSchedule::telescoping(NoiseKind::Gaussian, 1.0, 0.5, 5).unwrap();
    assert!(run_paca(&g, &w, &[0.0; 3], &s, 4, &mut rng::stream(0, 0)).is_err());
    assert!(run_paca(&g, &w, &[0.0; 2], &s, 5, &mut rng::stream(0, 0)).is_err());
}
