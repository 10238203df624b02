use ggm_core::genmodel::{Purpose, DEFAULT_DOMINANCE_MARGIN};
use ggm_core::{build_ground_truth, sample_er_graph, sample_gaussian, GroundTruth, Graph, RngSeed};
use nalgebra::DMatrix;

fn truth(seed: u64, p: usize, q: f64) -> GroundTruth {
    let s = RngSeed::new(seed);
    let g = sample_er_graph(p, q, &mut s.stream(Purpose::Graph, 0, 0)).unwrap();
    build_ground_truth(&g, DEFAULT_DOMINANCE_MARGIN, &mut s.stream(Purpose::Precision, 0, 0)).unwrap()
}

#[test]
fn conditional_variances_sum_to_residual_trace() {
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let p = 3 + (seed % 10) as usize;
        let t = truth(seed, p, 0.1 + 0.05 * (seed % 6) as f64);
        let i_minus = DMatrix::<f64>::identity(p, p) - t.theta.matrix();
        let tr = (i_minus.transpose() * &t.covariance * &i_minus).trace();
        let sum: f64 = t.sigma2.iter().sum();
        worst = worst.max((tr - sum).abs());
    }
    assert!(worst <= 1e-8, "{worst:e}");
}

#[test]
fn precision_is_positive_definite_and_inverts_covariance() {
    for seed in 0..40u64 {
        let t = truth(seed, 10, 0.3);
        let eig = t.precision.clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
        let r = &t.precision * &t.covariance - DMatrix::<f64>::identity(10, 10);
        assert!(r.amax() <= 1e-8, "seed {seed}: {}", r.amax());
        assert!((0..10).all(|j| t.precision[(j, j)] == 1.0));
    }
}

#[test]
fn support_matches_graph_exactly() {
    for seed in 0..100u64 {
        let t = truth(seed, 8, 0.35);
        for i in 0..8 {
            assert_eq!(t.theta.get(i, i), 0.0);
            for j in 0..8 {
                if i == j {
                    continue;
                }
                let nz = t.theta.get(i, j) != 0.0;
                assert_eq!(nz, t.graph.contains_edge(i.min(j), i.max(j)), "seed {seed} ({i},{j})");
                assert_eq!(nz, t.theta.get(j, i) != 0.0);
            }
        }
        assert_eq!(t.theta.support().symmetrize(), t.graph);
    }
}

#[test]
fn er_edge_count_mean() {
    let seed = RngSeed::new(77);
    let draws = 10_000;
    let total: usize = (0..draws)
        .map(|r| sample_er_graph(10, 0.3, &mut seed.stream(Purpose::Graph, 1, r)).unwrap().edge_count())
        .sum();
    let mean = total as f64 / draws as f64;
    let sd = (45.0 * 0.3 * 0.7 / draws as f64).sqrt();
    assert!((mean - 13.5).abs() <= 3.0 * sd, "{mean}");
}

#[test]
fn identity_covariance_sample_moments() {
    let t = GroundTruth::independent(4);
    let n = 100_000;
    let s = sample_gaussian(&t, n, &mut RngSeed::new(5).stream(Purpose::Sample, 0, 0)).unwrap();
    let cov = s.matrix().transpose() * s.matrix() / n as f64;
    let tol = 3.0 / (n as f64).sqrt();
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { 0.0 };
            // the diagonal has variance 2/n
            let slack = if i == j { tol * 2f64.sqrt() } else { tol };
            assert!((cov[(i, j)] - want).abs() <= slack, "({i},{j}) {}", cov[(i, j)]);
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let a = truth(3, 9, 0.3);
    let b = truth(3, 9, 0.3);
    assert_eq!(a.precision, b.precision);
    assert_eq!(a.graph, b.graph);
    let empty = build_ground_truth(&Graph::empty(3), 0.5, &mut RngSeed::new(1).stream(Purpose::Precision, 0, 0)).unwrap();
    assert_eq!(empty.sigma2, vec![1.0; 3]);
}
