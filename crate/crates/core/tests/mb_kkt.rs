mod support;

use ggm_core::mb_baseline::{lasso_column, mb_lambda, standardized};
use ggm_core::{mb_estimate, CombineRule, LassoConfig, Sample};
use proptest::prelude::*;
use support::*;

fn kkt_violation(sample: &Sample, j: usize, lambda: f64, beta: &[f64]) -> f64 {
    let x = sample.matrix();
    let n = sample.n() as f64;
    let mut r = x.column(j).into_owned();
    for (i, b) in beta.iter().enumerate() {
        if *b != 0.0 {
            r -= x.column(i) * *b;
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..sample.p() {
        if i == j {
            continue;
        }
        let g = 2.0 * x.column(i).dot(&r) / n;
        let v = if beta[i] == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g - lambda * beta[i].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lasso_satisfies_kkt(seed in 0u64..10_000, j in 0usize..6, scale in 0.05f64..1.5) {
        let s = correlated_sample(20, 6, seed);
        let lambda = scale * mb_lambda(&s, j, 0.05);
        let cfg = LassoConfig { tol: 1e-12, ..LassoConfig::default() };
        let beta = lasso_column(&s, j, lambda, &cfg).unwrap();
        prop_assert!(kkt_violation(&s, j, lambda, &beta) <= 1e-6);
        prop_assert_eq!(beta[j], 0.0);
    }

    #[test]
    fn and_rule_is_contained_in_or_rule(seed in 0u64..10_000, alpha in 0.01f64..0.9) {
        let s = correlated_sample(15, 7, seed);
        let or = mb_estimate(&s, &LassoConfig { alpha, ..LassoConfig::default() }).unwrap();
        let and = mb_estimate(&s, &LassoConfig { alpha, rule: CombineRule::And, ..LassoConfig::default() }).unwrap();
        prop_assert!(and.graph.is_subgraph_of(&or.graph));
    }

    #[test]
    fn estimate_is_scale_invariant(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let s = correlated_sample(15, 5, seed);
        let t = Sample::new(s.matrix() * c).unwrap();
        let a = mb_estimate(&s, &LassoConfig::default()).unwrap();
        let b = mb_estimate(&t, &LassoConfig::default()).unwrap();
        prop_assert_eq!(a.graph, b.graph);
    }
}

#[test]
fn standardized_columns_have_unit_scale() {
    let s = correlated_sample(12, 4, 3);
    let (t, scale) = standardized(&s).unwrap();
    for i in 0..4 {
        assert!((t.matrix().column(i).norm_squared() / 12.0 - 1.0).abs() < 1e-12);
        assert!((scale[i] - (s.matrix().column(i).norm_squared() / 12.0).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn independent_columns_give_a_sparse_graph() {
    let s = noise_sample(200, 8, 5);
    let est = mb_estimate(&s, &LassoConfig::default()).unwrap();
    assert!(est.graph.edge_count() <= 1, "{:?}", est.graph);
}

#[test]
fn duplicated_pair_is_connected() {
    let mut x = noise_sample(30, 6, 6).matrix().clone();
    let c = x.column(2).into_owned();
    x.set_column(4, &(c * -1.5));
    let s = Sample::new(x).unwrap();
    let est = mb_estimate(&s, &LassoConfig::default()).unwrap();
    assert!(est.graph.contains_edge(2, 4));
}
