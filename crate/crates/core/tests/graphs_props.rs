use std::collections::BTreeSet;

use ggm_core::graphs::{degree, enumerate_collection, enumerate_neighborhoods, min_symmetric_selection};
use ggm_core::{CollectionSpec, DirectedShape, Family, Graph, Shape};
use proptest::prelude::*;

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Degree-bounded graphs on `p` vertices by scanning every edge subset.
fn brute_degree_count(p: usize, d: usize) -> usize {
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    (0u32..(1 << pairs.len()))
        .filter(|mask| {
            let mut deg = vec![0; p];
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
            deg.iter().all(|&x| x <= d)
        })
        .count()
}

#[test]
fn degree_examples() {
    assert_eq!(degree(&Shape::Undirected(Graph::empty(5))), 0);
    assert_eq!(degree(&Shape::Undirected(Graph::complete(5))), 4);
    let star = Graph::from_edges(6, (1..6).map(|j| (0, j))).unwrap();
    assert_eq!(degree(&Shape::Undirected(star)), 5);
}

#[test]
fn contains_examples() {
    let deg4 = Graph::from_edges(6, (1..5).map(|j| (0, j))).unwrap();
    assert!(CollectionSpec::new(Family::Degree, 4, 6).unwrap().contains(&Shape::Undirected(deg4)));
    let four = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    assert!(!CollectionSpec::new(Family::EdgeCount, 3, 6).unwrap().contains(&Shape::Undirected(four)));
    let wide = DirectedShape::from_arcs(5, [(1, 0), (2, 0), (3, 0)]).unwrap();
    assert!(!CollectionSpec::new(Family::DegreeDirected, 2, 5).unwrap().contains(&Shape::Directed(wide)));
}

#[test]
fn neighborhood_enumeration_examples() {
    let v: Vec<_> = enumerate_neighborhoods(4, 0, 1).collect();
    assert_eq!(v, vec![vec![], vec![1], vec![2], vec![3]]);
    assert_eq!(enumerate_neighborhoods(10, 2, 4).count(), 256);
    let v: Vec<_> = enumerate_neighborhoods(2, 1, 1).collect();
    assert_eq!(v, vec![vec![], vec![0]]);
}

#[test]
fn collection_sizes_match_closed_forms() {
    for p in 2..=5usize {
        let pairs = p * (p - 1) / 2;
        for d in 1..=3usize.min(p - 1) {
            let count = |f| enumerate_collection(&CollectionSpec::new(f, d, p).unwrap()).unwrap().count();
            let edges: usize = (0..=d.min(pairs)).map(|k| binom(pairs, k)).sum();
            let arcs: usize = (0..=d.min(2 * pairs)).map(|k| binom(2 * pairs, k)).sum();
            let hoods: usize = (0..=d).map(|k| binom(p - 1, k)).sum();
            assert_eq!(count(Family::EdgeCount), edges, "edges p={p} d={d}");
            assert_eq!(count(Family::EdgeCountDirected), arcs, "arcs p={p} d={d}");
            assert_eq!(count(Family::DegreeDirected), hoods.pow(p as u32), "deg+ p={p} d={d}");
            assert_eq!(count(Family::Degree), brute_degree_count(p, d), "deg p={p} d={d}");
        }
    }
}

#[test]
fn small_collection_examples() {
    let count = |f, d, p| enumerate_collection(&CollectionSpec::new(f, d, p).unwrap()).unwrap().count();
    assert_eq!(count(Family::EdgeCount, 1, 3), 4);
    assert_eq!(count(Family::EdgeCountDirected, 1, 3), 7);
    assert_eq!(count(Family::Degree, 1, 4), 10);
}

#[test]
fn enumeration_has_no_duplicates() {
    for f in [Family::EdgeCount, Family::Degree, Family::EdgeCountDirected, Family::DegreeDirected] {
        let spec = CollectionSpec::new(f, 2, 4).unwrap();
        let all: Vec<String> = enumerate_collection(&spec)
            .unwrap()
            .map(|s| serde_json::to_string(&s).unwrap())
            .collect();
        let set: BTreeSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len(), "{f}");
    }
}

#[test]
fn family_nesting() {
    for p in 2..=5usize {
        for d in 1..=2usize.min(p - 1) {
            let spec = |f| CollectionSpec::new(f, d, p).unwrap();
            for s in enumerate_collection(&spec(Family::EdgeCountDirected)).unwrap() {
                let g = s.symmetrize();
                assert!(spec(Family::EdgeCount).contains(&Shape::Undirected(g)));
            }
            for s in enumerate_collection(&spec(Family::EdgeCount)).unwrap() {
                assert!(spec(Family::Degree).contains(&s));
            }
            for s in enumerate_collection(&spec(Family::Degree)).unwrap() {
                assert!(spec(Family::DegreeDirected).contains(&Shape::Directed(s.to_directed())));
            }
        }
    }
}

#[test]
fn symmetric_selection_brute_force() {
    // costs from a fixed pseudo-random table; compare with a full scan
    let p = 5;
    let d = 2;
    let tables: Vec<Vec<(Vec<usize>, f64)>> = (0..p)
        .map(|j| {
            enumerate_neighborhoods(p, j, d)
                .enumerate()
                .map(|(k, h)| {
                    let c = 10.0 - h.len() as f64 * 1.7 + ((k * 7 + j * 13) % 11) as f64 * 0.37;
                    (h, c)
                })
                .collect()
        })
        .collect();
    let (g, v) = min_symmetric_selection(&tables, d).unwrap();
    let spec = CollectionSpec::new(Family::Degree, d, p).unwrap();
    let mut best = f64::INFINITY;
    for s in enumerate_collection(&spec).unwrap() {
        let dir = s.to_directed();
        let c: f64 = (0..p)
            .map(|j| tables[j].iter().find(|(h, _)| h.as_slice() == dir.neighborhood(j)).unwrap().1)
            .sum();
        best = best.min(c);
    }
    assert!((v - best).abs() < 1e-12);
    assert!(g.degree() <= d);
}

proptest! {
    #[test]
    fn symmetrization_never_lowers_vertex_degrees(arcs in proptest::collection::vec((0usize..6, 0usize..6), 0..20)) {
        let arcs: Vec<_> = arcs.into_iter().filter(|(i, j)| i != j).collect();
        let s = DirectedShape::from_arcs(6, arcs).unwrap();
        let g = s.symmetrize();
        let deg = g.vertex_degrees();
        for j in 0..6 {
            prop_assert!(deg[j] >= s.neighborhood(j).len());
        }
        prop_assert!(s.is_subshape_of(&g.to_directed()));
    }

    #[test]
    fn graph_json_round_trip(edges in proptest::collection::vec((0usize..7, 0usize..7), 0..15)) {
        let edges: Vec<_> = edges.into_iter().filter(|(i, j)| i != j).collect();
        let g = Graph::from_edges(7, edges).unwrap();
        let back: Graph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }
}
