//! Undirected graphs, directed shapes, the four candidate collections and
//! their enumeration.
//!
//! Vertices are 0-based in memory and 1-based in every serialized form.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::ln_binomial;

/// Largest collection `enumerate_collection` agrees to walk.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// Undirected graph on `p` labeled vertices, no self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn empty(p: usize) -> Self {
        Graph {
            p,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(p: usize) -> Self {
        Graph {
            p,
            edges: (0..p).tuple_combinations().collect(),
        }
    }

    /// Builds a graph from 0-based vertex pairs, in either orientation.
    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::empty(p);
        for (i, j) in edges {
            g.insert(i, j)?;
        }
        Ok(g)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        if i == j {
            return Err(Error::domain(format!("self-loop on vertex {}", i + 1)));
        }
        if i >= self.p || j >= self.p {
            return Err(Error::domain(format!(
                "edge ({}, {}) out of range for p={}",
                i + 1,
                j + 1,
                self.p
            )));
        }
        Ok(self.edges.insert((i.min(j), i.max(j))))
    }

    pub fn remove(&mut self, i: usize, j: usize) -> bool {
        self.edges.remove(&(i.min(j), i.max(j)))
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbors of vertex `j`.
    pub fn neighborhood(&self, j: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == j {
                    Some(b)
                } else if b == j {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn vertex_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.p];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// `max_j |g_j|`.
    pub fn degree(&self) -> usize {
        self.vertex_degrees().into_iter().max().unwrap_or(0)
    }

    /// The symmetric directed shape with both arcs for every edge.
    pub fn to_directed(&self) -> DirectedShape {
        let mut hoods = vec![Vec::new(); self.p];
        for &(a, b) in &self.edges {
            hoods[a].push(b);
            hoods[b].push(a);
        }
        for h in &mut hoods {
            h.sort_unstable();
        }
        DirectedShape {
            p: self.p,
            neighborhoods: hoods,
        }
    }

    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.p == other.p && self.edges.is_subset(&other.edges)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    p: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(v: GraphJson) -> Result<Self> {
        let mut g = Graph::empty(v.p);
        for [i, j] in v.edges {
            if i == 0 || j == 0 {
                return Err(Error::domain("graph JSON vertices are 1-based"));
            }
            g.insert(i - 1, j - 1)?;
        }
        Ok(g)
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            p: g.p,
            edges: g.edges.iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

/// Directed graph stored as one predictor set `m_j` per vertex; the arc
/// `(i, j)` means `i` is allowed in the regression of column `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ShapeJson", into = "ShapeJson")]
pub struct DirectedShape {
    p: usize,
    neighborhoods: Vec<Vec<usize>>,
}

impl DirectedShape {
    pub fn empty(p: usize) -> Self {
        DirectedShape {
            p,
            neighborhoods: vec![Vec::new(); p],
        }
    }

    /// Every arc `(i, j)` with `i != j`.
    pub fn full(p: usize) -> Self {
        DirectedShape {
            p,
            neighborhoods: (0..p)
                .map(|j| (0..p).filter(|&i| i != j).collect())
                .collect(),
        }
    }

    pub fn from_neighborhoods(neighborhoods: Vec<Vec<usize>>) -> Result<Self> {
        let p = neighborhoods.len();
        let mut out = DirectedShape::empty(p);
        for (j, hood) in neighborhoods.into_iter().enumerate() {
            out.set_neighborhood(j, hood)?;
        }
        Ok(out)
    }

    pub fn from_arcs(p: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = DirectedShape::empty(p);
        for (i, j) in arcs {
            out.insert(i, j)?;
        }
        Ok(out)
    }

    pub fn set_neighborhood(&mut self, j: usize, mut hood: Vec<usize>) -> Result<()> {
        hood.sort_unstable();
        hood.dedup();
        if hood.iter().any(|&i| i == j || i >= self.p) || j >= self.p {
            return Err(Error::domain(format!(
                "invalid neighborhood for vertex {} (p={})",
                j + 1,
                self.p
            )));
        }
        self.neighborhoods[j] = hood;
        Ok(())
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        if i == j || i >= self.p || j >= self.p {
            return Err(Error::domain(format!(
                "invalid arc ({}, {}) for p={}",
                i + 1,
                j + 1,
                self.p
            )));
        }
        let hood = &mut self.neighborhoods[j];
        match hood.binary_search(&i) {
            Ok(_) => Ok(false),
            Err(pos) => {
                hood.insert(pos, i);
                Ok(true)
            }
        }
    }

    pub fn contains_arc(&self, i: usize, j: usize) -> bool {
        self.neighborhoods
            .get(j)
            .is_some_and(|h| h.binary_search(&i).is_ok())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `m_j`, sorted.
    pub fn neighborhood(&self, j: usize) -> &[usize] {
        &self.neighborhoods[j]
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    /// Arcs `(i, j)` sorted lexicographically.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .neighborhoods
            .iter()
            .enumerate()
            .flat_map(|(j, h)| h.iter().map(move |&i| (i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn arc_count(&self) -> usize {
        self.neighborhoods.iter().map(Vec::len).sum()
    }

    pub fn degree(&self) -> usize {
        self.neighborhoods.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Undirected graph with an edge wherever at least one arc exists.
    pub fn symmetrize(&self) -> Graph {
        let mut g = Graph::empty(self.p);
        for (j, hood) in self.neighborhoods.iter().enumerate() {
            for &i in hood {
                g.edges.insert((i.min(j), i.max(j)));
            }
        }
        g
    }

    /// `true` when every `m_j` is contained in the corresponding `m'_j`.
    pub fn is_subshape_of(&self, other: &DirectedShape) -> bool {
        self.p == other.p
            && self
                .neighborhoods
                .iter()
                .zip(&other.neighborhoods)
                .all(|(a, b)| a.iter().all(|i| b.binary_search(i).is_ok()))
    }
}

#[derive(Serialize, Deserialize)]
struct ShapeJson {
    p: usize,
    arcs: Vec<[usize; 2]>,
}

impl TryFrom<ShapeJson> for DirectedShape {
    type Error = Error;

    fn try_from(v: ShapeJson) -> Result<Self> {
        let mut s = DirectedShape::empty(v.p);
        for [i, j] in v.arcs {
            if i == 0 || j == 0 {
                return Err(Error::domain("shape JSON vertices are 1-based"));
            }
            s.insert(i - 1, j - 1)?;
        }
        Ok(s)
    }
}

impl From<DirectedShape> for ShapeJson {
    fn from(s: DirectedShape) -> Self {
        ShapeJson {
            p: s.p,
            arcs: s.arcs().into_iter().map(|(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

/// Either kind of candidate shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shape {
    Undirected(Graph),
    Directed(DirectedShape),
}

impl Shape {
    pub fn p(&self) -> usize {
        match self {
            Shape::Undirected(g) => g.p(),
            Shape::Directed(s) => s.p(),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Shape::Undirected(g) => g.degree(),
            Shape::Directed(s) => s.degree(),
        }
    }

    pub fn is_directed(&self) -> bool {
        matches!(self, Shape::Directed(_))
    }

    /// View as a directed shape (an undirected graph embeds symmetrically).
    pub fn to_directed(&self) -> DirectedShape {
        match self {
            Shape::Undirected(g) => g.to_directed(),
            Shape::Directed(s) => s.clone(),
        }
    }

    pub fn symmetrize(&self) -> Graph {
        match self {
            Shape::Undirected(g) => g.clone(),
            Shape::Directed(s) => s.symmetrize(),
        }
    }
}

/// The four candidate families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Graphs with at most `D` edges.
    #[serde(rename = "edges")]
    EdgeCount,
    /// Graphs of degree at most `D`.
    #[serde(rename = "deg")]
    Degree,
    /// Directed graphs with at most `D` arcs.
    #[serde(rename = "edges-directed")]
    EdgeCountDirected,
    /// Directed graphs whose every `m_j` has at most `D` elements.
    #[serde(rename = "deg-directed")]
    DegreeDirected,
}

impl Family {
    pub fn is_directed(self) -> bool {
        matches!(self, Family::EdgeCountDirected | Family::DegreeDirected)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::EdgeCount => "edges",
            Family::Degree => "deg",
            Family::EdgeCountDirected => "edges-directed",
            Family::DegreeDirected => "deg-directed",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" => Ok(Family::EdgeCount),
            "deg" => Ok(Family::Degree),
            "edges-directed" => Ok(Family::EdgeCountDirected),
            "deg-directed" => Ok(Family::DegreeDirected),
            other => Err(Error::Usage(format!(
                "unknown family '{other}' (expected edges, deg, edges-directed or deg-directed)"
            ))),
        }
    }
}

/// A candidate collection: family, bound `D` and vertex count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionSpec {
    pub family: Family,
    pub d: usize,
    pub p: usize,
}

impl CollectionSpec {
    pub fn new(family: Family, d: usize, p: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("collection bound D must be >= 1"));
        }
        if p < 2 {
            return Err(Error::domain("need at least two vertices"));
        }
        Ok(CollectionSpec { family, d, p })
    }

    /// Largest neighborhood size any member can have.
    pub fn max_neighborhood(&self) -> usize {
        self.d.min(self.p - 1)
    }

    /// Membership test. Directedness of `shape` must match the family.
    pub fn contains(&self, shape: &Shape) -> bool {
        if shape.p() != self.p {
            return false;
        }
        match (self.family, shape) {
            (Family::EdgeCount, Shape::Undirected(g)) => g.edge_count() <= self.d,
            (Family::Degree, Shape::Undirected(g)) => g.degree() <= self.d,
            (Family::EdgeCountDirected, Shape::Directed(s)) => s.arc_count() <= self.d,
            (Family::DegreeDirected, Shape::Directed(s)) => s.degree() <= self.d,
            _ => false,
        }
    }

    /// Cardinality: exact for three families, an upper bound for `Degree`.
    pub fn size_estimate(&self) -> f64 {
        let p = self.p;
        let sum_binom = |n: usize, k: usize| -> f64 {
            (0..=k.min(n)).map(|i| ln_binomial(n, i).exp()).sum()
        };
        let pairs = p * (p - 1) / 2;
        match self.family {
            Family::EdgeCount => sum_binom(pairs, self.d),
            Family::EdgeCountDirected => sum_binom(2 * pairs, self.d),
            Family::DegreeDirected => sum_binom(p - 1, self.d).powi(p as i32),
            Family::Degree => sum_binom(pairs, p * self.d / 2),
        }
    }
}

/// `degree` of either shape kind.
pub fn degree(shape: &Shape) -> usize {
    shape.degree()
}

/// All subsets of `{0..p} \ {j}` with at most `d` elements, by size then
/// lexicographically.
pub fn enumerate_neighborhoods(p: usize, j: usize, d: usize) -> impl Iterator<Item = Vec<usize>> {
    let others: Vec<usize> = (0..p).filter(|&i| i != j).collect();
    let d = d.min(others.len());
    (0..=d).flat_map(move |k| others.clone().into_iter().combinations(k))
}

/// Number of neighborhoods `enumerate_neighborhoods(p, j, d)` yields.
pub fn neighborhood_count(p: usize, d: usize) -> usize {
    let n = p.saturating_sub(1);
    (0..=d.min(n))
        .map(|k| ln_binomial(n, k).exp().round() as usize)
        .sum()
}

/// Lexicographic walk over `k`-subsets of `0..n` accepted element by element.
///
/// `accept(chosen, c)` must be monotone: rejecting a prefix rejects every
/// extension of it.
struct SubsetWalker<F> {
    n: usize,
    k: usize,
    chosen: Vec<usize>,
    next_start: usize,
    done: bool,
    accept: F,
}

impl<F: FnMut(&[usize], usize) -> bool> SubsetWalker<F> {
    fn new(n: usize, k: usize, accept: F) -> Self {
        SubsetWalker {
            n,
            k,
            chosen: Vec::with_capacity(k),
            next_start: 0,
            done: k > n,
            accept,
        }
    }
}

impl<F: FnMut(&[usize], usize) -> bool> Iterator for SubsetWalker<F> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.k == 0 {
            self.done = true;
            return Some(Vec::new());
        }
        loop {
            if self.chosen.len() < self.k {
                let need = self.k - self.chosen.len();
                let mut c = self.next_start;
                while c + need <= self.n && !(self.accept)(&self.chosen, c) {
                    c += 1;
                }
                if c + need <= self.n {
                    self.chosen.push(c);
                    self.next_start = c + 1;
                    if self.chosen.len() == self.k {
                        return Some(self.chosen.clone());
                    }
                    continue;
                }
            }
            match self.chosen.pop() {
                Some(last) => self.next_start = last + 1,
                None => {
                    self.done = true;
                    return None;
                }
            }
        }
    }
}

/// Iterator over every member of a collection.
pub struct CollectionIter {
    inner: Box<dyn Iterator<Item = Shape> + Send>,
}

impl Iterator for CollectionIter {
    type Item = Shape;

    fn next(&mut self) -> Option<Shape> {
        self.inner.next()
    }
}

fn undirected_pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).tuple_combinations().collect()
}

fn directed_pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p)
        .cartesian_product(0..p)
        .filter(|(i, j)| i != j)
        .collect()
}

fn degree_bounded_walk(
    d: usize,
    pairs: std::sync::Arc<Vec<(usize, usize)>>,
    k: usize,
) -> impl Iterator<Item = Vec<usize>> + Send {
    let n = pairs.len();
    SubsetWalker::new(n, k, move |chosen: &[usize], c: usize| {
        let (a, b) = pairs[c];
        let mut da = 0;
        let mut db = 0;
        for &e in chosen {
            let (x, y) = pairs[e];
            if x == a || y == a {
                da += 1;
            }
            if x == b || y == b {
                db += 1;
            }
        }
        da < d && db < d
    })
}

fn count_degree_bounded(p: usize, d: usize, stop_after: u64) -> u64 {
    let pairs = std::sync::Arc::new(undirected_pairs(p));
    let mut count = 0u64;
    for k in 0..=pairs.len().min(p * d / 2) {
        for _ in degree_bounded_walk(d, pairs.clone(), k) {
            count += 1;
            if count > stop_after {
                return count;
            }
        }
    }
    count
}

/// Every member of `spec`, each exactly once, in a fixed order.
///
/// Undirected and arc-count families come out by edge count, then
/// lexicographically in the sorted edge list. `DegreeDirected` comes out as
/// the product of per-vertex neighborhood lists (vertex 1 slowest), each list
/// in the `enumerate_neighborhoods` order.
pub fn enumerate_collection(spec: &CollectionSpec) -> Result<CollectionIter> {
    let estimate = spec.size_estimate();
    if estimate > ENUMERATION_CAP as f64 {
        let feasible = spec.family == Family::Degree
            && count_degree_bounded(spec.p, spec.d, ENUMERATION_CAP) <= ENUMERATION_CAP;
        if !feasible {
            return Err(Error::TooLarge {
                estimate,
                cap: ENUMERATION_CAP,
            });
        }
    }
    let p = spec.p;
    let d = spec.d;
    let inner: Box<dyn Iterator<Item = Shape> + Send> = match spec.family {
        Family::EdgeCount => {
            let pairs = undirected_pairs(p);
            let n = pairs.len();
            Box::new((0..=d.min(n)).flat_map(move |k| {
                let pairs = pairs.clone();
                (0..n).combinations(k).map(move |idx| {
                    let mut g = Graph::empty(p);
                    g.edges.extend(idx.into_iter().map(|e| pairs[e]));
                    Shape::Undirected(g)
                })
            }))
        }
        Family::Degree => {
            let pairs = std::sync::Arc::new(undirected_pairs(p));
            let max_k = pairs.len().min(p * d / 2);
            Box::new((0..=max_k).flat_map(move |k| {
                let lookup = pairs.clone();
                degree_bounded_walk(d, pairs.clone(), k).map(move |idx| {
                    let mut g = Graph::empty(p);
                    g.edges.extend(idx.into_iter().map(|e| lookup[e]));
                    Shape::Undirected(g)
                })
            }))
        }
        Family::EdgeCountDirected => {
            let arcs = directed_pairs(p);
            let n = arcs.len();
            Box::new((0..=d.min(n)).flat_map(move |k| {
                let arcs = arcs.clone();
                (0..n).combinations(k).map(move |idx| {
                    let mut s = DirectedShape::empty(p);
                    for e in idx {
                        let (i, j) = arcs[e];
                        s.neighborhoods[j].push(i);
                    }
                    for h in &mut s.neighborhoods {
                        h.sort_unstable();
                    }
                    Shape::Directed(s)
                })
            }))
        }
        Family::DegreeDirected => {
            let lists: Vec<Vec<Vec<usize>>> = (0..p)
                .map(|j| enumerate_neighborhoods(p, j, d).collect())
                .collect();
            Box::new(
                lists
                    .into_iter()
                    .multi_cartesian_product()
                    .map(move |hoods| Shape::Directed(DirectedShape { p, neighborhoods: hoods })),
            )
        }
    };
    Ok(CollectionIter { inner })
}

/// Largest `p` accepted by [`min_symmetric_selection`].
pub const SYMMETRIC_SEARCH_MAX_P: usize = 64;

/// Exact minimum of `sum_j cost_j(m_j)` over undirected graphs of degree at
/// most `d`, given per-column tables of `(neighborhood, cost)`.
///
/// Each column is relaxed independently; when two column optima disagree on
/// an edge the search branches on that edge (forced in both columns or
/// banned from both). A relaxation that is already symmetric is feasible, so
/// its value is an upper bound for every other node.
pub fn min_symmetric_selection(tables: &[Vec<(Vec<usize>, f64)>], d: usize) -> Result<(Graph, f64)> {
    let p = tables.len();
    if p > SYMMETRIC_SEARCH_MAX_P {
        return Err(Error::Usage(format!(
            "exact undirected search supports p <= {SYMMETRIC_SEARCH_MAX_P} (got p={p})"
        )));
    }
    let sorted: Vec<Vec<(u64, f64)>> = tables
        .iter()
        .map(|col| {
            let mut v: Vec<(u64, f64)> = col
                .iter()
                .filter(|(h, _)| h.len() <= d)
                .map(|(h, c)| (h.iter().fold(0u64, |m, &i| m | (1 << i)), *c))
                .collect();
            v.sort_by(|a, b| a.1.total_cmp(&b.1));
            v
        })
        .collect();

    struct Node {
        forced: Vec<u64>,
        banned: Vec<u64>,
    }

    let relax = |node: &Node| -> Option<(Vec<u64>, f64)> {
        let mut masks = Vec::with_capacity(p);
        let mut total = 0.0;
        for (j, col) in sorted.iter().enumerate() {
            let (f, b) = (node.forced[j], node.banned[j]);
            let (m, c) = col.iter().find(|(m, _)| m & f == f && m & b == 0)?;
            masks.push(*m);
            total += c;
        }
        Some((masks, total))
    };

    let mut best_masks = vec![0u64; p];
    let mut best_value = 0.0;
    for col in &sorted {
        best_value += col
            .iter()
            .find(|(m, _)| *m == 0)
            .ok_or_else(|| Error::domain("cost tables must contain the empty neighborhood"))?
            .1;
    }
    let mut stack = vec![Node {
        forced: vec![0; p],
        banned: vec![0; p],
    }];
    while let Some(node) = stack.pop() {
        let Some((masks, bound)) = relax(&node) else {
            continue;
        };
        if bound >= best_value {
            continue;
        }
        let conflict = (0..p).find_map(|a| {
            ((a + 1)..p).find_map(|b| {
                let ab = masks[b] >> a & 1 == 1;
                let ba = masks[a] >> b & 1 == 1;
                (ab != ba).then_some((a, b))
            })
        });
        let Some((a, b)) = conflict else {
            best_value = bound;
            best_masks = masks;
            continue;
        };
        let mut banned = node.banned.clone();
        banned[a] |= 1 << b;
        banned[b] |= 1 << a;
        let mut forced = node.forced.clone();
        forced[a] |= 1 << b;
        forced[b] |= 1 << a;
        stack.push(Node {
            forced: node.forced,
            banned,
        });
        stack.push(Node {
            forced,
            banned: node.banned,
        });
    }
    let edges = (0..p).flat_map(|j| {
        let m = best_masks[j];
        (0..j).filter(move |&i| m >> i & 1 == 1).map(move |i| (i, j))
    });
    Ok((Graph::from_edges(p, edges)?, best_value))
}
