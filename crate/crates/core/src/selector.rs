//! The penalized criterion, the search strategies, the degree-condition
//! check and the thresholded estimator.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit_column, fit_model, FitResult, RegressionMatrix, Sample};
use crate::graphs::{
    enumerate_collection, enumerate_neighborhoods, min_symmetric_selection, CollectionSpec,
    DirectedShape, Family, Graph, Shape,
};
use crate::specfun::PenaltyTable;

/// Default `eta` for [`validate_degree_condition`].
pub const DEFAULT_ETA: f64 = 0.9;

/// `(1 + pen(d) / (n - d))`, the factor multiplying a residual sum of squares.
pub fn penalty_factor(pen: &PenaltyTable, n: usize, d: usize) -> Result<f64> {
    if d >= n {
        return Err(Error::domain(format!(
            "neighborhood size {d} must be smaller than n={n}"
        )));
    }
    Ok(1.0 + pen.get(d)? / (n - d) as f64)
}

/// `Crit(m)` and its per-column summands.
pub fn criterion(fit: &FitResult, pen: &PenaltyTable) -> Result<(f64, Vec<f64>)> {
    let n = pen.n;
    let per_column = fit
        .rss
        .iter()
        .enumerate()
        .map(|(j, rss)| Ok(rss * penalty_factor(pen, n, fit.shape.neighborhood(j).len())?))
        .collect::<Result<Vec<f64>>>()?;
    Ok((per_column.iter().sum(), per_column))
}

/// Outcome of the degree-condition check. Purely advisory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeCheck {
    pub d: usize,
    pub eta: f64,
    /// `eta n / (2 (1.1 + sqrt(log p))^2)`
    pub strong_bound: f64,
    /// `(eta / 3) n / (2.1 + log(p / D))`
    pub weak_bound: f64,
    pub strong_holds: bool,
    pub weak_holds: bool,
}

impl DegreeCheck {
    pub fn ok(&self) -> bool {
        self.strong_holds || self.weak_holds
    }

    pub fn warning(&self) -> Option<String> {
        (!self.ok()).then(|| self.to_string())
    }
}

impl fmt::Display for DegreeCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "degree bound D={} vs eta={}: strong bound {:.4} ({}), weak bound {:.4} ({})",
            self.d,
            self.eta,
            self.strong_bound,
            if self.strong_holds { "holds" } else { "fails" },
            self.weak_bound,
            if self.weak_holds { "holds" } else { "fails" },
        )
    }
}

pub fn validate_degree_condition(n: usize, p: usize, d: usize, eta: f64) -> Result<DegreeCheck> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!("eta must lie in (0, 1) (got {eta})")));
    }
    if d == 0 {
        return Err(Error::domain("D must be >= 1"));
    }
    let nf = n as f64;
    let lp = (p as f64).ln();
    let strong_bound = eta * nf / (2.0 * (1.1 + lp.sqrt()).powi(2));
    let weak_bound = eta / 3.0 * nf / (2.1 + (p as f64 / d as f64).ln());
    let df = d as f64;
    Ok(DegreeCheck {
        d,
        eta,
        strong_bound,
        weak_bound,
        strong_holds: df <= strong_bound,
        weak_holds: df <= weak_bound,
    })
}

/// Search strategy for minimizing the criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Column-by-column exact minimization; directed degree family only.
    ExactDecomposed,
    /// Full scan of the collection.
    Exhaustive,
    /// Forward-backward single-edge local search from the empty graph.
    Stepwise,
    /// Exact branch and bound on disagreeing column optima; undirected
    /// degree family only.
    BranchAndBound,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ExactDecomposed => "exact-decomposed",
            Strategy::Exhaustive => "exhaustive",
            Strategy::Stepwise => "stepwise",
            Strategy::BranchAndBound => "branch-and-bound",
        }
    }

    /// The strategy used when none is requested.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::DegreeDirected => Strategy::ExactDecomposed,
            Family::Degree => Strategy::BranchAndBound,
            _ => Strategy::Stepwise,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "exact-decomposed" | "exact" => Ok(Strategy::ExactDecomposed),
            "exhaustive" => Ok(Strategy::Exhaustive),
            "stepwise" => Ok(Strategy::Stepwise),
            "branch-and-bound" | "bnb" => Ok(Strategy::BranchAndBound),
            other => Err(Error::Usage(format!(
                "unknown strategy '{other}' (expected exact-decomposed, exhaustive, stepwise or branch-and-bound)"
            ))),
        }
    }
}

/// The selected shape with both estimators and the criterion breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    #[serde(flatten)]
    pub m_hat: Shape,
    #[serde(rename = "theta")]
    pub theta_hat: RegressionMatrix,
    pub theta_tilde: RegressionMatrix,
    pub crit: f64,
    pub per_column_crit: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Memoized `rss_j(S) (1 + pen(|S|)/(n - |S|))`.
struct ColumnScorer<'a> {
    sample: &'a Sample,
    pen: &'a PenaltyTable,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> ColumnScorer<'a> {
    fn new(sample: &'a Sample, pen: &'a PenaltyTable) -> Self {
        ColumnScorer {
            sample,
            pen,
            cache: HashMap::new(),
        }
    }

    fn cost(&mut self, j: usize, hood: &[usize]) -> Result<f64> {
        if let Some(&c) = self.cache.get(&(j, hood.to_vec())) {
            return Ok(c);
        }
        let c = column_cost(self.sample, self.pen, j, hood)?;
        self.cache.insert((j, hood.to_vec()), c);
        Ok(c)
    }
}

fn column_cost(sample: &Sample, pen: &PenaltyTable, j: usize, hood: &[usize]) -> Result<f64> {
    let fit = fit_column(sample, j, hood)?;
    Ok(fit.rss * penalty_factor(pen, sample.n(), hood.len())?)
}

fn check_inputs(sample: &Sample, spec: &CollectionSpec, pen: &PenaltyTable) -> Result<()> {
    let (n, p) = (sample.n(), sample.p());
    if spec.p != p {
        return Err(Error::domain(format!(
            "collection is over p={} vertices but the sample has p={p}",
            spec.p
        )));
    }
    if spec.d + 2 > n {
        return Err(Error::domain(format!(
            "collection bound D={} exceeds n-2={}",
            spec.d,
            n as isize - 2
        )));
    }
    if pen.n != n || pen.p != p {
        return Err(Error::domain(format!(
            "penalty table built for (n={}, p={}) used on a sample with (n={n}, p={p})",
            pen.n, pen.p
        )));
    }
    if pen.d_max() < spec.max_neighborhood() {
        return Err(Error::domain(format!(
            "penalty table covers d <= {} but the collection reaches {}",
            pen.d_max(),
            spec.max_neighborhood()
        )));
    }
    Ok(())
}

/// Minimizes the criterion over `spec` and returns the selected estimator.
pub fn select(
    sample: &Sample,
    spec: &CollectionSpec,
    pen: &PenaltyTable,
    strategy: Strategy,
) -> Result<SelectionResult> {
    check_inputs(sample, spec, pen)?;
    let m_hat = match strategy {
        Strategy::ExactDecomposed => {
            if spec.family != Family::DegreeDirected {
                return Err(Error::Usage(format!(
                    "exact-decomposed search applies only to the deg-directed family (got {})",
                    spec.family
                )));
            }
            Shape::Directed(search_decomposed(sample, spec, pen)?)
        }
        Strategy::Exhaustive => search_exhaustive(sample, spec, pen)?,
        Strategy::Stepwise => search_stepwise(sample, spec, pen)?,
        Strategy::BranchAndBound => {
            if spec.family != Family::Degree {
                return Err(Error::Usage(format!(
                    "branch-and-bound search applies only to the deg family (got {})",
                    spec.family
                )));
            }
            Shape::Undirected(search_branch_and_bound(sample, spec, pen)?)
        }
    };
    finish(sample, pen, m_hat)
}

fn finish(sample: &Sample, pen: &PenaltyTable, m_hat: Shape) -> Result<SelectionResult> {
    let fit = fit_model(sample, &m_hat.to_directed())?;
    let (crit, per_column_crit) = criterion(&fit, pen)?;
    let theta_tilde = threshold(&fit.theta_hat, sample.n());
    let mut warnings: Vec<String> = fit
        .rank_deficient
        .iter()
        .map(|j| {
            format!(
                "column {} has collinear predictors; minimum-norm coefficients used",
                j + 1
            )
        })
        .collect();
    if theta_tilde != fit.theta_hat {
        warnings.push("thresholding zeroed at least one column of theta".into());
    }
    Ok(SelectionResult {
        m_hat,
        theta_hat: fit.theta_hat,
        theta_tilde,
        crit,
        per_column_crit,
        warnings,
    })
}

/// Best neighborhood of one column among all sets of size <= `d`; the first
/// minimizer in enumeration order wins ties.
pub(crate) fn best_neighborhood(
    sample: &Sample,
    pen: &PenaltyTable,
    j: usize,
    d: usize,
) -> Result<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for hood in enumerate_neighborhoods(sample.p(), j, d) {
        let c = column_cost(sample, pen, j, &hood)?;
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((hood, c));
        }
    }
    Ok(best.expect("the empty neighborhood is always enumerated"))
}

fn search_decomposed(
    sample: &Sample,
    spec: &CollectionSpec,
    pen: &PenaltyTable,
) -> Result<DirectedShape> {
    let hoods = (0..sample.p())
        .into_par_iter()
        .map(|j| best_neighborhood(sample, pen, j, spec.d).map(|(h, _)| h))
        .collect::<Result<Vec<_>>>()?;
    DirectedShape::from_neighborhoods(hoods)
}

fn search_exhaustive(sample: &Sample, spec: &CollectionSpec, pen: &PenaltyTable) -> Result<Shape> {
    let mut scorer = ColumnScorer::new(sample, pen);
    let mut best: Option<(Shape, f64)> = None;
    for shape in enumerate_collection(spec)? {
        let directed = shape.to_directed();
        let mut crit = 0.0;
        for j in 0..sample.p() {
            crit += scorer.cost(j, directed.neighborhood(j))?;
        }
        if best.as_ref().is_none_or(|(_, b)| crit < *b) {
            best = Some((shape, crit));
        }
    }
    Ok(best.expect("every collection contains the empty shape").0)
}

fn search_branch_and_bound(
    sample: &Sample,
    spec: &CollectionSpec,
    pen: &PenaltyTable,
) -> Result<Graph> {
    let p = sample.p();
    let tables = (0..p)
        .into_par_iter()
        .map(|j| {
            enumerate_neighborhoods(p, j, spec.d)
                .map(|h| column_cost(sample, pen, j, &h).map(|c| (h, c)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(min_symmetric_selection(&tables, spec.d)?.0)
}

/// Cost of column `j` with predictor `i` toggled, memoized per column.
struct ToggleTable {
    entries: Vec<Vec<Option<f64>>>,
}

fn toggled(hood: &[usize], i: usize) -> Vec<usize> {
    match hood.binary_search(&i) {
        Ok(pos) => {
            let mut h = hood.to_vec();
            h.remove(pos);
            h
        }
        Err(pos) => {
            let mut h = hood.to_vec();
            h.insert(pos, i);
            h
        }
    }
}

impl ToggleTable {
    fn new(p: usize) -> Self {
        ToggleTable {
            entries: vec![vec![None; p]; p],
        }
    }

    fn get(
        &mut self,
        sample: &Sample,
        pen: &PenaltyTable,
        hoods: &[Vec<usize>],
        j: usize,
        i: usize,
    ) -> Result<f64> {
        if let Some(c) = self.entries[j][i] {
            return Ok(c);
        }
        let c = column_cost(sample, pen, j, &toggled(&hoods[j], i))?;
        self.entries[j][i] = Some(c);
        Ok(c)
    }

    fn invalidate(&mut self, j: usize) {
        self.entries[j].iter_mut().for_each(|e| *e = None);
    }
}

/// Forward-backward local search on single edges (undirected families) or
/// single arcs (directed families), starting from the empty shape. Each step
/// applies the feasible toggle that most decreases the criterion; the first
/// move in lexicographic order wins ties. Stops at a local minimum.
fn search_stepwise(sample: &Sample, spec: &CollectionSpec, pen: &PenaltyTable) -> Result<Shape> {
    let p = sample.p();
    let d = spec.d;
    let directed = spec.family.is_directed();
    let mut hoods: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut cost: Vec<f64> = (0..p)
        .map(|j| column_cost(sample, pen, j, &[]))
        .collect::<Result<_>>()?;
    let mut table = ToggleTable::new(p);
    let mut count = 0usize;
    let max_steps = 4 * p * p + 100;

    for _ in 0..max_steps {
        let mut best: Option<((usize, usize), f64)> = None;
        if directed {
            for i in 0..p {
                for j in 0..p {
                    if i == j {
                        continue;
                    }
                    let present = hoods[j].binary_search(&i).is_ok();
                    if !present {
                        let full = match spec.family {
                            Family::EdgeCountDirected => count >= d,
                            _ => hoods[j].len() >= d,
                        };
                        if full {
                            continue;
                        }
                    }
                    let delta = table.get(sample, pen, &hoods, j, i)? - cost[j];
                    if delta < 0.0 && best.as_ref().is_none_or(|(_, b)| delta < *b) {
                        best = Some(((i, j), delta));
                    }
                }
            }
        } else {
            for a in 0..p {
                for b in (a + 1)..p {
                    let present = hoods[b].binary_search(&a).is_ok();
                    if !present {
                        let full = match spec.family {
                            Family::EdgeCount => count >= d,
                            _ => hoods[a].len() >= d || hoods[b].len() >= d,
                        };
                        if full {
                            continue;
                        }
                    }
                    let delta = (table.get(sample, pen, &hoods, a, b)? - cost[a])
                        + (table.get(sample, pen, &hoods, b, a)? - cost[b]);
                    if delta < 0.0 && best.as_ref().is_none_or(|(_, bst)| delta < *bst) {
                        best = Some(((a, b), delta));
                    }
                }
            }
        }

        let Some(((i, j), _)) = best else {
            break;
        };
        let adding = hoods[j].binary_search(&i).is_err();
        let mut apply = |col: usize, pred: usize, hoods: &mut Vec<Vec<usize>>| -> Result<()> {
            let c = table.get(sample, pen, hoods, col, pred)?;
            hoods[col] = toggled(&hoods[col], pred);
            cost[col] = c;
            table.invalidate(col);
            Ok(())
        };
        apply(j, i, &mut hoods)?;
        if !directed {
            apply(i, j, &mut hoods)?;
        }
        if adding {
            count += 1;
        } else {
            count -= 1;
        }
    }

    if directed {
        Ok(Shape::Directed(DirectedShape::from_neighborhoods(hoods)?))
    } else {
        let edges = hoods
            .iter()
            .enumerate()
            .flat_map(|(j, h)| h.iter().filter(move |&&i| i < j).map(move |&i| (i, j)));
        Ok(Shape::Undirected(Graph::from_edges(p, edges)?))
    }
}

/// `T_n = n^(2 log n)`, natural logarithm.
pub fn threshold_level(n: usize) -> f64 {
    let ln = (n as f64).ln();
    (2.0 * ln * ln).exp()
}

/// Zeroes every column whose Euclidean norm exceeds `sqrt(p) T_n`.
pub fn threshold(theta: &RegressionMatrix, n: usize) -> RegressionMatrix {
    let p = theta.p();
    let limit = (p as f64).sqrt() * threshold_level(n);
    let mut out = theta.clone();
    for j in 0..p {
        if theta.column_norm(j) > limit {
            out.zero_column(j);
        }
    }
    out
}
