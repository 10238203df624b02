//! Prediction risk, oracle risk, edge detection scores, the simulation
//! benchmark and the undersized-penalty experiment.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit_column, fit_model, RegressionMatrix, Sample};
use crate::genmodel::{
    build_ground_truth, sample_er_graph, sample_gaussian, GroundTruth, Purpose, RngSeed,
    DEFAULT_DOMINANCE_MARGIN,
};
use crate::graphs::{
    enumerate_collection, enumerate_neighborhoods, min_symmetric_selection, CollectionSpec,
    DirectedShape, Family, Graph, Shape,
};
use crate::mb_baseline::{mb_estimate, LassoConfig};
use crate::selector::{select, Strategy};
use crate::specfun::{build_penalty_table, PenaltyTable};

/// `||C^{1/2} (theta_est - theta)||_F^2 = tr((theta_est - theta)^T C (theta_est - theta))`.
pub fn msep_loss(theta_est: &RegressionMatrix, truth: &GroundTruth) -> f64 {
    let delta = theta_est.matrix() - truth.theta.matrix();
    let cd = &truth.covariance * &delta;
    delta.component_mul(&cd).sum()
}

/// Loss of one column: `(b - theta^{(j)})^T C (b - theta^{(j)})` for the
/// coefficient vector `b` supported on `hood`.
pub fn column_loss(truth: &GroundTruth, j: usize, hood: &[usize], coefs: &[f64]) -> f64 {
    let p = truth.p();
    let mut delta: Vec<f64> = (0..p).map(|i| -truth.theta.get(i, j)).collect();
    for (&i, &c) in hood.iter().zip(coefs) {
        delta[i] += c;
    }
    let c = &truth.covariance;
    let mut acc = 0.0;
    for a in 0..p {
        if delta[a] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for b in 0..p {
            row += c[(a, b)] * delta[b];
        }
        acc += delta[a] * row;
    }
    acc
}

/// Expected loss of the least-squares fit of column `j` on `hood` from an
/// `n`-sample: `sigma^2_{j|S} (n-1)/(n-|S|-1) - sigma_j^2`, where
/// `sigma^2_{j|S}` is the residual variance of `X_j` given `X_S`.
pub fn expected_column_risk(truth: &GroundTruth, j: usize, hood: &[usize], n: usize) -> Result<f64> {
    let k = hood.len();
    if k + 2 > n {
        return Err(Error::domain("expected risk needs |S| <= n - 2"));
    }
    let c = &truth.covariance;
    let mut resid_var = c[(j, j)];
    if k > 0 {
        let css = DMatrix::from_fn(k, k, |a, b| c[(hood[a], hood[b])]);
        let csj = nalgebra::DVector::from_fn(k, |a, _| c[(hood[a], j)]);
        let chol = css
            .cholesky()
            .ok_or_else(|| Error::numeric("covariance block not positive definite"))?;
        let sol = chol.solve(&csj);
        resid_var -= csj.dot(&sol);
    }
    let nf = n as f64;
    let inflation = (nf - 1.0) / (nf - k as f64 - 1.0);
    Ok(resid_var * inflation - truth.sigma2[j])
}

/// Per-column risk of every neighborhood of size at most `d`.
#[derive(Debug, Clone)]
pub struct RiskTables {
    p: usize,
    d: usize,
    columns: Vec<Vec<(Vec<usize>, f64)>>,
}

/// Minimum of a risk over a collection and the shape attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRisk {
    pub risk: f64,
    pub shape: Shape,
}

impl RiskTables {
    /// Exact expectations under the Gaussian model with sample size `n`.
    pub fn analytic(truth: &GroundTruth, n: usize, d: usize) -> Result<Self> {
        let p = truth.p();
        let columns = (0..p)
            .into_par_iter()
            .map(|j| {
                enumerate_neighborhoods(p, j, d)
                    .map(|h| {
                        let r = expected_column_risk(truth, j, &h, n)?;
                        Ok((h, r))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RiskTables { p, d, columns })
    }

    /// Losses of the fitted columns averaged over the given samples.
    pub fn from_replicates(samples: &[Sample], truth: &GroundTruth, d: usize) -> Result<Self> {
        let p = truth.p();
        if samples.is_empty() {
            return Err(Error::domain("at least one replicate is required"));
        }
        if samples.iter().any(|s| s.p() != p) {
            return Err(Error::domain("replicates and truth disagree on p"));
        }
        let reps = samples.len() as f64;
        let columns = (0..p)
            .into_par_iter()
            .map(|j| {
                enumerate_neighborhoods(p, j, d)
                    .map(|h| {
                        let mut total = 0.0;
                        for s in samples {
                            let fit = fit_column(s, j, &h)?;
                            total += column_loss(truth, j, &h, &fit.coefficients);
                        }
                        Ok((h, total / reps))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RiskTables { p, d, columns })
    }

    pub fn column(&self, j: usize) -> &[(Vec<usize>, f64)] {
        &self.columns[j]
    }

    fn lookup(&self) -> Vec<HashMap<&[usize], f64>> {
        self.columns
            .iter()
            .map(|c| c.iter().map(|(h, r)| (h.as_slice(), *r)).collect())
            .collect()
    }

    /// Risk of a given shape (sum of its column risks).
    pub fn shape_risk(&self, shape: &DirectedShape) -> Result<f64> {
        let mut total = 0.0;
        for j in 0..self.p {
            let hood = shape.neighborhood(j);
            let r = self.columns[j]
                .iter()
                .find(|(h, _)| h.as_slice() == hood)
                .map(|(_, r)| *r)
                .ok_or_else(|| Error::domain("shape exceeds the tabulated neighborhood size"))?;
            total += r;
        }
        Ok(total)
    }

    /// Minimum total risk over `spec`.
    ///
    /// The directed degree family decomposes column by column. The undirected
    /// degree family is solved exactly by branch and bound on edges whose two
    /// column optima disagree. Edge-count families are enumerated.
    pub fn minimize(&self, spec: &CollectionSpec) -> Result<OracleRisk> {
        if spec.p != self.p {
            return Err(Error::domain("collection and risk tables disagree on p"));
        }
        if spec.max_neighborhood() > self.d {
            return Err(Error::domain(format!(
                "risk tables cover neighborhoods up to {} but the collection reaches {}",
                self.d,
                spec.max_neighborhood()
            )));
        }
        match spec.family {
            Family::DegreeDirected => {
                let mut hoods = Vec::with_capacity(self.p);
                let mut total = 0.0;
                for col in &self.columns {
                    let mut best = &col[0];
                    for entry in col {
                        if entry.0.len() <= spec.d && entry.1 < best.1 {
                            best = entry;
                        }
                    }
                    hoods.push(best.0.clone());
                    total += best.1;
                }
                Ok(OracleRisk {
                    risk: total,
                    shape: Shape::Directed(DirectedShape::from_neighborhoods(hoods)?),
                })
            }
            Family::Degree => self.branch_and_bound(spec.d),
            Family::EdgeCount | Family::EdgeCountDirected => {
                let lookup = self.lookup();
                let mut best: Option<(Shape, f64)> = None;
                for shape in enumerate_collection(spec)? {
                    let directed = shape.to_directed();
                    let mut total = 0.0;
                    for (j, table) in lookup.iter().enumerate() {
                        total += table[directed.neighborhood(j)];
                    }
                    if best.as_ref().is_none_or(|(_, b)| total < *b) {
                        best = Some((shape, total));
                    }
                }
                let (shape, risk) = best.expect("collections contain the empty shape");
                Ok(OracleRisk { risk, shape })
            }
        }
    }

    fn branch_and_bound(&self, d: usize) -> Result<OracleRisk> {
        let (graph, risk) = min_symmetric_selection(&self.columns, d)?;
        Ok(OracleRisk {
            risk,
            shape: Shape::Undirected(graph),
        })
    }
}

/// Minimum over `spec` of the replicate-averaged loss of `theta_hat_m`.
pub fn oracle_risk(samples: &[Sample], truth: &GroundTruth, spec: &CollectionSpec) -> Result<OracleRisk> {
    RiskTables::from_replicates(samples, truth, spec.max_neighborhood())?.minimize(spec)
}

/// Minimum over `spec` of the exact expected loss of `theta_hat_m` at sample size `n`.
pub fn oracle_risk_analytic(truth: &GroundTruth, n: usize, spec: &CollectionSpec) -> Result<OracleRisk> {
    RiskTables::analytic(truth, n, spec.max_neighborhood())?.minimize(spec)
}

/// Edge detection scores of one estimated graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMetrics {
    /// `None` when the true graph has no edges.
    pub power: Option<f64>,
    pub fdr: f64,
}

pub fn edge_metrics(selected: &Graph, truth: &Graph) -> Result<EdgeMetrics> {
    if selected.p() != truth.p() {
        return Err(Error::domain("graphs have different vertex counts"));
    }
    let hits = selected
        .edges()
        .filter(|&(i, j)| truth.contains_edge(i, j))
        .count() as f64;
    let declared = selected.edge_count() as f64;
    let actual = truth.edge_count() as f64;
    Ok(EdgeMetrics {
        power: (actual > 0.0).then(|| hits / actual),
        fdr: if declared > 0.0 {
            (declared - hits) / declared
        } else {
            0.0
        },
    })
}

/// Graph density of the simulated graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// Edge probability `q`.
    Q(f64),
    /// Mean vertex degree `s = p q`.
    S(f64),
}

impl Density {
    pub fn edge_probability(&self, p: usize) -> f64 {
        match *self {
            Density::Q(q) => q,
            Density::S(s) => s / p as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Penalized model selection.
    Ours,
    /// Lasso neighborhood selection.
    Mb,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Mb => "mb",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ours" => Ok(Method::Ours),
            "mb" => Ok(Method::Mb),
            other => Err(Error::Usage(format!("unknown method '{other}' (expected ours or mb)"))),
        }
    }
}

/// How the risk-ratio denominator is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Exact expected loss of every least-squares model.
    Analytic,
    /// Loss averaged over the benchmark replicates.
    Replicate,
}

impl FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(OracleMode::Analytic),
            "replicate" => Ok(OracleMode::Replicate),
            other => Err(Error::Usage(format!(
                "unknown oracle mode '{other}' (expected analytic or replicate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub p: usize,
    pub density: Density,
    pub graphs: usize,
    pub reps: usize,
    pub k: f64,
    pub family: Family,
    pub d: usize,
    pub strategy: Strategy,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub margin: f64,
    pub oracle: OracleMode,
    pub lasso: LassoConfig,
    /// Score the baseline by least squares on its selected graph rather than
    /// by the shrunken lasso coefficients.
    pub mb_refit: bool,
}

impl BenchConfig {
    /// Defaults: 20 graphs of 200 replicates, `K = 2`, degree family with `D = 4`.
    pub fn new(n: usize, p: usize, density: Density) -> Self {
        BenchConfig {
            n,
            p,
            density,
            graphs: 20,
            reps: 200,
            k: 2.0,
            family: Family::Degree,
            d: 4,
            strategy: Strategy::BranchAndBound,
            methods: vec![Method::Ours, Method::Mb],
            seed: 1,
            margin: DEFAULT_DOMINANCE_MARGIN,
            oracle: OracleMode::Analytic,
            lasso: LassoConfig::default(),
            mb_refit: true,
        }
    }

    pub fn validate(&self) -> Result<CollectionSpec> {
        let q = self.density.edge_probability(self.p);
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain(format!("edge probability {q} outside [0, 1]")));
        }
        if self.graphs == 0 || self.reps == 0 {
            return Err(Error::domain("graphs and reps must be >= 1"));
        }
        if self.n < 3 {
            return Err(Error::domain("n must be >= 3"));
        }
        if self.d + 2 > self.n {
            return Err(Error::domain(format!(
                "D={} exceeds n-2={}",
                self.d,
                self.n as isize - 2
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Usage("at least one method is required".into()));
        }
        if self.strategy == Strategy::ExactDecomposed && self.family != Family::DegreeDirected {
            return Err(Error::Usage(
                "exact-decomposed search applies only to the deg-directed family".into(),
            ));
        }
        if self.strategy == Strategy::BranchAndBound && self.family != Family::Degree {
            return Err(Error::Usage(
                "branch-and-bound search applies only to the deg family".into(),
            ));
        }
        self.lasso.validate()?;
        CollectionSpec::new(self.family, self.d, self.p)
    }
}

/// Per-graph aggregate for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRow {
    pub graph_id: usize,
    pub true_edges: usize,
    pub mean_loss: f64,
    pub oracle_risk: f64,
    pub r_risk: Option<f64>,
    pub power: Option<f64>,
    pub fdr: f64,
    pub mean_deg: f64,
    pub n_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    /// Mean over graphs of the per-graph risk ratios (graphs with a zero
    /// oracle risk are skipped).
    pub r_risk: Option<f64>,
    /// Mean over cells whose true graph has at least one edge.
    pub power: Option<f64>,
    pub fdr: f64,
    pub mean_selected_degree: f64,
    pub rows: Vec<GraphRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Clone, Copy)]
struct CellScore {
    loss: f64,
    power: Option<f64>,
    fdr: f64,
    degree: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn score_ours(
    sample: &Sample,
    truth: &GroundTruth,
    spec: &CollectionSpec,
    pen: &PenaltyTable,
    strategy: Strategy,
) -> Result<CellScore> {
    let sel = select(sample, spec, pen, strategy)?;
    let graph = sel.theta_tilde.support().symmetrize();
    let em = edge_metrics(&graph, &truth.graph)?;
    Ok(CellScore {
        loss: msep_loss(&sel.theta_hat, truth),
        power: em.power,
        fdr: em.fdr,
        degree: graph.degree(),
    })
}

fn score_mb(sample: &Sample, truth: &GroundTruth, cfg: &LassoConfig, refit: bool) -> Result<CellScore> {
    let est = mb_estimate(sample, cfg)?;
    let em = edge_metrics(&est.graph, &truth.graph)?;
    let theta = if refit {
        fit_model(sample, &est.graph.to_directed())?.theta_hat
    } else {
        est.theta
    };
    Ok(CellScore {
        loss: msep_loss(&theta, truth),
        power: em.power,
        fdr: em.fdr,
        degree: est.graph.degree(),
    })
}

/// Graph and ground truth number `g` of an experiment.
pub fn simulated_truth(cfg: &BenchConfig, g: usize) -> Result<GroundTruth> {
    let seed = RngSeed::new(cfg.seed);
    let q = cfg.density.edge_probability(cfg.p);
    let graph = sample_er_graph(cfg.p, q, &mut seed.stream(Purpose::Graph, g as u32, 0))?;
    build_ground_truth(&graph, cfg.margin, &mut seed.stream(Purpose::Precision, g as u32, 0))
}

/// Replicate `r` of graph `g`.
pub fn simulated_sample(cfg: &BenchConfig, truth: &GroundTruth, g: usize, r: usize) -> Result<Sample> {
    let seed = RngSeed::new(cfg.seed);
    sample_gaussian(truth, cfg.n, &mut seed.stream(Purpose::Sample, g as u32, r as u32))
}

/// Full simulation loop: graphs, truths, replicates, estimation, aggregation.
///
/// Cells are evaluated in parallel but collected and summed in index order,
/// so the report does not depend on the number of worker threads.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    let spec = cfg.validate()?;
    let d_tab = spec.max_neighborhood();
    let pen = build_penalty_table(cfg.n, cfg.p, cfg.k, d_tab)?;

    let truths = (0..cfg.graphs)
        .into_par_iter()
        .map(|g| simulated_truth(cfg, g))
        .collect::<Result<Vec<_>>>()?;

    let oracles = (0..cfg.graphs)
        .into_par_iter()
        .map(|g| {
            let truth = &truths[g];
            match cfg.oracle {
                OracleMode::Analytic => oracle_risk_analytic(truth, cfg.n, &spec),
                OracleMode::Replicate => {
                    let samples = (0..cfg.reps)
                        .map(|r| simulated_sample(cfg, truth, g, r))
                        .collect::<Result<Vec<_>>>()?;
                    oracle_risk(&samples, truth, &spec)
                }
            }
            .map(|o| o.risk)
        })
        .collect::<Result<Vec<f64>>>()?;

    let methods = cfg.methods.clone();
    let cells = (0..cfg.graphs * cfg.reps)
        .into_par_iter()
        .map(|idx| {
            let (g, r) = (idx / cfg.reps, idx % cfg.reps);
            let truth = &truths[g];
            let sample = simulated_sample(cfg, truth, g, r)?;
            methods
                .iter()
                .map(|m| match m {
                    Method::Ours => score_ours(&sample, truth, &spec, &pen, cfg.strategy),
                    Method::Mb => score_mb(&sample, truth, &cfg.lasso, cfg.mb_refit),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let reports = methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let rows: Vec<GraphRow> = (0..cfg.graphs)
                .map(|g| {
                    let scores: Vec<CellScore> = (0..cfg.reps)
                        .map(|r| cells[g * cfg.reps + r][mi])
                        .collect();
                    let mean_loss = mean(scores.iter().map(|s| s.loss)).unwrap_or(0.0);
                    let oracle = oracles[g];
                    GraphRow {
                        graph_id: g + 1,
                        true_edges: truths[g].graph.edge_count(),
                        mean_loss,
                        oracle_risk: oracle,
                        r_risk: (oracle > 0.0).then(|| mean_loss / oracle),
                        power: mean(scores.iter().filter_map(|s| s.power)),
                        fdr: mean(scores.iter().map(|s| s.fdr)).unwrap_or(0.0),
                        mean_deg: mean(scores.iter().map(|s| s.degree as f64)).unwrap_or(0.0),
                        n_reps: cfg.reps,
                    }
                })
                .collect();
            let all = || cells.iter().map(move |c| c[mi]);
            MethodReport {
                method,
                r_risk: mean(rows.iter().filter_map(|r| r.r_risk)),
                power: mean(all().filter_map(|s| s.power)),
                fdr: mean(all().map(|s| s.fdr)).unwrap_or(0.0),
                mean_selected_degree: mean(all().map(|s| s.degree as f64)).unwrap_or(0.0),
                rows,
            }
        })
        .collect();

    Ok(BenchReport {
        config: cfg.clone(),
        methods: reports,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

impl BenchReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }

    /// One CSV per method: `#` lines with the resolved configuration, then
    /// one row per graph and a final `all` row.
    pub fn to_csv(&self, method: Method) -> Result<String> {
        let rep = self
            .method(method)
            .ok_or_else(|| Error::Usage(format!("method {} was not run", method.as_str())))?;
        let mut out = String::new();
        let _ = writeln!(out, "# method={}", method.as_str());
        let _ = writeln!(out, "# config={}", serde_json::to_string(&self.config)?);
        out.push_str("graph_id,r_risk,power,fdr,mean_deg,n_reps\n");
        for row in &rep.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.graph_id,
                fmt_opt(row.r_risk),
                fmt_opt(row.power),
                row.fdr,
                row.mean_deg,
                row.n_reps
            );
        }
        let _ = writeln!(
            out,
            "all,{},{},{},{},{}",
            fmt_opt(rep.r_risk),
            fmt_opt(rep.power),
            rep.fdr,
            rep.mean_selected_degree,
            self.config.graphs * self.config.reps
        );
        Ok(out)
    }
}

/// Setup of the undersized-penalty experiment under `theta = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Config {
    pub gamma: f64,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub reps: usize,
    pub seed: u64,
    pub family: Family,
    pub strategy: Strategy,
    /// `K` of the control run with the Fisher-quantile penalty.
    pub k_control: f64,
}

impl Default for Prop1Config {
    fn default() -> Self {
        Prop1Config {
            gamma: 0.5,
            n: 40,
            p: 60,
            d: 12,
            reps: 10,
            seed: 1,
            family: Family::DegreeDirected,
            strategy: Strategy::Stepwise,
            k_control: 2.0,
        }
    }
}

impl Prop1Config {
    /// `p >= e^{2/(1-gamma)} + 1`.
    pub fn hypothesis_holds(&self) -> bool {
        self.p as f64 >= (2.0 / (1.0 - self.gamma)).exp() + 1.0
    }
}

/// Distribution of selected neighborhood sizes under one penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub penalty: String,
    /// `|m_hat_j|` for every replicate and column, replicate-major.
    pub column_sizes: Vec<usize>,
    /// `|m_hat|` (arcs) per replicate.
    pub total_sizes: Vec<usize>,
    pub mean_column_size: f64,
    pub median_column_size: f64,
}

impl SizeSummary {
    fn new(penalty: &str, column_sizes: Vec<usize>, total_sizes: Vec<usize>) -> Self {
        let mut sorted = column_sizes.clone();
        sorted.sort_unstable();
        let m = sorted.len();
        let median = if m == 0 {
            0.0
        } else if m % 2 == 1 {
            sorted[m / 2] as f64
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) as f64
        };
        SizeSummary {
            penalty: penalty.to_string(),
            mean_column_size: mean(column_sizes.iter().map(|&s| s as f64)).unwrap_or(0.0),
            median_column_size: median,
            column_sizes,
            total_sizes,
        }
    }

    pub fn fraction_at_least(&self, k: usize) -> f64 {
        if self.column_sizes.is_empty() {
            return 0.0;
        }
        self.column_sizes.iter().filter(|&&s| s >= k).count() as f64 / self.column_sizes.len() as f64
    }

    /// `(size, count)` pairs for every size from 0 to the largest observed.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let top = self.column_sizes.iter().copied().max().unwrap_or(0);
        (0..=top)
            .map(|s| (s, self.column_sizes.iter().filter(|&&c| c == s).count()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    pub config: Prop1Config,
    pub hypothesis_holds: bool,
    pub deflated: SizeSummary,
    pub control: SizeSummary,
}

impl Prop1Report {
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "# config={}", serde_json::to_string(&self.config)?);
        let _ = writeln!(out, "# hypothesis_holds={}", self.hypothesis_holds);
        out.push_str("penalty,size,count,fraction\n");
        for summary in [&self.deflated, &self.control] {
            let total = summary.column_sizes.len().max(1) as f64;
            for (size, count) in summary.histogram() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    summary.penalty,
                    size,
                    count,
                    count as f64 / total
                );
            }
        }
        Ok(out)
    }
}

/// Selects under `pen(d) = 2 (1 - gamma) d log(p - 1)` and under the
/// Fisher-quantile penalty on the same pure-noise samples (`C = I`).
pub fn run_prop1_experiment(cfg: &Prop1Config) -> Result<Prop1Report> {
    if !(cfg.gamma > 0.0 && cfg.gamma < 1.0) {
        return Err(Error::domain(format!("gamma must lie in (0, 1) (got {})", cfg.gamma)));
    }
    if !(1 <= cfg.d && cfg.d < cfg.n && cfg.n < cfg.p) {
        return Err(Error::domain(format!(
            "need 1 <= D < n < p (got D={}, n={}, p={})",
            cfg.d, cfg.n, cfg.p
        )));
    }
    if !matches!(cfg.family, Family::DegreeDirected | Family::EdgeCountDirected) {
        return Err(Error::Usage(
            "the overfitting experiment uses a directed family".into(),
        ));
    }
    if cfg.reps == 0 {
        return Err(Error::domain("reps must be >= 1"));
    }
    let spec = CollectionSpec::new(cfg.family, cfg.d, cfg.p)?;
    let d_tab = spec.max_neighborhood();
    let deflated_pen = PenaltyTable::deflated(cfg.n, cfg.p, cfg.gamma, d_tab)?;
    let control_pen = build_penalty_table(cfg.n, cfg.p, cfg.k_control, d_tab)?;
    let truth = GroundTruth::independent(cfg.p);
    let seed = RngSeed::new(cfg.seed);

    let runs = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let sample =
                sample_gaussian(&truth, cfg.n, &mut seed.stream(Purpose::NullSample, 0, r as u32))?;
            let a = select(&sample, &spec, &deflated_pen, cfg.strategy)?.m_hat.to_directed();
            let b = select(&sample, &spec, &control_pen, cfg.strategy)?.m_hat.to_directed();
            Ok((a, b))
        })
        .collect::<Result<Vec<(DirectedShape, DirectedShape)>>>()?;

    let summarize = |label: &str, pick: fn(&(DirectedShape, DirectedShape)) -> &DirectedShape| {
        let cols = runs
            .iter()
            .flat_map(|run| pick(run).neighborhoods().iter().map(Vec::len).collect::<Vec<_>>())
            .collect();
        let totals = runs.iter().map(|run| pick(run).arc_count()).collect();
        SizeSummary::new(label, cols, totals)
    };
    Ok(Prop1Report {
        config: cfg.clone(),
        hypothesis_holds: cfg.hypothesis_holds(),
        deflated: summarize("deflated", |r| &r.0),
        control: summarize("control", |r| &r.1),
    })
}
