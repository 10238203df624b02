//! Simulation scheme: Erdős–Rényi graphs, diagonally dominant precision
//! matrices, the induced regression matrix and Gaussian samples.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{RegressionMatrix, Sample};
use crate::graphs::Graph;

/// Amount added to `sum_i |K_ij|` on the diagonal before normalization.
pub const DEFAULT_DOMINANCE_MARGIN: f64 = 0.005;

/// Independent random streams derived from one master seed.
///
/// Every `(purpose, graph, replicate)` triple owns its own ChaCha stream, so
/// any cell of an experiment can be regenerated in isolation and the draws do
/// not depend on evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
}

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Graph = 1,
    Precision = 2,
    Sample = 3,
    NullSample = 4,
}

impl RngSeed {
    pub fn new(master: u64) -> Self {
        RngSeed { master }
    }

    pub fn stream(&self, purpose: Purpose, graph: u32, replicate: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        let id = ((purpose as u64) << 56) | ((u64::from(graph) & 0x00ff_ffff) << 32)
            | u64::from(replicate);
        rng.set_stream(id);
        rng
    }
}

/// Includes each of the `p(p-1)/2` pairs independently with probability `q`.
pub fn sample_er_graph<R: Rng + ?Sized>(p: usize, q: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("edge probability must lie in [0, 1] (got {q})")));
    }
    let mut g = Graph::empty(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let u: f64 = rng.random();
            if u < q {
                g.insert(i, j)?;
            }
        }
    }
    Ok(g)
}

/// Population quantities for one simulated graph.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub graph: Graph,
    /// Precision matrix with unit diagonal.
    pub precision: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    pub theta: RegressionMatrix,
    /// Conditional variances `1 / K_jj`.
    pub sigma2: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl GroundTruth {
    /// Builds every derived quantity from a symmetric positive definite precision.
    pub fn from_precision(graph: Graph, precision: DMatrix<f64>) -> Result<Self> {
        let p = precision.nrows();
        if precision.ncols() != p || graph.p() != p {
            return Err(Error::domain("precision matrix and graph disagree on p"));
        }
        let covariance = precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numeric("precision matrix is not positive definite"))?
            .inverse();
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numeric("covariance matrix is not positive definite"))?;
        let theta = DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                0.0
            } else {
                -precision[(i, j)] / precision[(j, j)]
            }
        });
        let sigma2 = (0..p).map(|j| 1.0 / precision[(j, j)]).collect();
        Ok(GroundTruth {
            graph,
            precision,
            theta: RegressionMatrix::from_matrix(theta)?,
            covariance,
            sigma2,
            chol,
        })
    }

    /// `C = I`, `theta = 0`.
    pub fn independent(p: usize) -> Self {
        GroundTruth::from_precision(Graph::empty(p), DMatrix::identity(p, p))
            .expect("identity is positive definite")
    }

    pub fn p(&self) -> usize {
        self.precision.nrows()
    }

    pub(crate) fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Random precision matrix with the shape of `g`: off-diagonal entries on the
/// edges drawn uniformly in `[-1, 1]`, diagonal set to `sum_i |K_ij| + margin`,
/// then rescaled to a unit diagonal.
pub fn build_ground_truth<R: Rng + ?Sized>(g: &Graph, margin: f64, rng: &mut R) -> Result<GroundTruth> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::domain(format!(
            "dominance margin must be positive (got {margin})"
        )));
    }
    let p = g.p();
    let mut k = DMatrix::<f64>::zeros(p, p);
    for (i, j) in g.edges() {
        let mut v = 0.0;
        while v == 0.0 {
            v = rng.random_range(-1.0..=1.0);
        }
        k[(i, j)] = v;
        k[(j, i)] = v;
    }
    for j in 0..p {
        let off: f64 = (0..p).filter(|&i| i != j).map(|i| k[(i, j)].abs()).sum();
        k[(j, j)] = off + margin;
    }
    let scale: Vec<f64> = (0..p).map(|j| 1.0 / k[(j, j)].sqrt()).collect();
    let normalized = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            k[(i, j)] * scale[i] * scale[j]
        }
    });
    GroundTruth::from_precision(g.clone(), normalized)
}

/// `n` i.i.d. rows from `N(0, C)`, generated as `L z` with `C = L L^T`.
pub fn sample_gaussian<R: Rng + ?Sized>(truth: &GroundTruth, n: usize, rng: &mut R) -> Result<Sample> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    let p = truth.p();
    let z = DMatrix::from_fn(p, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = (truth.cholesky_factor() * z).transpose();
    Sample::new(x)
}

#[derive(Serialize, Deserialize)]
struct GroundTruthJson {
    graph: Graph,
    precision: Vec<Vec<f64>>,
    covariance: Vec<Vec<f64>>,
    theta: RegressionMatrix,
    sigma2: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl Serialize for GroundTruth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroundTruthJson {
            graph: self.graph.clone(),
            precision: rows(&self.precision),
            covariance: rows(&self.covariance),
            theta: self.theta.clone(),
            sigma2: self.sigma2.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroundTruth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = GroundTruthJson::deserialize(d)?;
        let p = v.precision.len();
        if v.precision.iter().any(|r| r.len() != p) {
            return Err(serde::de::Error::custom("precision must be square"));
        }
        let k = DMatrix::from_fn(p, p, |i, j| v.precision[i][j]);
        GroundTruth::from_precision(v.graph, k).map_err(serde::de::Error::custom)
    }
}
