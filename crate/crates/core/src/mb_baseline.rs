//! Lasso neighborhood selection: every variable is regressed on all the
//! others with an l1 penalty and the supports are combined into a graph.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fitting::{RegressionMatrix, Sample};
use crate::graphs::Graph;

/// How the two directed supports of a pair are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineRule {
    /// Edge when either regression selects the other variable.
    Or,
    /// Edge when both regressions select each other.
    And,
}

impl FromStr for CombineRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "or" => Ok(CombineRule::Or),
            "and" => Ok(CombineRule::And),
            other => Err(Error::Usage(format!("unknown combination rule '{other}'"))),
        }
    }
}

impl fmt::Display for CombineRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombineRule::Or => "or",
            CombineRule::And => "and",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub alpha: f64,
    pub rule: CombineRule,
    pub max_sweeps: usize,
    /// Convergence threshold on the largest coefficient change in a sweep.
    pub tol: f64,
    /// Rescale every column to `||X_i||^2 / n = 1` before the lasso runs.
    pub standardize: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            alpha: 0.05,
            rule: CombineRule::Or,
            max_sweeps: 100_000,
            tol: 1e-8,
            standardize: true,
        }
    }
}

impl LassoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1) (got {})",
                self.alpha
            )));
        }
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(Error::domain("lasso tolerance and sweep budget must be positive"));
        }
        Ok(())
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Upper `u`-quantile of the standard normal.
fn normal_upper_quantile(u: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    -std.inverse_cdf(u)
}

/// Penalty level for column `j` at significance `alpha`:
/// `2 sigma_j / sqrt(n) * z(alpha / (2 p^2))` with `sigma_j^2 = ||X_j||^2 / n`.
pub fn mb_lambda(sample: &Sample, j: usize, alpha: f64) -> f64 {
    let n = sample.n() as f64;
    let p = sample.p() as f64;
    let sigma = (sample.matrix().column(j).norm_squared() / n).sqrt();
    2.0 * sigma / n.sqrt() * normal_upper_quantile(alpha / (2.0 * p * p))
}

/// Minimizes `(1/n) ||X_j - X b||^2 + lambda ||b||_1` over `b` with `b_j = 0`
/// by cyclic coordinate descent. Returns the full length-`p` vector.
pub fn lasso_column(sample: &Sample, j: usize, lambda: f64, cfg: &LassoConfig) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("lambda must be >= 0 (got {lambda})")));
    }
    let x = sample.matrix();
    let n = sample.n();
    let p = sample.p();
    let nf = n as f64;
    let sq_norm: Vec<f64> = (0..p).map(|i| x.column(i).norm_squared() / nf).collect();
    let mut beta = vec![0.0; p];
    let mut resid: Vec<f64> = x.column(j).iter().copied().collect();

    let mut last_change = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        let mut max_change = 0.0_f64;
        for i in 0..p {
            if i == j || sq_norm[i] == 0.0 {
                continue;
            }
            let col = x.column(i);
            let old = beta[i];
            let rho: f64 = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf
                + sq_norm[i] * old;
            let new = soft_threshold(rho, 0.5 * lambda) / sq_norm[i];
            if new != old {
                let diff = new - old;
                for (r, a) in resid.iter_mut().zip(col.iter()) {
                    *r -= a * diff;
                }
                beta[i] = new;
                max_change = max_change.max(diff.abs());
            }
        }
        last_change = max_change;
        if max_change <= cfg.tol {
            return Ok(beta);
        }
    }
    Err(Error::NoConvergence {
        sweeps: cfg.max_sweeps,
        last_change,
        last_iterate: beta,
    })
}

/// Lasso graph and coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MbEstimate {
    pub graph: Graph,
    pub theta: RegressionMatrix,
}

/// Each column divided by its root mean square; zero columns are left alone.
pub fn standardized(sample: &Sample) -> Result<(Sample, Vec<f64>)> {
    let n = sample.n() as f64;
    let scale: Vec<f64> = (0..sample.p())
        .map(|i| {
            let s = (sample.matrix().column(i).norm_squared() / n).sqrt();
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();
    let mut x = sample.matrix().clone();
    for (i, s) in scale.iter().enumerate() {
        x.column_mut(i).unscale_mut(*s);
    }
    Ok((Sample::new(x)?, scale))
}

/// Runs one lasso per column at `lambda_j(alpha)` and combines the supports.
///
/// With `cfg.standardize` the regressions run on unit-scale columns and the
/// coefficients are mapped back to the original scale.
pub fn mb_estimate(sample: &Sample, cfg: &LassoConfig) -> Result<MbEstimate> {
    cfg.validate()?;
    let p = sample.p();
    let (work, scale) = if cfg.standardize {
        standardized(sample)?
    } else {
        (sample.clone(), vec![1.0; p])
    };
    let mut columns = (0..p)
        .into_par_iter()
        .map(|j| lasso_column(&work, j, mb_lambda(&work, j, cfg.alpha), cfg))
        .collect::<Result<Vec<_>>>()?;
    for (j, beta) in columns.iter_mut().enumerate() {
        for (i, b) in beta.iter_mut().enumerate() {
            *b *= scale[j] / scale[i];
        }
    }
    let mut theta = RegressionMatrix::zeros(p);
    for (j, beta) in columns.iter().enumerate() {
        let support: Vec<usize> = (0..p).filter(|&i| beta[i] != 0.0).collect();
        let coefs: Vec<f64> = support.iter().map(|&i| beta[i]).collect();
        theta.set_column(j, &support, &coefs);
    }
    let mut graph = Graph::empty(p);
    for a in 0..p {
        for b in (a + 1)..p {
            let ab = columns[b][a] != 0.0;
            let ba = columns[a][b] != 0.0;
            let keep = match cfg.rule {
                CombineRule::Or => ab || ba,
                CombineRule::And => ab && ba,
            };
            if keep {
                graph.insert(a, b)?;
            }
        }
    }
    Ok(MbEstimate { graph, theta })
}
