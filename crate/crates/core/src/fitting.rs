//! Column-wise least squares over a candidate shape.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::DirectedShape;

/// Relative size of a diagonal entry of `R` below which the design is
/// treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// The `n x p` observation matrix, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: DMatrix<f64>,
}

impl Sample {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() < 3 {
            return Err(Error::domain(format!(
                "a sample needs at least 3 observations (got {})",
                x.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::domain("a sample needs at least one variable"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample contains non-finite entries"));
        }
        Ok(Sample { x })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::domain("ragged rows"));
        }
        Sample::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.x.column(j).into_owned()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Sample::new(&self.x * c)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    /// Comma-separated numbers, one observation per row. A first row that
    /// does not parse as numbers is taken as a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width: Option<usize> = None;
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(idx + 1, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
            if rec.iter().all(str::is_empty) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(str::parse::<f64>).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if rows.is_empty() && width.is_none() => {
                    width = Some(rec.len());
                    continue;
                }
                Err(e) => {
                    let bad = rec.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                    return Err(Error::Parse {
                        line,
                        msg: format!("not a number: '{bad}' ({e})"),
                    });
                }
            };
            if let Some(w) = width {
                if values.len() != w {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected {w} fields, found {}", values.len()),
                    });
                }
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-finite value {v}"),
                });
            }
            width = Some(values.len());
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "no numeric rows".into(),
            });
        }
        Sample::from_rows(&rows)
    }
}

/// A `p x p` matrix whose column `j` holds the coefficients `theta^{(j)}`
/// used to predict variable `j`; entry `(i, j)` is `theta_i^{(j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionMatrix {
    theta: DMatrix<f64>,
}

impl RegressionMatrix {
    pub fn zeros(p: usize) -> Self {
        RegressionMatrix {
            theta: DMatrix::zeros(p, p),
        }
    }

    pub fn from_matrix(theta: DMatrix<f64>) -> Result<Self> {
        if theta.nrows() != theta.ncols() {
            return Err(Error::domain("regression matrix must be square"));
        }
        if (0..theta.nrows()).any(|j| theta[(j, j)] != 0.0) {
            return Err(Error::domain("regression matrix must have a zero diagonal"));
        }
        Ok(RegressionMatrix { theta })
    }

    pub fn p(&self) -> usize {
        self.theta.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[(i, j)]
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.theta.column(j).norm()
    }

    pub(crate) fn set_column(&mut self, j: usize, support: &[usize], coefs: &[f64]) {
        self.theta.column_mut(j).fill(0.0);
        for (&i, &c) in support.iter().zip(coefs) {
            if i != j {
                self.theta[(i, j)] = c;
            }
        }
    }

    pub(crate) fn zero_column(&mut self, j: usize) {
        self.theta.column_mut(j).fill(0.0);
    }

    /// Directed support: arc `(i, j)` wherever `theta_i^{(j)} != 0`.
    pub fn support(&self) -> DirectedShape {
        let p = self.p();
        let hoods = (0..p)
            .map(|j| (0..p).filter(|&i| self.theta[(i, j)] != 0.0).collect())
            .collect();
        DirectedShape::from_neighborhoods(hoods).expect("zero diagonal")
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.p())
            .map(|i| self.theta.row(i).iter().copied().collect())
            .collect()
    }
}

impl Serialize for RegressionMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RegressionMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(serde::de::Error::custom("theta must be a square array"));
        }
        RegressionMatrix::from_matrix(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
            .map_err(serde::de::Error::custom)
    }
}

/// Least-squares fit of one column on a predictor set.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnFit {
    /// Coefficients aligned with the (sorted) predictor set.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    /// The predictors were collinear; `coefficients` is the minimum-norm solution.
    pub rank_deficient: bool,
}

fn least_squares(a: DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, bool) {
    let k = a.ncols();
    let qr = a.clone().qr();
    let (diag_max, diag_min) = {
        let r = qr.r();
        (0..k).fold((0.0_f64, f64::INFINITY), |(mx, mn), i| {
            let v = r[(i, i)].abs();
            (mx.max(v), mn.min(v))
        })
    };
    if diag_max > 0.0 && diag_min > RANK_TOL * diag_max {
        let mut qty = y.clone();
        qr.q_tr_mul(&mut qty);
        let rhs = qty.rows(0, k).into_owned();
        if let Some(beta) = qr.r().solve_upper_triangular(&rhs) {
            return (beta, false);
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let beta = svd
        .solve(y, (RANK_TOL * smax).max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(k));
    (beta, true)
}

/// Regresses column `j` on the columns in `hood` (orthogonal projection).
pub fn fit_column(sample: &Sample, j: usize, hood: &[usize]) -> Result<ColumnFit> {
    let n = sample.n();
    let p = sample.p();
    if j >= p || hood.iter().any(|&i| i >= p) {
        return Err(Error::domain("vertex index out of range"));
    }
    if hood.contains(&j) {
        return Err(Error::domain(format!(
            "column {} cannot be regressed on itself",
            j + 1
        )));
    }
    if hood.len() + 2 > n {
        return Err(Error::domain(format!(
            "neighborhood of size {} exceeds n-2 = {}",
            hood.len(),
            n as isize - 2
        )));
    }
    let y = sample.x.column(j).into_owned();
    if hood.is_empty() {
        return Ok(ColumnFit {
            coefficients: Vec::new(),
            rss: y.norm_squared(),
            rank_deficient: false,
        });
    }
    let a = DMatrix::from_fn(n, hood.len(), |r, c| sample.x[(r, hood[c])]);
    let (beta, rank_deficient) = least_squares(a.clone(), &y);
    let resid = &y - &a * &beta;
    Ok(ColumnFit {
        coefficients: beta.iter().copied().collect(),
        rss: resid.norm_squared(),
        rank_deficient,
    })
}

/// `theta_hat_m` for one shape together with the per-column residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: RegressionMatrix,
    pub rss: Vec<f64>,
    pub shape: DirectedShape,
    /// Columns whose design was rank deficient.
    pub rank_deficient: Vec<usize>,
}

impl FitResult {
    /// `||X (I - theta_hat)||_F^2`.
    pub fn total_rss(&self) -> f64 {
        self.rss.iter().sum()
    }
}

/// Fits every column of `sample` on its neighborhood in `shape`.
pub fn fit_model(sample: &Sample, shape: &DirectedShape) -> Result<FitResult> {
    let p = sample.p();
    if shape.p() != p {
        return Err(Error::domain(format!(
            "shape has p={} but sample has p={p}",
            shape.p()
        )));
    }
    let mut theta = RegressionMatrix::zeros(p);
    let mut rss = Vec::with_capacity(p);
    let mut rank_deficient = Vec::new();
    for j in 0..p {
        let hood = shape.neighborhood(j);
        let fit = fit_column(sample, j, hood)?;
        theta.set_column(j, hood, &fit.coefficients);
        if fit.rank_deficient {
            rank_deficient.push(j);
        }
        rss.push(fit.rss);
    }
    Ok(FitResult {
        theta_hat: theta,
        rss,
        shape: shape.clone(),
        rank_deficient,
    })
}

/// `||X (I - A)||_F^2` evaluated directly.
pub fn empirical_risk(sample: &Sample, a: &RegressionMatrix) -> f64 {
    let p = sample.p();
    let resid = &sample.x * (DMatrix::<f64>::identity(p, p) - &a.theta);
    resid.norm_squared()
}
