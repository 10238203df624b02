//! Fisher-distribution tails, the `Dkhi` functional, its inverse and the
//! model-selection penalty built from them.
//!
//! Upper Fisher tails are evaluated through the regularized incomplete beta
//! function, `P(F_{d,N} >= x) = I_{N/(N+dx)}(N/2, d/2)`, with a Lentz
//! continued fraction and the usual symmetric-argument switch.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

/// Absolute tolerance on `|dkhi(x*) - q|` used by [`edkhi`].
pub const EDKHI_VALUE_TOL: f64 = 1e-10;
/// Relative bracket width at which [`edkhi`] stops bisecting.
pub const EDKHI_BRACKET_TOL: f64 = 1e-10;
/// Maximum number of bracket doublings before [`edkhi`] gives up.
pub const EDKHI_MAX_DOUBLINGS: usize = 200;

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`, given both `x` and `1 - x` so
/// callers can pass a complement computed without cancellation.
fn beta_reg(a: f64, b: f64, x: f64, xc: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if xc <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * xc.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, xc) / b
    }
}

/// Upper tail without argument validation; `d`, `n` > 0, `x` >= 0.
fn upper_tail(d: f64, n: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let denom = n + d * x;
    beta_reg(0.5 * n, 0.5 * d, n / denom, d * x / denom)
}

/// `P(F_{d,N} >= x)` for a Fisher variable with `d` and `N` degrees of freedom.
pub fn fisher_tail(d: f64, n: f64, x: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) || !(n > 0.0 && n.is_finite()) {
        return Err(Error::domain(format!(
            "fisher_tail: degrees of freedom must be positive (got d={d}, N={n})"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!(
            "fisher_tail: evaluation point must be nonnegative (got {x})"
        )));
    }
    Ok(upper_tail(d, n, x))
}

/// Validated arguments of the `Dkhi` functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkhiArgs {
    d: u32,
    n: u32,
    x: f64,
}

impl DkhiArgs {
    pub fn new(d: u32, n: u32, x: f64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::domain(format!(
                "dkhi: degrees of freedom must be >= 1 (got d={d}, N={n})"
            )));
        }
        if !(x > 0.0) {
            return Err(Error::domain(format!("dkhi: x must be > 0 (got {x})")));
        }
        Ok(DkhiArgs { d, n, x })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

fn dkhi_raw(d: u32, n: u32, x: f64) -> f64 {
    let d = f64::from(d);
    let n = f64::from(n);
    let first = upper_tail(d + 2.0, n, x / (d + 2.0));
    let second = upper_tail(d, n + 2.0, (n + 2.0) * x / (n * d));
    first - (x / d) * second
}

/// `Dkhi(d, N, x) = P(F_{d+2,N} >= x/(d+2)) - (x/d) P(F_{d,N+2} >= (N+2)x/(Nd))`.
///
/// Decreasing in `x`, tends to 1 as `x -> 0+` and to 0 as `x -> inf`.
pub fn dkhi(args: &DkhiArgs) -> f64 {
    dkhi_raw(args.d, args.n, args.x)
}

/// Inverse of `x -> Dkhi(d, N, x)`: returns `x*` with `Dkhi(d, N, x*) = q`.
///
/// `q = 1` is the boundary value `lim_{x->0+} Dkhi = 1` and maps to `x* = 0`.
pub fn edkhi(d: u32, n: u32, q: f64) -> Result<f64> {
    if d == 0 || n == 0 {
        return Err(Error::domain(format!(
            "edkhi: degrees of freedom must be >= 1 (got d={d}, N={n})"
        )));
    }
    if q.is_nan() || q <= 0.0 || q > 1.0 {
        return Err(Error::domain(format!("edkhi: q must lie in (0, 1) (got {q})")));
    }
    if q == 1.0 {
        return Ok(0.0);
    }

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut doublings = 0;
    loop {
        let f = dkhi_raw(d, n, hi);
        if f == q {
            return Ok(hi);
        }
        if f < q {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > EDKHI_MAX_DOUBLINGS {
            return Err(Error::numeric(format!(
                "edkhi: bracket expansion failed for d={d}, N={n}, q={q}"
            )));
        }
    }

    // dkhi(lo) > q >= dkhi(hi)
    for _ in 0..2_000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f = dkhi_raw(d, n, mid);
        if f > q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= EDKHI_BRACKET_TOL * hi && (f - q).abs() <= EDKHI_VALUE_TOL {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::numeric(format!(
        "edkhi: bisection did not terminate for d={d}, N={n}, q={q}"
    )))
}

/// `ln C(n, k)` as a sum of logarithms; exact enough and overflow-free.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64 / i as f64).ln())
        .sum()
}

/// The penalty `pen(d) = K (n-d)/(n-d-1) EDkhi[d+1, n-d-1, (C(p-1,d)(d+1)^2)^-1]`.
pub fn penalty(n: usize, p: usize, k: f64, d: usize) -> Result<f64> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::domain(format!("penalty: K must be > 1 (got {k})")));
    }
    if d + 2 > n {
        return Err(Error::domain(format!(
            "penalty undefined: n\u{2212}d\u{2212}1 \u{2264} 0 (n={n}, d={d})"
        )));
    }
    if d >= p {
        return Err(Error::domain(format!(
            "penalty: neighborhood size d={d} must be smaller than p={p}"
        )));
    }
    let ln_q = -ln_binomial(p - 1, d) - 2.0 * ((d + 1) as f64).ln();
    let q = ln_q.exp();
    if q == 0.0 {
        return Err(Error::numeric(format!(
            "penalty: quantile level underflows for p={p}, d={d}"
        )));
    }
    let dof1 = (d + 1) as u32;
    let dof2 = (n - d - 1) as u32;
    let x = edkhi(dof1, dof2, q)?;
    let nd = (n - d) as f64;
    Ok(k * nd / (nd - 1.0) * x)
}

/// Where the values of a [`PenaltyTable`] come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltySource {
    /// The Fisher-quantile penalty with tuning constant `k`.
    Fisher { k: f64 },
    /// `pen(d) = 2 (1 - gamma) d log(p - 1)`, the undersized penalty that overfits.
    Deflated { gamma: f64 },
}

/// `pen(d)` tabulated for `d = 0..=d_max` at fixed `(n, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTable {
    pub n: usize,
    pub p: usize,
    pub source: PenaltySource,
    values: Vec<f64>,
}

impl PenaltyTable {
    pub fn d_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, d: usize) -> Result<f64> {
        self.values.get(d).copied().ok_or_else(|| {
            Error::domain(format!(
                "no penalty entry for neighborhood size {d} (table covers 0..={})",
                self.d_max()
            ))
        })
    }

    /// `2 (1 - gamma) d log(p - 1)` for `d = 0..=d_max`.
    pub fn deflated(n: usize, p: usize, gamma: f64, d_max: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::domain(format!("gamma must lie in (0, 1) (got {gamma})")));
        }
        if p < 3 {
            return Err(Error::domain("deflated penalty needs p >= 3"));
        }
        if d_max + 2 > n {
            return Err(Error::domain(format!(
                "penalty undefined: n\u{2212}d\u{2212}1 \u{2264} 0 (n={n}, d={d_max})"
            )));
        }
        let ln_p1 = ((p - 1) as f64).ln();
        let values = (0..=d_max)
            .map(|d| 2.0 * (1.0 - gamma) * d as f64 * ln_p1)
            .collect();
        Ok(PenaltyTable {
            n,
            p,
            source: PenaltySource::Deflated { gamma },
            values,
        })
    }
}

/// Evaluates [`penalty`] for every `d` in `0..=d_max`.
pub fn build_penalty_table(n: usize, p: usize, k: f64, d_max: usize) -> Result<PenaltyTable> {
    if d_max + 2 > n {
        return Err(Error::domain(format!(
            "penalty undefined: n\u{2212}d\u{2212}1 \u{2264} 0 (n={n}, d={d_max})"
        )));
    }
    let values = (0..=d_max)
        .map(|d| penalty(n, p, k, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(PenaltyTable {
        n,
        p,
        source: PenaltySource::Fisher { k },
        values,
    })
}
