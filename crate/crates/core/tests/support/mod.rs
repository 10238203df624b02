//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the library's numerical kernels: tails come from
//! tanh-sinh quadrature of the Beta density (normalized by integrating it, so
//! no log-gamma is involved), least squares from Gaussian elimination on the
//! normal equations, and binomials from exact integer products.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use ggm_core::genmodel::Purpose;
use ggm_core::{RngSeed, Sample};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Tanh-sinh quadrature of `f` over `[a, b]`. `f` receives `(x, x - a, b - x)`
/// with both distances computed without cancellation, so integrable endpoint
/// singularities are harmless.
pub fn tanh_sinh(f: impl Fn(f64, f64, f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut h = 0.5_f64;
    let mut prev = f64::NAN;
    for _level in 0..12 {
        let mut sum = 0.0;
        let mut k = 0i64;
        loop {
            let t = k as f64 * h;
            let s = FRAC_PI_2 * t.sinh();
            let cosh_s = s.cosh();
            let w = FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
            // distance from the nearer endpoint: half * (1 - tanh|s|)
            let gap = half * 2.0 / ((2.0 * s.abs()).exp() + 1.0);
            if w * half < 1e-300 || gap <= 0.0 {
                break;
            }
            let off = half * s.tanh();
            let mut term = f(mid + off, half + off, gap) * w;
            if k > 0 {
                let x = mid - off;
                term += f(x, gap, half + off) * w;
            }
            if !term.is_finite() {
                break;
            }
            sum += term;
            if k > 0 && term.abs() < 1e-18 * sum.abs() {
                break;
            }
            k += 1;
        }
        let est = sum * h * half;
        if (est - prev).abs() <= 1e-15 * est.abs().max(1e-300) {
            return est;
        }
        prev = est;
        h *= 0.5;
    }
    prev
}

/// `I_t(a, b)` by quadrature of `u^{a-1} (1-u)^{b-1}` over `[0, t]` and `[0, 1]`.
///
/// For `t > 1/2` the complement is integrated instead.
pub fn beta_reg_quad(a: f64, b: f64, t: f64) -> f64 {
    let dens = |_: f64, from0: f64, to1: f64| from0.powf(a - 1.0) * to1.powf(b - 1.0);
    let total = tanh_sinh(dens, 0.0, 1.0);
    if t <= 0.5 {
        tanh_sinh(|x, from0, _| dens(x, from0, 1.0 - x), 0.0, t) / total
    } else {
        let upper = tanh_sinh(|x, _, to1| dens(x, x, to1), t, 1.0);
        1.0 - upper / total
    }
}

/// `P(F_{d,N} >= x)` by quadrature.
pub fn fisher_tail_quad(d: f64, n: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let t = n / (n + d * x);
    if t <= 0.5 {
        beta_reg_quad(n / 2.0, d / 2.0, t)
    } else {
        // 1 - I_{1-t}(d/2, N/2), evaluated on the short side
        1.0 - beta_reg_quad(d / 2.0, n / 2.0, d * x / (n + d * x))
    }
}

pub fn dkhi_quad(d: u32, n: u32, x: f64) -> f64 {
    let (df, nf) = (f64::from(d), f64::from(n));
    fisher_tail_quad(df + 2.0, nf, x / (df + 2.0))
        - x / df * fisher_tail_quad(df, nf + 2.0, (nf + 2.0) * x / (nf * df))
}

/// Plain bisection for `dkhi_quad(d, n, x) = q` on `[0, 2^k]`.
pub fn edkhi_bisect(d: u32, n: u32, q: f64) -> f64 {
    let mut hi = 1.0;
    while dkhi_quad(d, n, hi) > q {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dkhi_quad(d, n, mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as f64
}

pub fn penalty_oracle(n: usize, p: usize, k: f64, d: usize) -> f64 {
    let q = 1.0 / (binomial((p - 1) as u64, d as u64) * ((d + 1) * (d + 1)) as f64);
    if q >= 1.0 {
        return 0.0;
    }
    let x = edkhi_bisect((d + 1) as u32, (n - d - 1) as u32, q);
    k * (n - d) as f64 / (n - d - 1) as f64 * x
}

/// Solves `A z = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut z = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = ((r + 1)..k).map(|c| a[r][c] * z[c]).sum();
        z[r] = (b[r] - s) / a[r][r];
    }
    z
}

/// Least squares of column `j` on `hood` via the normal equations.
pub fn normal_equations(x: &DMatrix<f64>, j: usize, hood: &[usize]) -> (Vec<f64>, f64) {
    let k = hood.len();
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| x.column(hood[a]).dot(&x.column(hood[b]))).collect())
        .collect();
    let rhs: Vec<f64> = (0..k).map(|a| x.column(hood[a]).dot(&x.column(j))).collect();
    let coef = if k == 0 { vec![] } else { gauss_solve(gram, rhs) };
    let mut rss = 0.0;
    for r in 0..x.nrows() {
        let mut e = x[(r, j)];
        for (c, &i) in coef.iter().zip(hood) {
            e -= c * x[(r, i)];
        }
        rss += e * e;
    }
    (coef, rss)
}

/// Standard normal `n x p` sample from a dedicated stream.
pub fn noise_sample(n: usize, p: usize, seed: u64) -> Sample {
    let mut rng = RngSeed::new(seed).stream(Purpose::Sample, 9_999, 0);
    Sample::new(DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap()
}

/// Random sample with some correlation between neighbouring columns.
pub fn correlated_sample(n: usize, p: usize, seed: u64) -> Sample {
    let mut rng = RngSeed::new(seed).stream(Purpose::Sample, 9_998, 0);
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mix: f64 = rng.random_range(0.3..0.9);
    let x = DMatrix::from_fn(n, p, |r, c| {
        if c == 0 {
            z[(r, 0)]
        } else {
            z[(r, c)] + mix * z[(r, c - 1)]
        }
    });
    Sample::new(x).unwrap()
}

/// All subsets of `{0..p} \ {j}` with at most `d` elements, by bitmask.
pub fn brute_subsets(p: usize, j: usize, d: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << p))
        .filter(|m| m >> j & 1 == 0 && m.count_ones() as usize <= d)
        .map(|m| (0..p).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}
