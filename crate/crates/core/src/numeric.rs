//! Small numerical kernels shared by the model and estimator modules.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Pairwise (cascade) summation; the result depends only on the order of
/// `xs`, never on how the caller partitioned the work that produced them.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&dev) / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion; returns `(center, half_width)`.
pub fn wilson(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    (center, half)
}

/// Ordinary least squares line `y = a + b x`; returns `(a, b)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let w = vec![1.0; xs.len()];
    wls(xs, ys, &w)
}

/// Weighted least squares line; returns `(intercept, slope)`.
pub fn wls(xs: &[f64], ys: &[f64], ws: &[f64]) -> (f64, f64) {
    let coef = wls_coefficients(xs, ws);
    let a = coef.iter().zip(ys).map(|((ca, _), y)| ca * y).sum();
    let b = coef.iter().zip(ys).map(|((_, cb), y)| cb * y).sum();
    (a, b)
}

/// Linear coefficients `(c_a, c_b)` such that the WLS intercept and slope are
/// `Σ c_a[i] y[i]` and `Σ c_b[i] y[i]`. Used to propagate correlated errors.
pub fn wls_coefficients(xs: &[f64], ws: &[f64]) -> Vec<(f64, f64)> {
    let sw: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - xbar) * (x - xbar)).sum();
    xs.iter()
        .zip(ws)
        .map(|(x, w)| {
            let cb = w * (x - xbar) / sxx;
            let ca = w / sw - xbar * cb;
            (ca, cb)
        })
        .collect()
}

/// Median of a slice (NaN for empty input).
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Solves a tridiagonal system with the Thomas algorithm.
/// `lower[i]` multiplies `x[i-1]`, `upper[i]` multiplies `x[i+1]`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

const GL_ORDER: usize = 20;

fn gauss_legendre() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

/// Fixed-order Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// `∫_0^x f(v) dv` for `f` smooth away from 0 with at most a power-type
/// singularity at 0. The interval is cut into dyadic panels shrinking towards
/// 0; panel contributions of an integrable singularity decay geometrically,
/// otherwise the refinement diverges and [`Error::NonIntegrable`] is returned.
pub fn integrate_from_zero(f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < 0.0 {
        return integrate_positive(&|u: f64| f(-u), -x).map(|v| -v);
    }
    integrate_positive(&f, x)
}

fn integrate_positive(f: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    const MAX_PANELS: usize = 6000;
    let mut sum = 0.0;
    let mut hi = x;
    let mut prev: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut non_decay = 0usize;
    for k in 0..MAX_PANELS {
        let lo = hi * 0.5;
        let piece = gauss_legendre_panel(&f, lo, hi);
        if !piece.is_finite() {
            return Err(Error::NonIntegrable);
        }
        sum += piece;
        hi = lo;
        if let Some(p) = prev {
            if piece.abs() <= 1e-17 * sum.abs().max(f64::MIN_POSITIVE) || piece == 0.0 {
                if p.abs() <= 1e-15 * sum.abs() {
                    return Ok(sum);
                }
            }
            if p != 0.0 {
                let r = piece / p;
                if r.abs() >= 1.0 - 1e-9 {
                    non_decay += 1;
                    if k > 60 && non_decay > 40 {
                        return Err(Error::NonIntegrable);
                    }
                } else {
                    non_decay = 0;
                    if let Some(pr) = prev_ratio {
                        // ratio stable -> geometric tail
                        if k > 40 && (r - pr).abs() < 1e-9 && r > 0.0 {
                            let tail = piece * r / (1.0 - r);
                            if tail.abs() <= 1e-13 * sum.abs() || (r - pr).abs() < 1e-12 {
                                return Ok(sum + tail);
                            }
                        }
                    }
                }
                prev_ratio = Some(r);
            }
        }
        prev = Some(piece);
        if hi < f64::MIN_POSITIVE * 1e10 {
            break;
        }
    }
    match prev_ratio {
        Some(r) if r.abs() < 1.0 - 1e-6 => Ok(sum + prev.unwrap_or(0.0) * r / (1.0 - r)),
        _ => Err(Error::NonIntegrable),
    }
}

/// Inverts a strictly increasing continuous map by bracketing and bisection.
pub fn invert_increasing(f: impl Fn(f64) -> f64, y: f64) -> f64 {
    if y == 0.0 && f(0.0) == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(lo) > y {
        lo *= 2.0;
        if lo < -1e300 {
            return f64::NEG_INFINITY;
        }
    }
    while f(hi) < y {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&xs), 249_750.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let v = gauss_legendre_panel(&|x: f64| x.powi(7) + 3.0 * x * x, 0.0, 2.0);
        assert!((v - (256.0 / 8.0 + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn integrable_power_singularity() {
        // ∫_0^2 x^{-1/2} dx = 2 sqrt(2)
        let v = integrate_from_zero(|x: f64| x.powf(-0.5), 2.0).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-10, "{v}");
        let w = integrate_from_zero(|x: f64| x.abs().powf(-0.9), -3.0).unwrap();
        assert!((w + 10.0 * 3f64.powf(0.1)).abs() < 1e-8, "{w}");
    }

    #[test]
    fn non_integrable_singularity_is_detected() {
        assert!(matches!(integrate_from_zero(|x: f64| 1.0 / x, 1.0), Err(Error::NonIntegrable)));
        assert!(matches!(
            integrate_from_zero(|x: f64| x.powf(-1.3), 1.0),
            Err(Error::NonIntegrable)
        ));
    }

    #[test]
    fn smooth_integrand() {
        let v = integrate_from_zero(|x: f64| (-x * x).exp(), 3.0).unwrap();
        let exact = 0.5 * std::f64::consts::PI.sqrt() * statrs::function::erf::erf(3.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn thomas_solves_small_system() {
        let x = solve_tridiagonal(&[0.0, 1.0, 1.0], &[2.0, 2.0, 2.0], &[1.0, 1.0, 0.0], &[3.0, 4.0, 3.0]);
        for (a, b) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn wilson_contains_proportion() {
        let (c, h) = wilson(30, 100, Z95);
        assert!(c - h < 0.3 && 0.3 < c + h);
    }

    #[test]
    fn ks_same_sample_is_zero() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let (d, p) = ks_two_sample(&a, &a);
        assert_eq!(d, 0.0);
        assert!(p > 0.99);
    }
}
