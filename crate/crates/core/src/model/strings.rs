//! Strings `m^s`, `m^f` and the windowed tail-index checker.

use serde::{Deserialize, Serialize};

use super::ModelSpec;
use crate::error::{invalid, Error, Result};
use crate::numeric::ols;

/// `m^s(y) = m(s^{-1}(y))`, the image of the speed measure under the scale.
pub fn string_m_s(model: &ModelSpec, y: f64) -> Result<f64> {
    let x = model.scale.inverse(y);
    Ok(model.speed.cumulative(x))
}

/// `m^f(y) = ∫_0^{s^{-1}(y)} f(x) m(dx)`.
pub fn string_m_f(model: &ModelSpec, y: f64) -> Result<f64> {
    let x = model.scale.inverse(y);
    let f = &model.functional;
    model.speed.integrate(|v| f.eval(v), x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

/// Result of [`tail_index_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailIndex {
    /// Log-log slope over the top decade.
    pub index: f64,
    /// `log|string| - fit` at every sample, in the input order sorted by `|x|`.
    pub residuals: Vec<f64>,
    pub window: (f64, f64),
    /// Slope on the top decade minus slope on the decade below.
    pub drift: f64,
    /// Set when `|drift|` exceeds [`DRIFT_FLAG`]: the string is not a pure
    /// power at the sampled scales.
    pub drifting: bool,
}

pub const DRIFT_FLAG: f64 = 0.01;

/// Estimates the regular-variation index of a cumulative string from samples
/// `(x, value)` on one side of 0.
pub fn tail_index_check(samples: &[(f64, f64)], side: Side) -> Result<TailIndex> {
    if samples.len() < 20 {
        return Err(Error::InsufficientData(format!("need at least 20 samples, got {}", samples.len())));
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for &(x, v) in samples {
        let on_side = match side {
            Side::Plus => x > 0.0,
            Side::Minus => x < 0.0,
        };
        if !on_side || !x.is_finite() || !v.is_finite() {
            return Err(invalid("samples", format!("x = {x} is not on the claimed side")));
        }
        pts.push((x.abs(), v));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // m^s is negative left of 0 while m^f is positive there: only |value| matters
    let sign = pts[pts.len() - 1].1.signum();
    for w in pts.windows(2) {
        if sign * w[1].1 < sign * w[0].1 {
            return Err(Error::NonMonotone(format!("value decreases in |x| between {} and {}", w[0].0, w[1].0)));
        }
    }
    if pts.iter().any(|p| sign * p.1 <= 0.0) {
        return Err(Error::NonMonotone("string must be nonzero and keep one sign on the side".into()));
    }
    let (xmin, xmax) = (pts[0].0, pts[pts.len() - 1].0);
    if xmax / xmin < 1e3 * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!("samples span {:.2} decades, need 3", (xmax / xmin).log10())));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|(x, v)| (x.ln(), v.abs().ln())).collect();
    let fit_on = |lo: f64, hi: f64| -> Option<(f64, f64)> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            logs.iter().filter(|(lx, _)| *lx >= lo - 1e-12 && *lx <= hi + 1e-12).cloned().unzip();
        (xs.len() >= 3).then(|| ols(&xs, &ys))
    };
    let top = xmax.ln();
    let dec = 10f64.ln();
    let (a, b) = fit_on(top - dec, top)
        .ok_or_else(|| Error::InsufficientData("fewer than 3 samples in the top decade".into()))?;
    let drift = fit_on(top - 2.0 * dec, top - dec).map_or(0.0, |(_, b2)| b - b2);
    let residuals = logs.iter().map(|(lx, ly)| ly - (a + b * lx)).collect();
    Ok(TailIndex { index: b, residuals, window: (xmax / 10.0, xmax), drift, drifting: drift.abs() > DRIFT_FLAG })
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect();
    // pin the ends so grids never overshoot a horizon
    out[0] = lo;
    out[n - 1] = hi;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        log_space(1.0, 1e4, 41).into_iter().map(|x| (x, f(x))).collect()
    }

    #[test]
    fn exact_power() {
        let r = tail_index_check(&sample(|x| x.powf(1.5)), Side::Plus).unwrap();
        assert!((r.index - 1.5).abs() < 1e-12);
        assert!(r.residuals.iter().all(|e| e.abs() < 1e-10));
        assert!(!r.drifting);
    }

    #[test]
    fn log_correction_is_flagged() {
        let r = tail_index_check(&sample(|x| x * (x + 1.0).ln()), Side::Plus).unwrap();
        assert!((r.index - 1.0).abs() < 0.2);
        assert!(r.drifting, "drift = {}", r.drift);
    }

    #[test]
    fn minus_side_and_errors() {
        let neg: Vec<(f64, f64)> = sample(|x| x * x).into_iter().map(|(x, v)| (-x, -v)).collect();
        let r = tail_index_check(&neg, Side::Minus).unwrap();
        assert!((r.index - 2.0).abs() < 1e-12);
        assert!(tail_index_check(&neg, Side::Plus).is_err());
        let mut bad = sample(|x| x);
        bad[30].1 = 0.0;
        assert!(matches!(tail_index_check(&bad, Side::Plus), Err(Error::NonMonotone(_))));
        let short: Vec<(f64, f64)> = log_space(1.0, 10.0, 30).into_iter().map(|x| (x, x)).collect();
        assert!(matches!(tail_index_check(&short, Side::Plus), Err(Error::InsufficientData(_))));
    }
}
