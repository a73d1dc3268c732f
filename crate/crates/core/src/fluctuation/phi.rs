use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{mean, std_error, Z95};

/// `Φ̂(q) = −log(mean of e^{−qΔτ})` with `Δτ` over unit local time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiTable {
    pub q: Vec<f64>,
    /// NaN where the sample mean underflowed.
    pub phi: Vec<f64>,
    pub ci: Vec<f64>,
    pub usable: Vec<bool>,
}

pub const MIN_SAMPLES: usize = 1000;

pub fn phi_estimate(dtau: &[f64], q_grid: &[f64]) -> Result<PhiTable> {
    if dtau.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!("need {MIN_SAMPLES} samples, got {}", dtau.len())));
    }
    if dtau.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("levy_samples", "Δτ must be nonnegative"));
    }
    if q_grid.iter().any(|q| !(*q > 0.0 && q.is_finite())) {
        return Err(invalid("q_grid", "must be positive and finite"));
    }
    let mut out = PhiTable { q: q_grid.to_vec(), phi: vec![], ci: vec![], usable: vec![] };
    let mut lt = vec![0.0; dtau.len()];
    for &q in q_grid {
        for (v, t) in lt.iter_mut().zip(dtau) {
            *v = (-q * t).exp();
        }
        let m = mean(&lt);
        let ok = m >= f64::MIN_POSITIVE;
        out.usable.push(ok);
        out.phi.push(if ok { -m.ln() } else { f64::NAN });
        out.ci.push(if ok { Z95 * std_error(&lt) / m } else { f64::NAN });
    }
    Ok(out)
}

impl PhiTable {
    /// Nondecreasing and concave on the usable grid points (relative slack 1e-9).
    /// Both hold exactly for the empirical Laplace exponent, so a failure
    /// means a bug, not noise.
    pub fn check_shape(&self) -> Result<()> {
        let pts: Vec<(f64, f64)> =
            self.q.iter().zip(&self.phi).zip(&self.usable).filter(|(_, u)| **u).map(|((q, p), _)| (*q, *p)).collect();
        let tol = |a: f64, b: f64| 1e-9 * a.abs().max(b.abs()).max(1e-300);
        let mut order = pts.clone();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in order.windows(2) {
            if w[1].1 < w[0].1 - tol(w[0].1, w[1].1) {
                return Err(Error::NonMonotone(format!("phi decreases between q = {} and {}", w[0].0, w[1].0)));
            }
        }
        for w in order.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            if s2 > s1 + tol(s1, s2) {
                return Err(Error::NonMonotone(format!("phi is not concave around q = {}", w[1].0)));
            }
        }
        Ok(())
    }

    /// Log-log OLS slope over usable points with `q ∈ [lo, hi]`.
    pub fn slope(&self, lo: f64, hi: f64) -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..self.q.len())
            .filter(|&j| self.usable[j] && self.q[j] >= lo && self.q[j] <= hi && self.phi[j] > 0.0)
            .map(|j| (self.q[j].ln(), self.phi[j].ln()))
            .unzip();
        if xs.len() < 3 {
            return Err(Error::InsufficientData(format!("{} usable points in [{lo}, {hi}]", xs.len())));
        }
        Ok(crate::numeric::ols(&xs, &ys).1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::Exp1;

    #[test]
    fn deterministic_tau() {
        let t = phi_estimate(&vec![2.5; 1000], &[0.1, 1.0, 3.0]).unwrap();
        for (q, p) in t.q.iter().zip(&t.phi) {
            assert!((p - 2.5 * q).abs() < 1e-12 * (1.0 + p));
        }
        t.check_shape().unwrap();
    }

    #[test]
    fn exponential_tau() {
        let mut rng = crate::rng::RngStream::new(5, 0);
        let s: Vec<f64> = (0..200_000).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let t = phi_estimate(&s, &[0.01, 0.1, 1.0, 10.0]).unwrap();
        for j in 0..4 {
            let want = (1.0 + t.q[j]).ln();
            assert!((t.phi[j] - want).abs() < 1.5 * t.ci[j] + 1e-12, "q={} {} vs {want}", t.q[j], t.phi[j]);
        }
        t.check_shape().unwrap();
    }

    #[test]
    fn underflow_is_flagged() {
        let t = phi_estimate(&vec![1e4; 1000], &[1.0, 1e-3]).unwrap();
        assert_eq!(t.usable, vec![false, true]);
        assert!(t.phi[0].is_nan());
        assert!(phi_estimate(&[1.0; 10], &[1.0]).is_err());
    }
}
