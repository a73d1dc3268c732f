//! Continuous-time birth–death chains.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::solve_tridiagonal;

/// A birth–death chain on sorted sites with reflecting end sites.
///
/// From site `i` the chain holds an `Exp(hold_rate[i])` time, then moves to
/// `i + 1` with probability `up_prob[i]`, otherwise to `i - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    sites: Vec<f64>,
    up_prob: Vec<f64>,
    hold_rate: Vec<f64>,
    f_values: Vec<f64>,
    zero_index: usize,
    zero_mass: f64,
}

impl ChainSpec {
    /// `zero_mass` is the local-time normalization `m` at site 0.
    pub fn new(
        sites: Vec<f64>,
        up_prob: Vec<f64>,
        hold_rate: Vec<f64>,
        f_values: Vec<f64>,
        zero_mass: f64,
    ) -> Result<Self> {
        let n = sites.len();
        if up_prob.len() != n || hold_rate.len() != n || f_values.len() != n {
            return Err(Error::InvalidGrid("per-site arrays must have equal length".into()));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("chain has no sites".into()));
        }
        if sites.windows(2).any(|w| w[1] <= w[0]) || sites.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidGrid("sites must be finite and strictly increasing".into()));
        }
        let zero_index = sites
            .iter()
            .position(|s| *s == 0.0)
            .ok_or_else(|| Error::InvalidGrid("0 must be a site".into()))?;
        if n > 1 {
            if up_prob[0] != 1.0 || up_prob[n - 1] != 0.0 {
                return Err(invalid("up_prob", "end sites must reflect (p = 1 at the bottom, p = 0 at the top)"));
            }
            for (i, p) in up_prob.iter().enumerate().take(n - 1).skip(1) {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(invalid("up_prob", format!("p[{i}] = {p} must lie in (0, 1)")));
                }
            }
        }
        for (i, r) in hold_rate.iter().enumerate() {
            if !(*r > 0.0 && r.is_finite()) {
                return Err(invalid("hold_rate", format!("rate[{i}] = {r} must be positive and finite")));
            }
        }
        for (x, v) in sites.iter().zip(&f_values) {
            if !v.is_finite() || (*x > 0.0 && *v < 0.0) || (*x < 0.0 && *v > 0.0) || (*x == 0.0 && *v != 0.0) {
                return Err(invalid("f_values", format!("f({x}) = {v} does not preserve the sign")));
            }
        }
        if !(zero_mass > 0.0 && zero_mass.is_finite()) {
            return Err(invalid("zero_mass", "must be positive and finite"));
        }
        Ok(Self { sites, up_prob, hold_rate, f_values, zero_index, zero_mass })
    }

    /// Bessel-like walk on `{-N, ..., N}` with unit holding rate:
    /// `p_i = ½(1 - (μ + ε_i)/(2i))` for `i ≥ 1`, `p_{-i} = 1 - p_i`, `p_0 = ½`.
    /// `epsilon[k]` is `ε_{k+1}`; missing entries are 0.
    pub fn bessel_walk(mu: f64, epsilon: &[f64], half_width: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let probs = bessel_walk_probs(mu, epsilon, half_width)?;
        let n = 2 * half_width + 1;
        let sites: Vec<f64> = (0..n).map(|k| k as f64 - half_width as f64).collect();
        let mut up = probs;
        up[0] = 1.0;
        up[n - 1] = 0.0;
        let f_values = sites.iter().map(|x| f(*x)).collect();
        Self::new(sites, up, vec![1.0; n], f_values, 1.0)
    }

    /// Unit-rate simple random walk on `{-N, ..., N}`.
    pub fn srw(half_width: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::bessel_walk(0.0, &[], half_width, f)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[f64] {
        &self.sites
    }

    pub fn up_prob(&self) -> &[f64] {
        &self.up_prob
    }

    pub fn hold_rate(&self) -> &[f64] {
        &self.hold_rate
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    /// Local-time normalization `m`: `L_t = (time at 0) / m`.
    pub fn zero_mass(&self) -> f64 {
        self.zero_mass
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.sites.len() > 1 && (i == 0 || i == self.sites.len() - 1)
    }

    /// Excursions leave 0 at this rate per unit local time.
    pub fn excursion_rate(&self) -> f64 {
        if self.sites.len() == 1 {
            0.0
        } else {
            self.hold_rate[self.zero_index] * self.zero_mass
        }
    }

    /// Index of the site equal to `x`, if any.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.sites.iter().position(|s| *s == x)
    }

    /// Stationary (reversible) measure normalized to a probability vector,
    /// from detailed balance `π_i λ_i p_i = π_{i+1} λ_{i+1} q_{i+1}`.
    pub fn stationary_distribution(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        // work in logs so long chains do not overflow
        let mut lw = vec![0.0f64; n];
        for i in 0..n.saturating_sub(1) {
            let flow = self.hold_rate[i] * self.up_prob[i];
            let back = self.hold_rate[i + 1] * (1.0 - self.up_prob[i + 1]);
            lw[i + 1] = lw[i] + flow.ln() - back.ln();
        }
        let mx = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..n {
            w[i] = (lw[i] - mx).exp();
        }
        let total = crate::numeric::pairwise_sum(&w);
        w.iter().map(|v| v / total).collect()
    }

    /// Probability of reaching site `hi` before site `lo` from `start`
    /// (`lo < start < hi`, indices), by the harmonic tridiagonal solve.
    pub fn exit_probability(&self, lo: usize, hi: usize, start: usize) -> Result<f64> {
        let h = self.harmonic(lo, hi)?;
        if start < lo || start > hi {
            return Err(invalid("start", "must lie between lo and hi"));
        }
        Ok(h[start - lo])
    }

    /// Expected time to leave `(lo, hi)` from `start`.
    pub fn expected_exit_time(&self, lo: usize, hi: usize, start: usize) -> Result<f64> {
        if !(lo < hi && hi < self.len()) || hi - lo < 2 || start < lo || start > hi {
            return Err(invalid("lo/hi", "need lo < start < hi inside the chain with an interior"));
        }
        let k = hi - lo - 1;
        let (mut a, mut b, mut c) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        let r = vec![-1.0; k];
        for j in 0..k {
            let i = lo + 1 + j;
            let (lam, p) = (self.hold_rate[i], self.up_prob[i]);
            a[j] = lam * (1.0 - p);
            b[j] = -lam;
            c[j] = lam * p;
        }
        a[0] = 0.0;
        c[k - 1] = 0.0;
        let sol = solve_tridiagonal(&a, &b, &c, &r);
        Ok(if start == lo || start == hi { 0.0 } else { sol[start - lo - 1] })
    }

    fn harmonic(&self, lo: usize, hi: usize) -> Result<Vec<f64>> {
        if !(lo < hi && hi < self.len()) {
            return Err(invalid("lo/hi", "need lo < hi inside the chain"));
        }
        let k = hi - lo - 1;
        let mut h = vec![0.0; hi - lo + 1];
        h[hi - lo] = 1.0;
        if k == 0 {
            return Ok(h);
        }
        let (mut a, mut b, mut c, mut r) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for j in 0..k {
            let p = self.up_prob[lo + 1 + j];
            a[j] = 1.0 - p;
            b[j] = -1.0;
            c[j] = p;
        }
        r[k - 1] = -c[k - 1];
        a[0] = 0.0;
        c[k - 1] = 0.0;
        let sol = solve_tridiagonal(&a, &b, &c, &r);
        h[1..=k].copy_from_slice(&sol);
        Ok(h)
    }
}

/// Up-probabilities of the Bessel-like walk on `{-N, ..., N}` (index `k` is site `k - N`).
pub(crate) fn bessel_walk_probs(mu: f64, epsilon: &[f64], half_width: usize) -> Result<Vec<f64>> {
    if half_width < 2 {
        return Err(invalid("half_width", "must be at least 2"));
    }
    if !mu.is_finite() {
        return Err(invalid("mu", "must be finite"));
    }
    let n = 2 * half_width + 1;
    let mut p = vec![0.5; n];
    for i in 1..=half_width {
        let eps = epsilon.get(i - 1).copied().unwrap_or(0.0);
        let pi = 0.5 * (1.0 - (mu + eps) / (2.0 * i as f64));
        if !(pi > 0.0 && pi < 1.0) {
            return Err(invalid("mu", format!("p_{i} = {pi} must lie in (0, 1); need |mu + eps_i| < 2i")));
        }
        p[half_width + i] = pi;
        p[half_width - i] = 1.0 - pi;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn srw_is_fair() {
        let c = ChainSpec::srw(10, |x| x).unwrap();
        for i in 1..c.len() - 1 {
            assert_eq!(c.up_prob()[i], 0.5);
        }
        assert_eq!(c.zero_index(), 10);
        assert_eq!(c.excursion_rate(), 1.0);
        // gambler's ruin from the middle of [-3, 3]
        let p = c.exit_probability(7, 13, 10).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        let p = c.exit_probability(10, 14, 11).unwrap();
        assert!((p - 0.25).abs() < 1e-14);
        // E[exit time] of SRW from (-a, a) at rate 1 is a²
        let e = c.expected_exit_time(7, 13, 10).unwrap();
        assert!((e - 9.0).abs() < 1e-11);
    }

    #[test]
    fn bessel_walk_probabilities() {
        let c = ChainSpec::bessel_walk(0.4, &[], 5, |x: f64| if x == 0.0 { 0.0 } else { x.signum() }).unwrap();
        let p1 = c.up_prob()[6];
        assert!((p1 - 0.5 * (1.0 - 0.2)).abs() < 1e-15);
        assert!((c.up_prob()[4] - (1.0 - p1)).abs() < 1e-15);
        assert_eq!(c.up_prob()[5], 0.5);
        assert!(ChainSpec::bessel_walk(2.5, &[], 5, |x| x).is_err());
    }

    #[test]
    fn rejects_bad_chains() {
        assert!(ChainSpec::new(vec![-1.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![-1.0, 1.0], 1.0).is_err());
        assert!(ChainSpec::new(vec![-1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0], vec![1.0; 3], vec![-1.0, 0.0, 1.0], 1.0)
            .is_err());
        assert!(ChainSpec::new(vec![-1.0, 0.0, 1.0], vec![1.0, 0.5, 0.0], vec![1.0; 3], vec![1.0, 0.0, 1.0], 1.0)
            .is_err());
        assert!(ChainSpec::new(vec![0.0], vec![0.5], vec![1.0], vec![0.0], 1.0).is_ok());
    }

    #[test]
    fn stationary_is_balanced() {
        let c = ChainSpec::bessel_walk(1.5, &[], 30, |x| x).unwrap();
        let pi = c.stationary_distribution();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..c.len() - 1 {
            let l = pi[i] * c.hold_rate()[i] * c.up_prob()[i];
            let r = pi[i + 1] * c.hold_rate()[i + 1] * (1.0 - c.up_prob()[i + 1]);
            assert!((l - r).abs() < 1e-14 * l.max(1e-300));
        }
    }
}
