use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ChainSpec;
use crate::numeric::{mean, std_error, Z95};
use crate::parallel::run_replicas;
use crate::sim::{run_excursion, ExcursionLimits};

/// `−ln 1e−12`: beyond this both exponentials in the integrand are negligible.
pub const TAIL_CUTOFF: f64 = 27.631_021_115_928_547;

/// Log-spaced local-time grid for the quadrature in `u = ln t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
}

impl KappaGrid {
    /// `t_max` from a pilot `Φ̂(q_min)` so that `e^{−t}` and `e^{−q τ_t}` are
    /// both below 1e−12 at the end of the grid.
    pub fn for_phi(phi_q_min: f64) -> Self {
        Self { t_min: 1e-4, t_max: TAIL_CUTOFF.max(TAIL_CUTOFF / phi_q_min), points_per_decade: 64 }
    }

    pub fn points(&self) -> Vec<f64> {
        let decades = (self.t_max / self.t_min).log10();
        let n = ((decades * self.points_per_decade as f64).ceil() as usize).max(1) + 1;
        crate::model::log_space(self.t_min, self.t_max, n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaTable {
    pub q: Vec<f64>,
    /// `log(κ̂₊(q)/c)`.
    pub log_kappa_plus: Vec<f64>,
    pub log_kappa_minus: Vec<f64>,
    /// 95% half-widths on the log scale.
    pub ci_plus: Vec<f64>,
    pub ci_minus: Vec<f64>,
    /// Bound on the neglected `∫_0^{t_min}`.
    pub head_bound: Vec<f64>,
    /// Bound on the neglected `∫_{t_max}^∞`.
    pub tail_bound: Vec<f64>,
    /// Some truncation bound exceeds the tolerance.
    pub flagged: bool,
    pub grid: KappaGrid,
    pub replicas: usize,
    /// Excursions cut by the hard step cap (not by the settling rule).
    pub capped_excursions: u64,
    pub touched_boundary: u64,
}

impl KappaTable {
    pub fn kappa_plus(&self) -> Vec<f64> {
        self.log_kappa_plus.iter().map(|v| v.exp()).collect()
    }

    pub fn kappa_minus(&self) -> Vec<f64> {
        self.log_kappa_minus.iter().map(|v| v.exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSettings {
    pub grid: KappaGrid,
    pub replicas: u64,
    pub workers: usize,
    pub seed: u64,
    /// Tolerance on head + tail bound (log scale).
    pub tolerance: f64,
    pub limits: ExcursionLimits,
}

/// Per-replica quadrature of `∫ (e^{−t} − e^{−qτ_t}) 1{Z_t ≥ 0} dt/t` (and the
/// `Z_t < 0` twin) on the grid, averaged over replicas.
///
/// `phi` is `Φ̂` on `q_grid`, used only for the truncation bounds. A replica
/// stops once `t ≥ TAIL_CUTOFF` and `q_min τ_t ≥ TAIL_CUTOFF`. An excursion is
/// cut once it outlasts the remaining `τ` budget and the sign of `Z` after it
/// can no longer change, since nothing later in the integrand depends on it.
pub fn kappa_estimate(chain: &ChainSpec, q_grid: &[f64], phi: &[f64], s: &KappaSettings) -> Result<KappaTable> {
    if q_grid.is_empty() || q_grid.iter().any(|q| !(*q > 0.0 && q.is_finite())) {
        return Err(invalid("q_grid", "must be nonempty, positive and finite"));
    }
    if phi.len() != q_grid.len() {
        return Err(invalid("phi", "need one value per q"));
    }
    if s.replicas < 2 {
        return Err(invalid("replicas", "need at least 2"));
    }
    if !(s.grid.t_min > 0.0 && s.grid.t_max > s.grid.t_min) {
        return Err(invalid("grid", "need 0 < t_min < t_max"));
    }
    let t = s.grid.points();
    let w = trapezoid_log_weights(&t);
    let q_min = q_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let per = run_replicas(s.replicas, s.workers, s.seed, |_, rng| replica(chain, q_grid, q_min, &t, &w, &s.limits, rng))?;
    let nq = q_grid.len();
    let mut out = KappaTable {
        q: q_grid.to_vec(),
        log_kappa_plus: Vec::with_capacity(nq),
        log_kappa_minus: Vec::with_capacity(nq),
        ci_plus: Vec::with_capacity(nq),
        ci_minus: Vec::with_capacity(nq),
        head_bound: Vec::with_capacity(nq),
        tail_bound: Vec::with_capacity(nq),
        flagged: false,
        grid: s.grid,
        replicas: per.len(),
        capped_excursions: per.iter().map(|r| r.capped).sum(),
        touched_boundary: per.iter().map(|r| r.touched).sum(),
    };
    for j in 0..nq {
        let plus: Vec<f64> = per.iter().map(|r| r.plus[j]).collect();
        let minus: Vec<f64> = per.iter().map(|r| r.minus[j]).collect();
        out.log_kappa_plus.push(mean(&plus));
        out.log_kappa_minus.push(mean(&minus));
        out.ci_plus.push(Z95 * std_error(&plus));
        out.ci_minus.push(Z95 * std_error(&minus));
        // |e^{−t} − e^{−qτ_t}| ≤ t + qτ_t and E[1 − e^{−qτ_t}] = 1 − e^{−tΦ} ≤ tΦ
        let head = s.grid.t_min * (1.0 + phi[j]);
        let big_t = s.grid.t_max;
        let tail = ((-big_t).exp() + (-big_t * phi[j]).exp() / phi[j]) / big_t;
        out.flagged |= !(head + tail <= s.tolerance);
        out.head_bound.push(head);
        out.tail_bound.push(tail);
    }
    Ok(out)
}

/// Trapezoid weights for `∫ g(t) dt/t = ∫ g(e^u) du` on the grid.
fn trapezoid_log_weights(t: &[f64]) -> Vec<f64> {
    let u: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let n = u.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let h = 0.5 * (u[k + 1] - u[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

struct ReplicaIntegrals {
    plus: Vec<f64>,
    minus: Vec<f64>,
    capped: u64,
    touched: u64,
}

fn replica<R: Rng + ?Sized>(
    chain: &ChainSpec,
    q: &[f64],
    q_min: f64,
    t: &[f64],
    w: &[f64],
    limits: &ExcursionLimits,
    rng: &mut R,
) -> ReplicaIntegrals {
    let m = chain.zero_mass();
    let rate = chain.excursion_rate();
    let mut out = ReplicaIntegrals { plus: vec![0.0; q.len()], minus: vec![0.0; q.len()], capped: 0, touched: 0 };
    let tau_stop = TAIL_CUTOFF / q_min;
    let mut next = rng.sample::<f64, _>(Exp1) / rate;
    let (mut lengths, mut z) = (0.0f64, 0.0f64);
    for (k, &tk) in t.iter().enumerate() {
        while next <= tk {
            let remaining = tau_stop - (m * next + lengths);
            let z0 = z;
            let e = run_excursion(
                chain,
                limits,
                rng,
                |len, area| len >= remaining && ((area > 0.0 && z0 + area >= 0.0) || (area < 0.0 && z0 + area < 0.0)),
                |_, _| {},
            );
            lengths += e.length;
            z += e.area;
            out.capped += (e.censored && e.steps >= limits.max_steps) as u64;
            out.touched += e.touched_boundary as u64;
            next += rng.sample::<f64, _>(Exp1) / rate;
        }
        let tau = m * tk + lengths;
        let et = (-tk).exp();
        let acc = if z >= 0.0 { &mut out.plus } else { &mut out.minus };
        for (a, qj) in acc.iter_mut().zip(q) {
            *a += w[k] * (et - (-qj * tau).exp());
        }
        if tk >= TAIL_CUTOFF && q_min * tau >= TAIL_CUTOFF {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_weights_integrate_dt_over_t_exactly_for_constants() {
        let t = KappaGrid { t_min: 1e-3, t_max: 1e2, points_per_decade: 16 }.points();
        let w = trapezoid_log_weights(&t);
        let s: f64 = w.iter().sum();
        assert!((s - (1e5f64).ln()).abs() < 1e-12);
    }
}
