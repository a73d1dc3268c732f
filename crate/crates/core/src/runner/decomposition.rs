use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functional::compute_trace;
use crate::model::ChainSpec;
use crate::numeric::{mean, std_error};
use crate::parallel::run_replicas;
use crate::sim::sample_path;

/// Both sides of `P(ξ_e < z) = P(ξ_{g_e} < z) P(Δ_e ≤ 0) + P(ξ_{g_e} + Δ_e < z, Δ_e ∈ (0, z))`
/// at an independent `e ~ Exp(q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`.
    pub diff: f64,
    /// Standard error of `diff` (delta method).
    pub sigma: f64,
    pub p_xi_g: f64,
    pub p_delta_nonpositive: f64,
    pub replicas: usize,
    pub excluded_boundary: usize,
}

impl DecompositionCheck {
    pub fn within(&self, sigmas: f64) -> bool {
        self.diff.abs() <= sigmas * self.sigma
    }
}

struct Indicators {
    a: f64,
    b: f64,
    c: f64,
    e: f64,
}

pub fn decomposition_check(
    chain: &ChainSpec,
    q: f64,
    z: f64,
    replicas: u64,
    workers: usize,
    seed: u64,
) -> Result<DecompositionCheck> {
    if !(q > 0.0 && q.is_finite()) || !(z > 0.0) {
        return Err(invalid("q/z", "need q > 0 and z > 0"));
    }
    let zero = chain.zero_index();
    let rows = run_replicas(replicas, workers, seed, |_, rng| -> Result<Option<Indicators>> {
        let e = rng.sample::<f64, _>(Exp1) / q;
        let path = sample_path(chain, e, zero, rng)?;
        if path.touched_boundary {
            return Ok(None);
        }
        let tr = compute_trace(&path, chain.f_values(), zero as i32, chain.zero_mass())?;
        let d = tr.decomposition(e)?;
        let ind = |b: bool| b as u8 as f64;
        Ok(Some(Indicators {
            a: ind(d.xi_t < z),
            b: ind(d.xi_g < z),
            c: ind(d.delta_t <= 0.0),
            e: ind(d.xi_g + d.delta_t < z && d.delta_t > 0.0 && d.delta_t < z),
        }))
    })?;
    let mut kept = Vec::with_capacity(rows.len());
    for r in rows {
        if let Some(i) = r? {
            kept.push(i);
        }
    }
    let excluded = replicas as usize - kept.len();
    if kept.len() < 100 {
        return Err(Error::InsufficientData(format!("{} usable replicas", kept.len())));
    }
    let col = |f: fn(&Indicators) -> f64| kept.iter().map(f).collect::<Vec<f64>>();
    let (a, b, c, e) = (col(|i| i.a), col(|i| i.b), col(|i| i.c), col(|i| i.e));
    let (ma, mb, mc, me) = (mean(&a), mean(&b), mean(&c), mean(&e));
    let infl: Vec<f64> = (0..kept.len()).map(|i| a[i] - mc * b[i] - mb * c[i] - e[i]).collect();
    let rhs = mb * mc + me;
    Ok(DecompositionCheck {
        lhs: ma,
        rhs,
        diff: ma - rhs,
        sigma: std_error(&infl),
        p_xi_g: mb,
        p_delta_nonpositive: mc,
        replicas: kept.len(),
        excluded_boundary: excluded,
    })
}
