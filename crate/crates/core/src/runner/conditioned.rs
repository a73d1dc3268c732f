use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{invalid, Error, Result};
use crate::functional::compute_trace;
use crate::model::ChainSpec;
use crate::parallel::{run_range, run_replicas};
use crate::rng::derive_seed;
use crate::sim::{first_passage, sample_path};

/// Smallest pilot acceptance estimate the sampler will accept.
pub const MIN_ACCEPTANCE: f64 = 1e-5;

const PILOT_SALT: u64 = 5;
const SAMPLE_SALT: u64 = 6;

/// One accepted path at its breakpoints (plus the endpoint `t_target`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `sup ζ` over `[0, t_target]`.
    pub xi_max: f64,
}

impl Trajectory {
    /// CSV with columns `t, X, zeta`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "X", "zeta"])?;
        for k in 0..self.t.len() {
            wr.write_record(&[self.t[k].to_string(), self.x[k].to_string(), self.zeta[k].to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionedSample {
    pub t_target: f64,
    pub z: f64,
    /// Pilot estimate of `P(T_z > t_target)`.
    pub pilot_estimate: f64,
    pub attempts: u64,
    pub accepted: usize,
    pub acceptance_rate: f64,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

/// Rejection sampling of zero-start paths on `{T_z > t_target}`. A pilot of
/// `pilot_replicas` first-passage runs guards against hopeless targets.
pub fn sample_conditioned_trajectories(
    config: &ExperimentConfig,
    t_target: f64,
    count: usize,
) -> Result<ConditionedSample> {
    let chain = config.validate()?;
    let (z, pilot) = config.conditioned.map_or((1.0, 100_000), |c| (c.z, c.pilot_replicas));
    sample_on_chain(&chain, z, t_target, count, pilot, config.workers, config.seed)
}

pub(crate) fn sample_on_chain(
    chain: &ChainSpec,
    z: f64,
    t_target: f64,
    count: usize,
    pilot_replicas: u64,
    workers: usize,
    seed: u64,
) -> Result<ConditionedSample> {
    if !(t_target >= 0.0 && t_target.is_finite()) || !(z > 0.0) || count == 0 {
        return Err(invalid("t_target", "need t_target >= 0, z > 0 and count >= 1"));
    }
    let zero = chain.zero_index();
    if t_target == 0.0 {
        let x0 = chain.sites()[zero];
        let tr = Trajectory { t: vec![0.0], x: vec![x0], zeta: vec![0.0], xi_max: 0.0 };
        return Ok(ConditionedSample {
            t_target,
            z,
            pilot_estimate: 1.0,
            attempts: count as u64,
            accepted: count,
            acceptance_rate: 1.0,
            trajectories: vec![tr; count],
        });
    }
    if pilot_replicas == 0 {
        return Err(invalid("pilot_replicas", "must be positive"));
    }
    let pilot = run_replicas(pilot_replicas, workers, derive_seed(seed, PILOT_SALT), |_, rng| {
        first_passage(chain, zero, 0.0, z, t_target, rng)
    })?;
    let kept: Vec<Option<f64>> = pilot.iter().filter(|o| !o.touched_boundary).map(|o| o.time).collect();
    let n = kept.len() as u64;
    let survivors = kept.iter().filter(|t| t.is_none()).count() as u64;
    let estimate = if n > 0 { survivors as f64 / n as f64 } else { 0.0 };
    if estimate < MIN_ACCEPTANCE {
        let need = ((MIN_ACCEPTANCE * n as f64).ceil() as u64).max(1);
        let mut crossed: Vec<f64> = kept.iter().flatten().copied().collect();
        crossed.sort_by(|a, b| a.total_cmp(b));
        // S(t) ≥ need/n as long as at most n - need replicas crossed by t
        let largest = n.checked_sub(need).and_then(|k| crossed.get(k as usize)).copied();
        return Err(Error::AcceptanceTooSmall { t_target, min: MIN_ACCEPTANCE, largest_feasible: largest });
    }
    let sites = chain.sites();
    let f = chain.f_values();
    let m = chain.zero_mass();
    let batch = ((count as f64 / estimate * 1.2).ceil() as u64).clamp(count as u64, 1 << 20);
    let max_attempts = ((100.0 * count as f64 / estimate).ceil() as u64).max(batch);
    let mut accepted = Vec::with_capacity(count);
    let mut hits = 0u64;
    let mut next = 0u64;
    while accepted.len() < count {
        if next >= max_attempts {
            return Err(Error::InsufficientData(format!(
                "{} of {count} accepted after {next} attempts",
                accepted.len()
            )));
        }
        let got = run_range(next..next + batch, workers, derive_seed(seed, SAMPLE_SALT), |_, rng| {
            attempt(chain, sites, f, m, z, t_target, rng)
        })?;
        next += batch;
        for r in got {
            let tr = r?;
            if let Some(tr) = tr {
                hits += 1;
                if accepted.len() < count {
                    accepted.push(tr);
                }
            }
        }
    }
    Ok(ConditionedSample {
        t_target,
        z,
        pilot_estimate: estimate,
        attempts: next,
        accepted: count,
        acceptance_rate: hits as f64 / next as f64,
        trajectories: accepted,
    })
}

fn attempt<R: Rng + ?Sized>(
    chain: &ChainSpec,
    sites: &[f64],
    f: &[f64],
    m: f64,
    z: f64,
    t_target: f64,
    rng: &mut R,
) -> Result<Option<Trajectory>> {
    let path = sample_path(chain, t_target, chain.zero_index(), rng)?;
    if path.touched_boundary {
        return Ok(None);
    }
    let tr = compute_trace(&path, f, chain.zero_index() as i32, m)?;
    if tr.first_passage(z).is_some() {
        return Ok(None);
    }
    let x = tr.t.iter().enumerate().map(|(k, _)| sites[tr.site[k.min(tr.site.len() - 1)] as usize]).collect();
    let xi_max = *tr.xi.last().expect("nonempty");
    Ok(Some(Trajectory { t: tr.t.clone(), x, zeta: tr.zeta.clone(), xi_max }))
}
