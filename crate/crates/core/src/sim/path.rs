use std::io::{Read, Write};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ChainSpec;

/// A piecewise-constant trajectory: the chain enters `sites[k]` at `times[k]`
/// and stays there until `times[k + 1]` (or the horizon).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub times: Vec<f64>,
    pub sites: Vec<i32>,
    pub horizon: f64,
    pub touched_boundary: bool,
}

impl PathTrace {
    /// Builds a trace from explicit segments; `times[0]` must be 0.
    pub fn new(times: Vec<f64>, sites: Vec<i32>, horizon: f64) -> Result<Self> {
        if times.is_empty() || times.len() != sites.len() {
            return Err(invalid("times", "need one entry time per segment"));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("times", "must start at 0 and increase strictly"));
        }
        if !(horizon > 0.0) || *times.last().expect("nonempty") > horizon {
            return Err(invalid("horizon", "must be positive and not before the last jump"));
        }
        Ok(Self { times, sites, horizon, touched_boundary: false })
    }

    pub fn segments(&self) -> usize {
        self.times.len()
    }

    /// End time of segment `k`.
    pub fn segment_end(&self, k: usize) -> f64 {
        self.times.get(k + 1).copied().unwrap_or(self.horizon)
    }

    /// Writes one little-endian record per segment: entry time as `f64`,
    /// site index as `i32`.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        for (t, s) in self.times.iter().zip(&self.sites) {
            w.write_all(&t.to_le_bytes())?;
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read, horizon: f64) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() % 12 != 0 {
            return Err(Error::InvalidGrid("binary path length is not a multiple of 12".into()));
        }
        let (mut times, mut sites) = (Vec::new(), Vec::new());
        for rec in buf.chunks_exact(12) {
            times.push(f64::from_le_bytes(rec[..8].try_into().expect("8 bytes")));
            sites.push(i32::from_le_bytes(rec[8..].try_into().expect("4 bytes")));
        }
        Self::new(times, sites, horizon)
    }
}

/// Simulates the chain from `start_site` up to `horizon`.
pub fn sample_path<R: Rng + ?Sized>(
    chain: &ChainSpec,
    horizon: f64,
    start_site: usize,
    rng: &mut R,
) -> Result<PathTrace> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", "must be positive and finite"));
    }
    if start_site >= chain.len() {
        return Err(invalid("start_site", format!("{start_site} is outside the chain")));
    }
    let (up, rate) = (chain.up_prob(), chain.hold_rate());
    let last = chain.len() - 1;
    let mut i = start_site;
    let mut t = 0.0;
    let (mut times, mut sites) = (Vec::new(), Vec::new());
    let mut touched = false;
    loop {
        times.push(t);
        sites.push(i as i32);
        touched |= chain.len() > 1 && (i == 0 || i == last);
        t += rng.sample::<f64, _>(Exp1) / rate[i];
        if t >= horizon {
            break;
        }
        i = if rng.random::<f64>() < up[i] { i + 1 } else { i - 1 };
    }
    Ok(PathTrace { times, sites, horizon, touched_boundary: touched })
}

/// Outcome of a streamed first-passage run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassageOutcome {
    /// `None` when the barrier was not reached before the horizon.
    pub time: Option<f64>,
    /// The run hit an end site of the truncated chain and was abandoned.
    pub touched_boundary: bool,
    pub steps: u64,
}

/// First time `ζ_t = ζ_0 + ∫_0^t f(X_s) ds` reaches `barrier`, simulated
/// segment by segment without storing the path. The crossing time is exact
/// (linear inside the crossing segment).
pub fn first_passage<R: Rng + ?Sized>(
    chain: &ChainSpec,
    start_site: usize,
    zeta0: f64,
    barrier: f64,
    horizon: f64,
    rng: &mut R,
) -> PassageOutcome {
    let (up, rate, fv) = (chain.up_prob(), chain.hold_rate(), chain.f_values());
    let last = chain.len() - 1;
    let boundary = |i: usize| last > 0 && (i == 0 || i == last);
    let mut i = start_site;
    let mut t = 0.0f64;
    let mut zeta = zeta0;
    let mut steps = 0u64;
    loop {
        if boundary(i) {
            return PassageOutcome { time: None, touched_boundary: true, steps };
        }
        let h = rng.sample::<f64, _>(Exp1) / rate[i];
        let f = fv[i];
        steps += 1;
        let next = zeta + f * h;
        if f > 0.0 && next >= barrier {
            let cross = t + (barrier - zeta).max(0.0) / f;
            let time = (cross <= horizon).then_some(cross);
            return PassageOutcome { time, touched_boundary: false, steps };
        }
        t += h;
        if t >= horizon {
            return PassageOutcome { time: None, touched_boundary: false, steps };
        }
        zeta = next;
        i = if rng.random::<f64>() < up[i] { i + 1 } else { i - 1 };
    }
}
