use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ladder_heights, AreaWalk};
use crate::error::{invalid, Error, Result};
use crate::model::ChainSpec;
use crate::numeric::{mean, ols, std_error, Z95};
use crate::sim::{run_excursion, ExcursionLimits};

pub const DEFAULT_LADDER_COUNT: usize = 64;

/// Ladder heights of one walk (with `H_0 = 0`) and whether they settle
/// `#{H ≤ z}` among the first `k` for every `z ≤ z_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRecord {
    pub heights: Vec<f64>,
    /// Some partial sum exceeded `z_max`, so no later ladder height is `≤ z_max`.
    pub exceeded: bool,
    pub excursions: u64,
    pub steps: u64,
    /// Hit a cap before either `k` ladder points or `z_max` was reached.
    pub truncated: bool,
    pub touched_boundary: bool,
}

impl LadderRecord {
    pub fn settled(&self, k: usize) -> bool {
        self.heights.len() >= k || self.exceeded
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderLimits {
    pub k: usize,
    pub z_max: f64,
    pub max_excursions: u64,
    /// Budget on chain steps summed over the walk.
    pub max_steps: u64,
}

/// Streams excursions into the area walk until `k` ladder points are found,
/// the walk exceeds `z_max`, or a budget runs out. A positive excursion that
/// already carries the walk above `z_max` is cut short: its ladder height lies
/// above every `z` of interest.
pub fn sample_ladder_record<R: Rng + ?Sized>(
    chain: &ChainSpec,
    ladder: &LadderLimits,
    limits: &ExcursionLimits,
    rng: &mut R,
) -> LadderRecord {
    let mut rec = LadderRecord {
        heights: vec![0.0],
        exceeded: false,
        excursions: 0,
        steps: 0,
        truncated: false,
        touched_boundary: false,
    };
    let (mut s, mut best) = (0.0f64, 0.0f64);
    while rec.heights.len() < ladder.k {
        if rec.excursions >= ladder.max_excursions || rec.steps >= ladder.max_steps {
            rec.truncated = true;
            break;
        }
        let room = ladder.z_max - s;
        let budget = ladder.max_steps - rec.steps;
        let lim = ExcursionLimits { max_steps: limits.max_steps.min(budget), ..*limits };
        let e = run_excursion(chain, &lim, rng, |_, a| a > room, |_, _| {});
        rec.excursions += 1;
        rec.steps += e.steps;
        rec.touched_boundary |= e.touched_boundary;
        s += e.area;
        if s > ladder.z_max {
            rec.exceeded = true;
            break;
        }
        if e.censored {
            rec.truncated = true;
            break;
        }
        if s > best {
            best = s;
            rec.heights.push(s);
        }
    }
    rec
}

/// `𝒱̂(z)`: mean over walks of `#{ladder heights ≤ z}` among the first `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalTable {
    pub z: Vec<f64>,
    pub renewal: Vec<f64>,
    pub ci: Vec<f64>,
    pub k: usize,
    pub included: usize,
    pub excluded: usize,
    pub exclusion_fraction: f64,
}

/// Renewal function from fixed walks. A walk counts if it has at least `k`
/// ladder points or its maximum exceeds the largest `z`; either way the counts
/// are exact on the grid.
pub fn renewal_estimate(walks: &[AreaWalk], z_grid: &[f64], k: usize) -> Result<RenewalTable> {
    let z_max = check_grid(z_grid)?;
    let records: Vec<LadderRecord> = walks
        .iter()
        .map(|w| {
            let l = ladder_heights(w);
            let top = w.partial_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            LadderRecord {
                heights: l.heights,
                exceeded: top > z_max,
                excursions: w.len() as u64,
                steps: 0,
                truncated: false,
                touched_boundary: false,
            }
        })
        .collect();
    renewal_from_records(&records, z_grid, k)
}

/// Renewal function from streamed ladder records; unsettled records are
/// excluded and counted.
pub fn renewal_from_records(records: &[LadderRecord], z_grid: &[f64], k: usize) -> Result<RenewalTable> {
    check_grid(z_grid)?;
    if k == 0 {
        return Err(invalid("k", "must be positive"));
    }
    let kept: Vec<&LadderRecord> = records.iter().filter(|r| r.settled(k)).collect();
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!("{} of {} walks settled", kept.len(), records.len())));
    }
    let mut renewal = Vec::with_capacity(z_grid.len());
    let mut ci = Vec::with_capacity(z_grid.len());
    let mut counts = vec![0.0; kept.len()];
    for &z in z_grid {
        for (c, r) in counts.iter_mut().zip(&kept) {
            let first = &r.heights[..r.heights.len().min(k)];
            *c = first.partition_point(|h| *h <= z) as f64;
        }
        renewal.push(mean(&counts));
        ci.push(Z95 * std_error(&counts));
    }
    let excluded = records.len() - kept.len();
    Ok(RenewalTable {
        z: z_grid.to_vec(),
        renewal,
        ci,
        k,
        included: kept.len(),
        excluded,
        exclusion_fraction: excluded as f64 / records.len() as f64,
    })
}

fn check_grid(z: &[f64]) -> Result<f64> {
    if z.is_empty() || z.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || z.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("z_grid", "must be nonempty, nonnegative, finite and strictly increasing"));
    }
    Ok(z[z.len() - 1])
}

impl RenewalTable {
    /// Log-log OLS slope of `𝒱̂` over grid points in `[lo, hi]`.
    pub fn slope(&self, lo: f64, hi: f64) -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .z
            .iter()
            .zip(&self.renewal)
            .filter(|(z, v)| **z >= lo && **z <= hi && **z > 0.0 && **v > 0.0)
            .map(|(z, v)| (z.ln(), v.ln()))
            .unzip();
        if xs.len() < 3 {
            return Err(Error::InsufficientData(format!("{} grid points in [{lo}, {hi}]", xs.len())));
        }
        Ok(ols(&xs, &ys).1)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.renewal.windows(2).all(|w| w[1] >= w[0])
    }

    /// Grid triples `(x, y, x + y)` with `𝒱̂(x+y) > 𝒱̂(x) + 𝒱̂(y)` plus CI slack.
    /// Only sums that land on the grid (relative tolerance 1e-9) are checked.
    pub fn subadditivity_violations(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for i in 0..self.z.len() {
            for j in i..self.z.len() {
                let s = self.z[i] + self.z[j];
                let Some(k) = self.z.iter().position(|z| (z - s).abs() <= 1e-9 * s.max(1.0)) else { continue };
                let slack = self.ci[i] + self.ci[j] + self.ci[k];
                if self.renewal[k] > self.renewal[i] + self.renewal[j] + slack {
                    out.push((self.z[i], self.z[j], s));
                }
            }
        }
        out
    }

    /// CSV with columns `z, renewal, ci`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["z", "renewal", "ci"])?;
        for j in 0..self.z.len() {
            wr.write_record(&[self.z[j].to_string(), self.renewal[j].to_string(), self.ci[j].to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}
