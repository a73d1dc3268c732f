use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::FitMode;
use crate::fluctuation::DEFAULT_LADDER_COUNT;
use crate::model::{log_space, ChainSpec, ModelConfig};

/// One experiment: a model plus any of the passage, fluctuation and
/// conditioned-trajectory tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_worker")]
    pub workers: usize,
    /// First-passage replicas.
    #[serde(default)]
    pub replicas: u64,
    /// Output root; the run writes into `<outputs>/<name>/`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passage: Option<PassageConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluctuation: Option<FluctuationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioned: Option<ConditionedConfig>,
    #[serde(default)]
    pub expect: Expectations,
}

fn one_worker() -> usize {
    1
}

/// Log-spaced grid with pinned ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) || self.points < 2 {
            return Err(invalid("grid", format!("need 0 < min < max and 2+ points, got {self:?}")));
        }
        Ok(log_space(self.min, self.max, self.points))
    }

    /// `per_decade` points per decade over `[min, max]`.
    pub fn per_decade(min: f64, max: f64, per_decade: usize) -> Self {
        let n = ((max / min).log10() * per_decade as f64).round() as usize + 1;
        Self { min, max, points: n.max(2) }
    }
}

/// Starting pair `(ζ_0, X_0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub z: f64,
    pub x: f64,
}

impl Start {
    /// `z < 0`, or `z = 0` with `x < 0`.
    pub fn check(&self) -> Result<()> {
        if self.z < 0.0 || (self.z == 0.0 && self.x < 0.0) {
            Ok(())
        } else {
            Err(Error::InadmissibleStart { z: self.z, x: self.x })
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub mode: FitMode,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassageConfig {
    /// Barrier for a zero start (default 1). A nonzero start always targets 0.
    #[serde(default)]
    pub z: Option<f64>,
    pub horizon: f64,
    /// Default: 10 points per decade on `[1, horizon]`.
    #[serde(default)]
    pub t_grid: Option<LogGrid>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub start: Option<Start>,
}

impl PassageConfig {
    pub fn barrier(&self) -> f64 {
        if self.start.is_some() {
            0.0
        } else {
            self.z.unwrap_or(1.0)
        }
    }

    pub fn t_grid(&self) -> Result<Vec<f64>> {
        self.t_grid.unwrap_or_else(|| LogGrid::per_decade(1.0, self.horizon, 10)).points()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    /// Samples of `Δτ` over unit local time.
    pub samples: u64,
    pub q_grid: LogGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaConfig {
    pub replicas: u64,
    #[serde(default = "kappa_ppd")]
    pub points_per_decade: usize,
    #[serde(default = "kappa_t_min")]
    pub t_min: f64,
    /// Allowed head + tail truncation bound.
    #[serde(default = "kappa_tolerance")]
    pub tolerance: f64,
    /// `q` range for the product-identity spread; default: top two decades of the grid.
    #[serde(default)]
    pub product_window: Option<(f64, f64)>,
}

fn kappa_ppd() -> usize {
    64
}

fn kappa_t_min() -> f64 {
    1e-4
}

fn kappa_tolerance() -> f64 {
    1e-2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalConfig {
    pub walks: u64,
    pub z_grid: LogGrid,
    #[serde(default = "ladder_k")]
    pub k: usize,
    /// Chain-step budget per walk.
    pub max_steps_per_walk: u64,
    /// `z` range for the log-log slope; default: the whole grid.
    #[serde(default)]
    pub slope_window: Option<(f64, f64)>,
}

fn ladder_k() -> usize {
    DEFAULT_LADDER_COUNT
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityConfig {
    pub walks: u64,
    pub blocks: usize,
    /// Local time per block.
    pub block_local_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationConfig {
    /// Step cap per excursion (default 1e7).
    #[serde(default = "excursion_cap")]
    pub max_excursion_steps: u64,
    #[serde(default)]
    pub phi: Option<PhiConfig>,
    /// Requires `phi` on the same run.
    #[serde(default)]
    pub kappa: Option<KappaConfig>,
    #[serde(default)]
    pub renewal: Option<RenewalConfig>,
    #[serde(default)]
    pub positivity: Option<PositivityConfig>,
}

fn excursion_cap() -> u64 {
    10_000_000
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionedConfig {
    pub t_target: f64,
    pub count: usize,
    #[serde(default = "one")]
    pub z: f64,
    #[serde(default = "pilot")]
    pub pilot_replicas: u64,
}

fn one() -> f64 {
    1.0
}

fn pilot() -> u64 {
    100_000
}

/// Acceptance ranges; a run whose estimates fall outside is marked failed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub theta: Option<(f64, f64)>,
    #[serde(default)]
    pub kappa_plus_slope: Option<(f64, f64)>,
    #[serde(default)]
    pub product_spread_max: Option<f64>,
    #[serde(default)]
    pub renewal_slope: Option<(f64, f64)>,
    #[serde(default)]
    pub positivity: Option<(f64, f64)>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks everything that can be checked without sampling and returns the chain.
    pub fn validate(&self) -> Result<ChainSpec> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name", "must be a nonempty file-name-safe string"));
        }
        let (_, chain) = self.model.build()?;
        if let Some(p) = &self.passage {
            if self.replicas < 1 {
                return Err(invalid("replicas", "must be at least 1"));
            }
            if !(p.horizon > 0.0 && p.horizon.is_finite()) {
                return Err(invalid("horizon", "must be positive and finite"));
            }
            let grid = p.t_grid()?;
            if grid[grid.len() - 1] > p.horizon {
                return Err(Error::OutsideHorizon { t: grid[grid.len() - 1], horizon: p.horizon });
            }
            match p.start {
                Some(s) => {
                    s.check()?;
                    if p.z.is_some_and(|z| z != 0.0) {
                        return Err(invalid("z", "a nonzero start targets the barrier 0"));
                    }
                    chain.index_of(s.x).ok_or(Error::NotInSupport { index: 0, x: s.x })?;
                }
                None => {
                    if !(p.barrier() > 0.0) {
                        return Err(invalid("z", "a zero start needs a positive barrier"));
                    }
                }
            }
        }
        if let Some(f) = &self.fluctuation {
            if f.kappa.is_some() && f.phi.is_none() {
                return Err(invalid("kappa", "needs a phi section for its truncation bounds and grid"));
            }
            if let Some(p) = &f.phi {
                p.q_grid.points()?;
            }
            if let Some(r) = &f.renewal {
                r.z_grid.points()?;
                if r.walks < 2 || r.k == 0 {
                    return Err(invalid("renewal", "need 2+ walks and k >= 1"));
                }
            }
            if let Some(p) = &f.positivity {
                if p.walks < 1 || p.blocks < 1 || !(p.block_local_time > 0.0) {
                    return Err(invalid("positivity", "need walks, blocks and a positive block length"));
                }
            }
        }
        if let Some(c) = &self.conditioned {
            if !(c.t_target >= 0.0 && c.t_target.is_finite()) || c.count == 0 || !(c.z > 0.0) {
                return Err(invalid("conditioned", "need t_target >= 0, count >= 1 and z > 0"));
            }
        }
        Ok(chain)
    }

    /// Canonical JSON of everything that determines the outputs (worker
    /// count and output root excluded).
    pub fn canonical(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(m) = v.as_object_mut() {
            m.remove("workers");
            m.remove("outputs");
        }
        Ok(v)
    }
}
