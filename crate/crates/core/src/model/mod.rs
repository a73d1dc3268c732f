//! Scale/speed/functional triples, their strings, and grid discretization.

mod chain;
mod functions;
mod strings;

use serde::{Deserialize, Serialize};

pub use chain::ChainSpec;
pub use functions::{Functional, ScaleFunction, SpeedMeasure};
pub use strings::{log_space, string_m_f, string_m_s, tail_index_check, Side, TailIndex, DRIFT_FLAG};

use crate::error::{invalid, Error, Result};
use functions::{check_delta, check_eta, check_positive};

pub const DEFAULT_HALF_WIDTH: usize = 4096;
pub const DEFAULT_TRUNCATION_BUDGET: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    SkewBessel,
    Ou,
    KineticFp,
    BesselWalk,
    Srw,
    Custom,
}

impl std::str::FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
            .map_err(|_| invalid("family", format!("unknown family `{s}`")))
    }
}

fn one() -> f64 {
    1.0
}

fn default_half_width() -> usize {
    DEFAULT_HALF_WIDTH
}

/// A model family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    SkewBessel {
        delta: f64,
        eta: f64,
        gamma: f64,
        c_plus: f64,
        c_minus: f64,
    },
    Ou {
        #[serde(default = "one")]
        rate: f64,
        #[serde(default)]
        functional: Functional,
    },
    KineticFp {
        mu: f64,
        #[serde(default)]
        functional: Functional,
    },
    BesselWalk {
        mu: f64,
        #[serde(default)]
        epsilon: Vec<f64>,
        #[serde(default = "default_half_width")]
        half_width: usize,
        #[serde(default)]
        functional: Functional,
    },
    Srw {
        #[serde(default = "default_half_width")]
        half_width: usize,
        #[serde(default)]
        functional: Functional,
    },
    Custom {
        scale: ScaleFunction,
        speed: SpeedMeasure,
        #[serde(default)]
        functional: Functional,
    },
}

impl Family {
    pub fn name(&self) -> FamilyName {
        match self {
            Self::SkewBessel { .. } => FamilyName::SkewBessel,
            Self::Ou { .. } => FamilyName::Ou,
            Self::KineticFp { .. } => FamilyName::KineticFp,
            Self::BesselWalk { .. } => FamilyName::BesselWalk,
            Self::Srw { .. } => FamilyName::Srw,
            Self::Custom { .. } => FamilyName::Custom,
        }
    }

    pub fn is_walk(&self) -> bool {
        matches!(self, Self::BesselWalk { .. } | Self::Srw { .. })
    }
}

/// A validated `(s, m, f)` triple; walk families also carry their native chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub scale: ScaleFunction,
    pub speed: SpeedMeasure,
    pub functional: Functional,
    pub native_chain: Option<ChainSpec>,
}

/// Builds a model from a family name and its JSON parameters.
pub fn build_model(family: FamilyName, params: &serde_json::Value) -> Result<ModelSpec> {
    let doc = serde_json::json!({ "family": family, "params": params });
    let fam: Family = serde_json::from_value(doc)
        .map_err(|e| invalid("params", format!("{family:?}: {e}")))?;
    ModelSpec::from_family(fam)
}

impl ModelSpec {
    pub fn from_family(family: Family) -> Result<Self> {
        let (scale, speed, functional, native_chain) = match &family {
            Family::SkewBessel { delta, eta, gamma, c_plus, c_minus } => {
                check_delta(*delta)?;
                check_eta(*eta)?;
                check_positive("c_plus", *c_plus)?;
                check_positive("c_minus", *c_minus)?;
                if !gamma.is_finite() {
                    return Err(invalid("gamma", "must be finite"));
                }
                if *gamma <= -delta {
                    return Err(Error::InfiniteFunctional { gamma: *gamma, delta: *delta });
                }
                (
                    ScaleFunction::SkewBessel { delta: *delta, eta: *eta },
                    SpeedMeasure::SkewBessel { delta: *delta, eta: *eta },
                    Functional::SignedPower { gamma: *gamma, c_plus: *c_plus, c_minus: *c_minus },
                    None,
                )
            }
            Family::Ou { rate, functional } => {
                check_positive("rate", *rate)?;
                (ScaleFunction::Ou { rate: *rate }, SpeedMeasure::Ou { rate: *rate }, functional.clone(), None)
            }
            Family::KineticFp { mu, functional } => {
                if !(*mu > -1.0 && mu.is_finite()) {
                    return Err(invalid("mu", format!("must exceed -1 for a recurrent process, got {mu}")));
                }
                (ScaleFunction::KineticFp { mu: *mu }, SpeedMeasure::KineticFp { mu: *mu }, functional.clone(), None)
            }
            Family::BesselWalk { mu, epsilon, half_width, functional } => {
                walk_model(*mu, epsilon, *half_width, functional)?
            }
            Family::Srw { half_width, functional } => walk_model(0.0, &[], *half_width, functional)?,
            Family::Custom { scale, speed, functional } => {
                scale.validate()?;
                speed.validate()?;
                (scale.clone(), speed.clone(), functional.clone(), None)
            }
        };
        functional.validate()?;
        Ok(Self { family, scale, speed, functional, native_chain })
    }

    /// The simulable chain: the native chain for walk families, otherwise the
    /// Stone discretization on `grid`.
    pub fn chain(&self, grid: Option<&GridSpec>) -> Result<ChainSpec> {
        match (&self.native_chain, grid) {
            (Some(c), None) => Ok(c.clone()),
            (Some(_), Some(_)) => Err(Error::InvalidGrid(
                "walk families live on the integers; set `half_width` instead of a grid".into(),
            )),
            (None, Some(g)) => stone_discretize(self, &g.sites()?),
            (None, None) => Err(Error::InvalidGrid(format!("{:?} needs a grid", self.family.name()))),
        }
    }
}

type Parts = (ScaleFunction, SpeedMeasure, Functional, Option<ChainSpec>);

fn walk_model(mu: f64, epsilon: &[f64], half_width: usize, functional: &Functional) -> Result<Parts> {
    functional.validate()?;
    let p = chain::bessel_walk_probs(mu, epsilon, half_width)?;
    let n = p.len();
    let nw = half_width as isize;
    // gaps[k] = s(k+1-N) - s(k-N), with the gaps on both sides of 0 equal to 1
    let mut gaps = vec![0.0; n - 1];
    let z = half_width;
    gaps[z] = 1.0;
    gaps[z - 1] = 1.0;
    for k in z + 1..n - 1 {
        gaps[k] = gaps[k - 1] * (1.0 - p[k]) / p[k];
    }
    for k in (0..z - 1).rev() {
        gaps[k] = gaps[k + 1] * p[k + 1] / (1.0 - p[k + 1]);
    }
    let sites: Vec<f64> = (-nw..=nw).map(|i| i as f64).collect();
    let mut svals = vec![0.0; n];
    for k in z + 1..n {
        svals[k] = svals[k - 1] + gaps[k - 1];
    }
    for k in (0..z).rev() {
        svals[k] = svals[k + 1] - gaps[k];
    }
    let masses: Vec<f64> = (0..n)
        .map(|k| {
            let left = if k > 0 { 0.5 / gaps[k - 1] } else { 0.0 };
            let right = if k + 1 < n { 0.5 / gaps[k] } else { 0.0 };
            left + right
        })
        .collect();
    let chain = ChainSpec::bessel_walk(mu, epsilon, half_width, |x| functional.eval(x))?;
    Ok((
        ScaleFunction::Tabulated { breakpoints: sites.clone(), values: svals },
        SpeedMeasure::Atomic { sites, masses },
        functional.clone(),
        Some(chain),
    ))
}

/// Spatial grid: a uniform range through 0 or explicit sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridSpec {
    Range { min: f64, max: f64, step: f64 },
    Sites { sites: Vec<f64> },
}

impl GridSpec {
    pub fn sites(&self) -> Result<Vec<f64>> {
        match self {
            Self::Range { min, max, step } => {
                if !(*step > 0.0 && *min < 0.0 && *max > 0.0) {
                    return Err(Error::InvalidGrid("need min < 0 < max and step > 0".into()));
                }
                let below = ((-min) / step + 1e-9).floor() as i64;
                let above = (max / step + 1e-9).floor() as i64;
                Ok((-below..=above).map(|k| k as f64 * step).collect())
            }
            Self::Sites { sites } => Ok(sites.clone()),
        }
    }
}

/// Model section of an experiment config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_budget")]
    pub truncation_budget: f64,
}

fn default_budget() -> f64 {
    DEFAULT_TRUNCATION_BUDGET
}

impl ModelConfig {
    pub fn build(&self) -> Result<(ModelSpec, ChainSpec)> {
        if !(self.truncation_budget > 0.0 && self.truncation_budget < 1.0) {
            return Err(invalid("truncation_budget", "must lie in (0, 1)"));
        }
        let model = ModelSpec::from_family(self.family.clone())?;
        let chain = model.chain(self.grid.as_ref())?;
        Ok((model, chain))
    }
}

/// Stone discretization of `model` on `grid`.
///
/// Interior sites jump up with probability `Δs₋ / (Δs₋ + Δs₊)` so that `s` is
/// harmonic on the grid, and hold at rate `(Δs₋ + Δs₊) / (2 m_i Δs₋ Δs₊)`,
/// where `m_i` is the speed mass of the Voronoi cell of site `i`. With this
/// rate the chain's generator agrees with `½ d/dm d/ds` on functions that are
/// quadratic in `s`. End sites reflect over a half cell.
pub fn stone_discretize(model: &ModelSpec, grid: &[f64]) -> Result<ChainSpec> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::InvalidGrid(format!("need at least 3 sites, got {n}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("grid must be finite and strictly increasing".into()));
    }
    if !grid.contains(&0.0) {
        return Err(Error::InvalidGrid("grid must contain 0".into()));
    }
    let s: Vec<f64> = grid.iter().map(|x| model.scale.eval(*x)).collect();
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotone("scale is not strictly increasing on the grid".into()));
    }
    let mid: Vec<f64> = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut up = vec![0.0; n];
    let mut rate = vec![0.0; n];
    for i in 0..n {
        let mass = if i == 0 {
            model.speed.atom_at(grid[0]) + model.speed.mass(grid[0], mid[0])
        } else if i == n - 1 {
            model.speed.mass(mid[n - 2], grid[n - 1])
        } else {
            model.speed.mass(mid[i - 1], mid[i])
        };
        if !(mass > 0.0) {
            return Err(Error::NotInSupport { index: i, x: grid[i] });
        }
        if i == 0 {
            up[i] = 1.0;
            rate[i] = 1.0 / (2.0 * mass * (s[1] - s[0]));
        } else if i == n - 1 {
            up[i] = 0.0;
            rate[i] = 1.0 / (2.0 * mass * (s[n - 1] - s[n - 2]));
        } else {
            let (dm, dp) = (s[i] - s[i - 1], s[i + 1] - s[i]);
            up[i] = dm / (dm + dp);
            rate[i] = (dm + dp) / (2.0 * mass * dm * dp);
        }
    }
    let zero = grid.iter().position(|x| *x == 0.0).expect("checked above");
    let zero_mass = if zero == 0 || zero == n - 1 {
        return Err(Error::InvalidGrid("0 must be an interior site".into()));
    } else {
        model.speed.mass(mid[zero - 1], mid[zero])
    };
    let f_values = grid.iter().map(|x| model.functional.eval(*x)).collect();
    ChainSpec::new(grid.to_vec(), up, rate, f_values, zero_mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn skew_bessel_delta_one_is_brownian() {
        let m = build_model(FamilyName::SkewBessel, &json!({"delta": 1.0, "eta": 0.0, "gamma": 1.0, "c_plus": 1.0, "c_minus": 1.0}))
            .unwrap();
        assert_eq!(m.scale.eval(2.5), 2.5);
        assert_eq!(m.speed.density(-3.0), Some(1.0));
    }

    #[test]
    fn gamma_below_minus_delta_is_rejected() {
        let e = build_model(
            FamilyName::SkewBessel,
            &json!({"delta": 0.5, "eta": 0.0, "gamma": -0.6, "c_plus": 1.0, "c_minus": 1.0}),
        )
        .unwrap_err();
        assert!(matches!(e, Error::InfiniteFunctional { .. }));
        let e = build_model(
            FamilyName::SkewBessel,
            &json!({"delta": 2.5, "eta": 0.0, "gamma": 1.0, "c_plus": 1.0, "c_minus": 1.0}),
        )
        .unwrap_err();
        assert!(e.to_string().contains("delta"));
    }

    #[test]
    fn srw_walk_is_fair() {
        let m = build_model(FamilyName::BesselWalk, &json!({"mu": 0.0, "half_width": 20})).unwrap();
        let c = m.chain(None).unwrap();
        assert!(c.up_prob()[1..c.len() - 1].iter().all(|p| *p == 0.5));
    }

    #[test]
    fn unit_grid_lebesgue_is_fair() {
        let m = build_model(FamilyName::SkewBessel, &json!({"delta": 1.0, "eta": 0.0, "gamma": 1.0, "c_plus": 1.0, "c_minus": 1.0}))
            .unwrap();
        let c = m.chain(Some(&GridSpec::Range { min: -5.0, max: 5.0, step: 1.0 })).unwrap();
        assert!(c.up_prob()[1..c.len() - 1].iter().all(|p| (p - 0.5).abs() < 1e-15));
        assert!(c.hold_rate()[1..c.len() - 1].iter().all(|r| (r - 1.0).abs() < 1e-14));
        assert_eq!(c.zero_mass(), 1.0);
    }

    #[test]
    fn skew_bessel_p0() {
        for (delta, eta) in [(1.0, 0.3), (0.5, -0.6), (1.5, 0.9)] {
            let m = build_model(
                FamilyName::SkewBessel,
                &json!({"delta": delta, "eta": eta, "gamma": 1.0, "c_plus": 1.0, "c_minus": 1.0}),
            )
            .unwrap();
            let c = m.chain(Some(&GridSpec::Range { min: -2.0, max: 2.0, step: 0.25 })).unwrap();
            let p0 = c.up_prob()[c.zero_index()];
            assert!((p0 - (1.0 + eta) / 2.0).abs() < 1e-14, "{p0}");
        }
    }

    #[test]
    fn walk_strings_rediscretize_exactly() {
        let m = build_model(FamilyName::BesselWalk, &json!({"mu": 0.4, "half_width": 50})).unwrap();
        let grid: Vec<f64> = (-50..=50).map(|i| i as f64).collect();
        let c = stone_discretize(&m, &grid).unwrap();
        let native = m.native_chain.as_ref().unwrap();
        for i in 1..grid.len() - 1 {
            assert!((c.up_prob()[i] - native.up_prob()[i]).abs() < 1e-13);
            assert!((c.hold_rate()[i] - 1.0).abs() < 1e-12);
        }
        assert!((c.zero_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_round_trip() {
        let cfg: ModelConfig = serde_json::from_value(json!({
            "family": "ou", "params": {"rate": 1.0},
            "grid": {"min": -5.0, "max": 5.0, "step": 0.25}
        }))
        .unwrap();
        assert_eq!(cfg.truncation_budget, DEFAULT_TRUNCATION_BUDGET);
        let (_, chain) = cfg.build().unwrap();
        assert_eq!(chain.len(), 41);
        let back: ModelConfig = serde_json::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn grid_errors() {
        let m = build_model(FamilyName::Ou, &json!({})).unwrap();
        assert!(stone_discretize(&m, &[0.0, 1.0]).is_err());
        assert!(stone_discretize(&m, &[-1.0, 0.5, 1.0]).is_err());
        assert!(stone_discretize(&m, &[-1.0, 1.0, 0.0]).is_err());
        let atomic = ModelSpec::from_family(Family::Custom {
            scale: ScaleFunction::Identity,
            speed: SpeedMeasure::Atomic { sites: vec![-2.0, 0.0, 2.0], masses: vec![1.0, 1.0, 1.0] },
            functional: Functional::Sign,
        })
        .unwrap();
        let e = stone_discretize(&atomic, &[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap_err();
        assert!(matches!(e, Error::NotInSupport { index: 1, .. }));
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("skew-bessel".parse::<FamilyName>().unwrap(), FamilyName::SkewBessel);
        assert_eq!("srw".parse::<FamilyName>().unwrap(), FamilyName::Srw);
        assert!("nope".parse::<FamilyName>().is_err());
    }
}
