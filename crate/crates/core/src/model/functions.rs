//! Scale functions, speed measures, and sign-preserving functionals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate_from_zero, invert_increasing};

/// Scale function `s`: strictly increasing, continuous, `s(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleFunction {
    Identity,
    /// `s(x) = sgn(x) (1 - sgn(x) η) / (2 - δ) |x|^{2-δ}`.
    SkewBessel { delta: f64, eta: f64 },
    /// `s(x) = ∫_0^x (1 + v²)^{μ/2} dv`.
    KineticFp { mu: f64 },
    /// `s(x) = ∫_0^x exp(k v²) dv` for the Ornstein–Uhlenbeck process with rate `k`.
    Ou { rate: f64 },
    /// Monotone piecewise-linear interpolation, linear extrapolation with the end slopes.
    Tabulated { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl ScaleFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::SkewBessel { delta, eta } => {
                check_delta(*delta)?;
                check_eta(*eta)
            }
            Self::KineticFp { mu } => {
                if !mu.is_finite() {
                    return Err(invalid("mu", "must be finite"));
                }
                Ok(())
            }
            Self::Ou { rate } => check_positive("rate", *rate),
            Self::Tabulated { breakpoints, values } => {
                check_table(breakpoints, values, "scale")?;
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::NonMonotone("tabulated scale must be strictly increasing".into()));
                }
                let s0 = interp_linear(breakpoints, values, 0.0);
                if s0.abs() > 1e-12 * values.iter().fold(1.0f64, |a, v| a.max(v.abs())) {
                    return Err(invalid("values", format!("scale must vanish at 0 (s(0) = {s0})")));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::SkewBessel { delta, eta } => {
                if x == 0.0 {
                    return 0.0;
                }
                let sg = x.signum();
                sg * (1.0 - sg * eta) / (2.0 - delta) * x.abs().powf(2.0 - delta)
            }
            Self::KineticFp { mu } => {
                let mu = *mu;
                integrate_from_zero(move |v: f64| (1.0 + v * v).powf(0.5 * mu), x)
                    .expect("smooth integrand")
            }
            Self::Ou { rate } => {
                let k = *rate;
                integrate_from_zero(move |v: f64| (k * v * v).exp(), x).expect("smooth integrand")
            }
            Self::Tabulated { breakpoints, values } => interp_linear(breakpoints, values, x),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            Self::Identity => y,
            Self::SkewBessel { delta, eta } => {
                if y == 0.0 {
                    return 0.0;
                }
                let sg = y.signum();
                sg * (y.abs() * (2.0 - delta) / (1.0 - sg * eta)).powf(1.0 / (2.0 - delta))
            }
            Self::Tabulated { breakpoints, values } => interp_linear(values, breakpoints, y),
            _ => invert_increasing(|x| self.eval(x), y),
        }
    }
}

/// Speed measure `m`, represented by its cumulative string with `m(0) = 0`
/// (right-continuous), so that `m((a, b]) = cumulative(b) - cumulative(a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedMeasure {
    /// Density `|x|^{δ-1} / (1 - sgn(x) η)`.
    SkewBessel { delta: f64, eta: f64 },
    /// Density `(1 + x²)^{-μ/2}`.
    KineticFp { mu: f64 },
    /// Density `exp(-k x²)`.
    Ou { rate: f64 },
    /// Point masses.
    Atomic { sites: Vec<f64>, masses: Vec<f64> },
}

impl SpeedMeasure {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::SkewBessel { delta, eta } => {
                check_delta(*delta)?;
                check_eta(*eta)
            }
            Self::KineticFp { mu } => {
                if !mu.is_finite() {
                    return Err(invalid("mu", "must be finite"));
                }
                Ok(())
            }
            Self::Ou { rate } => check_positive("rate", *rate),
            Self::Atomic { sites, masses } => {
                check_table(sites, masses, "speed")?;
                if masses.iter().any(|m| *m <= 0.0 || !m.is_finite()) {
                    return Err(invalid("masses", "atoms must carry strictly positive finite mass"));
                }
                if !sites.contains(&0.0) {
                    return Err(invalid("sites", "0 must be in the support of the speed measure"));
                }
                Ok(())
            }
        }
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Self::SkewBessel { delta, eta } => {
                if x == 0.0 {
                    return Some(0.0);
                }
                Some(x.abs().powf(delta - 1.0) / (1.0 - x.signum() * eta))
            }
            Self::KineticFp { mu } => Some((1.0 + x * x).powf(-0.5 * mu)),
            Self::Ou { rate } => Some((-rate * x * x).exp()),
            Self::Atomic { .. } => None,
        }
    }

    pub fn cumulative(&self, x: f64) -> f64 {
        match self {
            Self::SkewBessel { delta, eta } => {
                if x == 0.0 {
                    return 0.0;
                }
                let sg = x.signum();
                sg * x.abs().powf(*delta) / (delta * (1.0 - sg * eta))
            }
            Self::KineticFp { mu } => {
                let mu = *mu;
                integrate_from_zero(move |v: f64| (1.0 + v * v).powf(-0.5 * mu), x)
                    .expect("smooth integrand")
            }
            Self::Ou { rate } => {
                let k = *rate;
                integrate_from_zero(move |v: f64| (-k * v * v).exp(), x).expect("smooth integrand")
            }
            Self::Atomic { sites, masses } => {
                if x >= 0.0 {
                    sites.iter().zip(masses).filter(|(s, _)| **s > 0.0 && **s <= x).map(|(_, m)| m).sum()
                } else {
                    -sites.iter().zip(masses).filter(|(s, _)| **s > x && **s <= 0.0).map(|(_, m)| m).sum::<f64>()
                }
            }
        }
    }

    /// `m((a, b])`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// `m({x})`.
    pub fn atom_at(&self, x: f64) -> f64 {
        match self {
            Self::Atomic { sites, masses } => sites.iter().position(|s| *s == x).map_or(0.0, |i| masses[i]),
            _ => 0.0,
        }
    }

    /// `∫_0^x g(v) m(dv)` (signed, with the convention of [`Self::cumulative`]).
    pub fn integrate(&self, g: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
        match self {
            Self::Atomic { sites, masses } => Ok(if x >= 0.0 {
                sites.iter().zip(masses).filter(|(s, _)| **s > 0.0 && **s <= x).map(|(s, m)| g(*s) * m).sum()
            } else {
                -sites
                    .iter()
                    .zip(masses)
                    .filter(|(s, _)| **s > x && **s <= 0.0)
                    .map(|(s, m)| g(*s) * m)
                    .sum::<f64>()
            }),
            _ => integrate_from_zero(|v| g(v) * self.density(v).unwrap_or(0.0), x),
        }
    }
}

/// Sign-preserving functional `f` with `f(0) = 0`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    #[default]
    Identity,
    Sign,
    /// `f(x) = (c₊ 1{x>0} - c₋ 1{x<0}) |x|^γ`.
    SignedPower { gamma: f64, c_plus: f64, c_minus: f64 },
    /// Piecewise-linear through `(points, values)`, flat beyond the ends.
    Tabulated { points: Vec<f64>, values: Vec<f64> },
}

impl Functional {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Identity | Self::Sign => Ok(()),
            Self::SignedPower { gamma, c_plus, c_minus } => {
                if !gamma.is_finite() {
                    return Err(invalid("gamma", "must be finite"));
                }
                check_positive("c_plus", *c_plus)?;
                check_positive("c_minus", *c_minus)
            }
            Self::Tabulated { points, values } => {
                check_table(points, values, "functional")?;
                let zero = points.iter().position(|p| *p == 0.0);
                match zero {
                    Some(i) if values[i] == 0.0 => {}
                    _ => return Err(invalid("points", "tabulated functional needs the point (0, 0)")),
                }
                for (p, v) in points.iter().zip(values) {
                    if (*p > 0.0 && *v < 0.0) || (*p < 0.0 && *v > 0.0) {
                        return Err(invalid("values", format!("f({p}) = {v} does not preserve the sign")));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match self {
            Self::Identity => x,
            Self::Sign => x.signum(),
            Self::SignedPower { gamma, c_plus, c_minus } => {
                let c = if x > 0.0 { *c_plus } else { -*c_minus };
                c * x.abs().powf(*gamma)
            }
            Self::Tabulated { points, values } => {
                let n = points.len();
                if x <= points[0] {
                    values[0]
                } else if x >= points[n - 1] {
                    values[n - 1]
                } else {
                    interp_linear(points, values, x)
                }
            }
        }
    }

    /// Growth index `γ` of `|f(x)|` at infinity, when the functional has one.
    pub fn power_index(&self) -> Option<f64> {
        match self {
            Self::Identity => Some(1.0),
            Self::Sign => Some(0.0),
            Self::SignedPower { gamma, .. } => Some(*gamma),
            Self::Tabulated { .. } => None,
        }
    }
}

/// Piecewise-linear interpolation through sorted `xs`, linear extrapolation.
pub(crate) fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let i = match xs.partition_point(|v| *v <= x) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn check_table(xs: &[f64], ys: &[f64], what: &str) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidGrid(format!("{what}: {} breakpoints but {} values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidGrid(format!("{what}: need at least two breakpoints")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) || xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid(format!("{what}: breakpoints must be finite and strictly increasing")));
    }
    Ok(())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid("delta", format!("must lie in (0, 2), got {delta}")));
    }
    Ok(())
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(eta > -1.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (-1, 1), got {eta}")));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}
