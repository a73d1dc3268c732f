//! Closed-form exponents: local-time index β, stable index α, skewness ϑ,
//! positivity ρ and the persistence exponent θ = βρ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{string_m_f, Family, Functional, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentBundle {
    pub beta: f64,
    pub alpha: f64,
    pub vartheta: f64,
    pub rho: f64,
    pub theta: f64,
}

impl ExponentBundle {
    fn new(beta: f64, alpha: f64, vartheta: f64, rho: f64) -> Self {
        Self { beta, alpha, vartheta, rho, theta: beta * rho }
    }
}

/// Which of the two skewness conventions `ϑ` is given in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoForm {
    /// `ρ = ½ + arctan(ϑ tan(πα/2)) / (πα)`, `|ϑ| ≤ 1`, `α ≠ 1`.
    Skew,
    /// `ρ = ½ + arctan(ϑ) / (πα)`, any real `ϑ` giving `ρ ∈ [0, 1]`.
    Raw,
}

/// Positivity parameter of a strictly `α`-stable law.
pub fn stable_rho(alpha: f64, vartheta: f64, form: RhoForm) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("must lie in (0, 2), got {alpha}")));
    }
    if !vartheta.is_finite() {
        return Err(invalid("vartheta", "must be finite"));
    }
    match form {
        RhoForm::Skew => {
            if alpha == 1.0 {
                return Err(Error::Regime(
                    "alpha = 1 has no skew form; use cauchy_rho with the drift constant".into(),
                ));
            }
            if vartheta.abs() > 1.0 {
                return Err(invalid("vartheta", format!("skew form needs |vartheta| <= 1, got {vartheta}")));
            }
            Ok(0.5 + (vartheta * (PI * alpha / 2.0).tan()).atan() / (PI * alpha))
        }
        RhoForm::Raw => {
            let rho = 0.5 + vartheta.atan() / (PI * alpha);
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::Regime(format!("raw form gives rho = {rho} outside [0, 1]")));
            }
            Ok(rho)
        }
    }
}

/// `α = 1` with drift constant `c`: `ρ = ½ + arctan(c)/π`.
pub fn cauchy_rho(c: f64) -> f64 {
    0.5 + c.atan() / PI
}

/// Skew-Bessel family with `f(x) = (c₊ 1{x>0} − c₋ 1{x<0}) |x|^γ`.
pub fn skew_bessel_params(delta: f64, eta: f64, gamma: f64, c_plus: f64, c_minus: f64) -> Result<ExponentBundle> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid("delta", format!("must lie in (0, 2), got {delta}")));
    }
    if !(eta > -1.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (-1, 1), got {eta}")));
    }
    if !(c_plus > 0.0 && c_minus > 0.0) {
        return Err(invalid("c_plus/c_minus", "must be positive"));
    }
    if !(gamma > -delta) {
        return Err(Error::InfiniteFunctional { gamma, delta });
    }
    let beta = 1.0 - delta / 2.0;
    let alpha = (2.0 - delta) / (gamma + 2.0);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Regime(format!("alpha = {alpha} is outside (0, 1)")));
    }
    let r = (c_minus / c_plus).powf(alpha);
    let vartheta = (1.0 + eta - (1.0 - eta) * r) / (1.0 + eta + (1.0 - eta) * r);
    let rho = stable_rho(alpha, vartheta, RhoForm::Skew)?;
    Ok(ExponentBundle::new(beta, alpha, vartheta, rho))
}

/// Raw-form cross-check: reads the tail constants `f±` of the string `m^f`
/// (`m^f(±y) ≈ f± y^{1/α−1}`, both nonnegative) at large `y` and evaluates
/// `ρ = ½ + arctan(ϑ)/(πα)` with `ϑ = (f₊^α − f₋^α)/(f₊^α + f₋^α) tan(πα/2)`.
pub fn rho_from_string_tails(model: &ModelSpec, alpha: f64, y: f64) -> Result<f64> {
    let e = 1.0 / alpha - 1.0;
    let fp = string_m_f(model, y)? / y.powf(e);
    let fm = string_m_f(model, -y)? / y.powf(e);
    let (wp, wm) = (fp.powf(alpha), fm.powf(alpha));
    let vartheta = (wp - wm) / (wp + wm) * (PI * alpha / 2.0).tan();
    stable_rho(alpha, vartheta, RhoForm::Raw)
}

/// Exponents of a positive-recurrent process with a centred symmetric functional.
pub fn positive_recurrent() -> ExponentBundle {
    ExponentBundle::new(1.0, 2.0, 0.0, 0.5)
}

fn power_params(f: &Functional) -> Result<(f64, f64, f64)> {
    match f {
        Functional::Identity => Ok((1.0, 1.0, 1.0)),
        Functional::Sign => Ok((0.0, 1.0, 1.0)),
        Functional::SignedPower { gamma, c_plus, c_minus } => Ok((*gamma, *c_plus, *c_minus)),
        Functional::Tabulated { .. } => Err(Error::Regime("tabulated functionals have no closed form".into())),
    }
}

fn is_symmetric(f: &Functional) -> bool {
    match f {
        Functional::Identity | Functional::Sign => true,
        Functional::SignedPower { c_plus, c_minus, .. } => c_plus == c_minus,
        Functional::Tabulated { .. } => false,
    }
}

/// Closed-form exponents for a model family.
pub fn family_exponents(family: &Family) -> Result<ExponentBundle> {
    match family {
        Family::SkewBessel { delta, eta, gamma, c_plus, c_minus } => {
            skew_bessel_params(*delta, *eta, *gamma, *c_plus, *c_minus)
        }
        Family::Ou { rate, functional } => {
            if !(*rate > 0.0) {
                return Err(invalid("rate", "must be positive"));
            }
            if !is_symmetric(functional) {
                return Err(Error::Regime("OU exponents need a symmetric functional".into()));
            }
            Ok(positive_recurrent())
        }
        Family::KineticFp { mu, functional } => {
            if *functional != Functional::Identity {
                return Err(Error::Regime("kinetic Fokker-Planck exponents assume f = identity".into()));
            }
            if !(*mu > -1.0) {
                return Err(invalid("mu", format!("must exceed -1, got {mu}")));
            }
            if *mu > 1.0 {
                return Ok(positive_recurrent());
            }
            let beta = 0.5 * (mu + 1.0);
            Ok(ExponentBundle::new(beta, (mu + 1.0) / 3.0, 0.0, 0.5))
        }
        Family::BesselWalk { mu, functional, .. } => walk_exponents(*mu, functional),
        Family::Srw { functional, .. } => walk_exponents(0.0, functional),
        Family::Custom { .. } => Err(Error::Regime("custom models have no closed-form exponents".into())),
    }
}

/// Bessel-like walks behave as skew-Bessel processes of dimension `1 − μ`
/// with `η = 0`.
fn walk_exponents(mu: f64, functional: &Functional) -> Result<ExponentBundle> {
    if !(mu > -1.0 && mu < 1.0) {
        return Err(Error::Regime(format!(
            "mu = {mu} is outside (-1, 1); for mu > 1 the walk is positive recurrent, see positive_recurrent()"
        )));
    }
    let (gamma, cp, cm) = power_params(functional)?;
    skew_bessel_params(1.0 - mu, 0.0, gamma, cp, cm)
}
