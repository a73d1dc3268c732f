use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::excursion::{run_excursion, ExcursionLimits};
use crate::error::{invalid, Result};
use crate::model::ChainSpec;

/// Increment of `(τ, Z)` over a block of local time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LevyIncrement {
    pub dtau: f64,
    pub dz: f64,
    pub excursions: u64,
    pub censored: u64,
    pub touched_boundary: bool,
}

/// `Δτ = m·t + Σ ℓ_i` and `ΔZ = Σ 𝔉_i` over `Poisson(rate·t)` excursions,
/// where `rate` is [`ChainSpec::excursion_rate`].
pub fn sample_levy_increment<R: Rng + ?Sized>(
    chain: &ChainSpec,
    local_time_units: f64,
    limits: &ExcursionLimits,
    rng: &mut R,
) -> Result<LevyIncrement> {
    if !(local_time_units > 0.0 && local_time_units.is_finite()) {
        return Err(invalid("local_time_units", "must be positive and finite"));
    }
    let mut out = LevyIncrement { dtau: chain.zero_mass() * local_time_units, ..Default::default() };
    let mean = chain.excursion_rate() * local_time_units;
    if mean <= 0.0 {
        return Ok(out);
    }
    let count = poisson(mean, rng);
    for _ in 0..count {
        let e = run_excursion(chain, limits, rng, |_, _| false, |_, _| {});
        out.dtau += e.length;
        out.dz += e.area;
        out.excursions += 1;
        out.censored += e.censored as u64;
        out.touched_boundary |= e.touched_boundary;
    }
    Ok(out)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let d = Poisson::new(mean).expect("positive finite mean");
    let v: f64 = d.sample(rng);
    v as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn single_site_chain_is_pure_drift() {
        let chain = ChainSpec::new(vec![0.0], vec![0.5], vec![1.0], vec![0.0], 2.5).unwrap();
        let mut rng = RngStream::new(0, 0);
        let inc = sample_levy_increment(&chain, 3.0, &ExcursionLimits::default(), &mut rng).unwrap();
        assert_eq!(inc.dtau, 7.5);
        assert_eq!(inc.dz, 0.0);
        assert_eq!(inc.excursions, 0);
    }

    #[test]
    fn rejects_nonpositive_block() {
        let chain = ChainSpec::srw(10, |x| x).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(sample_levy_increment(&chain, 0.0, &ExcursionLimits::default(), &mut rng).is_err());
    }
}
