use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::model::ChainSpec;

pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

/// Hard caps on a single excursion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionLimits {
    pub max_steps: u64,
    /// Stop once the excursion has lasted this long.
    pub max_length: f64,
}

impl Default for ExcursionLimits {
    fn default() -> Self {
        Self { max_steps: DEFAULT_MAX_STEPS, max_length: f64::INFINITY }
    }
}

/// One excursion away from 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSample {
    /// Time spent away from 0.
    pub length: f64,
    /// `∫ f(ε_s) ds` over the excursion.
    pub area: f64,
    /// `sup |ε_s|`.
    pub amplitude: f64,
    /// +1 or -1.
    pub sign: i8,
    /// Number of holding periods sampled.
    pub steps: u64,
    /// The excursion was cut short by a cap or a stopping rule.
    pub censored: bool,
    pub touched_boundary: bool,
    /// `(entry time relative to the excursion start, site index)` per segment.
    pub path: Option<Vec<(f64, i32)>>,
}

/// Samples one complete excursion from 0 (default caps, no path).
pub fn sample_excursion<R: Rng + ?Sized>(chain: &ChainSpec, rng: &mut R) -> ExcursionSample {
    sample_excursion_with(chain, &ExcursionLimits::default(), false, rng)
}

pub fn sample_excursion_with<R: Rng + ?Sized>(
    chain: &ChainSpec,
    limits: &ExcursionLimits,
    keep_path: bool,
    rng: &mut R,
) -> ExcursionSample {
    let mut path = keep_path.then(Vec::new);
    let mut out = run_excursion(chain, limits, rng, |_, _| false, |t, i| {
        if let Some(p) = path.as_mut() {
            p.push((t, i as i32));
        }
    });
    out.path = path;
    out
}

/// Runs one excursion, calling `visit(entry_time, site)` on each segment and
/// stopping early (censored) once `stop(length, area)` holds after a segment.
#[inline]
pub(crate) fn run_excursion<R: Rng + ?Sized>(
    chain: &ChainSpec,
    limits: &ExcursionLimits,
    rng: &mut R,
    stop: impl Fn(f64, f64) -> bool,
    mut visit: impl FnMut(f64, usize),
) -> ExcursionSample {
    let z = chain.zero_index();
    let up = chain.up_prob();
    let rate = chain.hold_rate();
    let fv = chain.f_values();
    let sites = chain.sites();
    let last = chain.len() - 1;
    let mut i = if rng.random::<f64>() < up[z] { z + 1 } else { z - 1 };
    let sign: i8 = if i > z { 1 } else { -1 };
    let (mut length, mut area, mut amp) = (0.0f64, 0.0f64, 0.0f64);
    let mut steps = 0u64;
    let mut touched = false;
    let mut censored = false;
    loop {
        visit(length, i);
        let h: f64 = rng.sample::<f64, _>(Exp1) / rate[i];
        length += h;
        area += fv[i] * h;
        amp = amp.max(sites[i].abs());
        steps += 1;
        touched |= i == 0 || i == last;
        let go_up = rng.random::<f64>() < up[i];
        i = if go_up { i + 1 } else { i - 1 };
        if i == z {
            break;
        }
        if steps >= limits.max_steps || length >= limits.max_length || stop(length, area) {
            censored = true;
            break;
        }
    }
    ExcursionSample { length, area, amplitude: amp, sign, steps, censored, touched_boundary: touched, path: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn three_site_chain_excursions_are_exponential() {
        let chain = ChainSpec::new(
            vec![-1.0, 0.0, 1.0],
            vec![1.0, 0.5, 0.0],
            vec![1.0; 3],
            vec![-2.0, 0.0, 3.0],
            1.0,
        )
        .unwrap();
        let mut rng = RngStream::new(3, 0);
        let n = 20_000;
        let mut lens = Vec::with_capacity(n);
        for _ in 0..n {
            let e = sample_excursion(&chain, &mut rng);
            assert_eq!(e.amplitude, 1.0);
            let f = if e.sign > 0 { 3.0 } else { -2.0 };
            assert!((e.area - f * e.length).abs() < 1e-12);
            lens.push(e.length);
        }
        let m = crate::numeric::mean(&lens);
        assert!((m - 1.0).abs() < 4.0 / (n as f64).sqrt(), "mean length {m}");
    }

    #[test]
    fn path_is_constant_sign() {
        let chain = ChainSpec::srw(200, |x| x).unwrap();
        let mut rng = RngStream::new(9, 1);
        for _ in 0..500 {
            let e = sample_excursion_with(&chain, &ExcursionLimits::default(), true, &mut rng);
            let p = e.path.unwrap();
            assert!(p.iter().all(|(_, i)| (*i - 200).signum() == e.sign as i32));
            assert!(p.windows(2).all(|w| w[1].0 > w[0].0));
            assert_eq!(p.len() as u64, e.steps);
        }
    }

    #[test]
    fn step_cap_censors() {
        let chain = ChainSpec::srw(1000, |x| x).unwrap();
        let mut rng = RngStream::new(1, 1);
        let limits = ExcursionLimits { max_steps: 5, max_length: f64::INFINITY };
        let mut censored = 0;
        for _ in 0..1000 {
            let e = sample_excursion_with(&chain, &limits, false, &mut rng);
            assert!(e.steps <= 5);
            censored += e.censored as usize;
        }
        // excursions end after 1, 3, 5, ... periods w.p. 1/2, 1/8, 1/16, ...
        assert!((censored as f64 / 1000.0 - 0.3125).abs() < 0.06, "{censored}");
    }
}
