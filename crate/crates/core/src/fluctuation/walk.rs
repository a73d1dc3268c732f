use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ChainSpec;
use crate::sim::{run_excursion, ExcursionLimits};

/// Random walk of excursion areas. `partial_sums[0] = 0` and
/// `partial_sums[n]` is the sum of the first `n` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaWalk {
    pub steps: Vec<f64>,
    /// `Δτ` companion of each step.
    pub taus: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

impl AreaWalk {
    pub fn new(steps: Vec<f64>, taus: Vec<f64>) -> Result<Self> {
        if steps.len() != taus.len() {
            return Err(invalid("taus", "need one companion per step"));
        }
        let mut partial_sums = Vec::with_capacity(steps.len() + 1);
        let mut s = 0.0;
        partial_sums.push(s);
        for x in &steps {
            s += x;
            partial_sums.push(s);
        }
        Ok(Self { steps, taus, partial_sums })
    }

    pub fn from_steps(steps: Vec<f64>) -> Self {
        let n = steps.len();
        Self::new(steps, vec![0.0; n]).expect("lengths match")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaWalkSample {
    pub walk: AreaWalk,
    /// Excursions cut by the step or length cap.
    pub censored: u64,
    pub touched_boundary: u64,
}

/// One step per excursion: the step is the excursion area, its companion the
/// holding time at 0 before it plus its length.
pub fn sample_area_walk<R: Rng + ?Sized>(
    chain: &ChainSpec,
    n: usize,
    limits: &ExcursionLimits,
    rng: &mut R,
) -> AreaWalkSample {
    let hold = chain.hold_rate()[chain.zero_index()];
    let (mut steps, mut taus) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut censored, mut touched) = (0, 0);
    for _ in 0..n {
        let wait = rng.sample::<f64, _>(Exp1) / hold;
        let e = run_excursion(chain, limits, rng, |_, _| false, |_, _| {});
        steps.push(e.area);
        taus.push(wait + e.length);
        censored += e.censored as u64;
        touched += e.touched_boundary as u64;
    }
    AreaWalkSample { walk: AreaWalk::new(steps, taus).expect("lengths match"), censored, touched_boundary: touched }
}
