use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AreaWalk;
use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, wilson, Z95};

/// Running fraction of `n ≤ N` with `S_n ≥ 0` along one walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    /// `running[n-1] = (1/n) #{1 ≤ k ≤ n : S_k ≥ 0}`.
    pub running: Vec<f64>,
    /// Mean of `running`.
    pub cesaro: f64,
    /// Last entry of `running`.
    pub terminal: f64,
}

pub fn spitzer_and_positivity(walk: &AreaWalk) -> Result<Positivity> {
    if walk.is_empty() {
        return Err(Error::InsufficientData("empty walk".into()));
    }
    let mut running = Vec::with_capacity(walk.len());
    let mut hits = 0usize;
    for (n, s) in walk.partial_sums[1..].iter().enumerate() {
        hits += (*s >= 0.0) as usize;
        running.push(hits as f64 / (n + 1) as f64);
    }
    let cesaro = pairwise_sum(&running) / running.len() as f64;
    let terminal = running[running.len() - 1];
    Ok(Positivity { running, cesaro, terminal })
}

/// `P̂(S_n ≥ 0)` across independent walks, with Wilson half-widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityTable {
    pub n: Vec<usize>,
    pub fraction: Vec<f64>,
    pub ci: Vec<f64>,
    /// `(1/n) Σ_{k ≤ n} P̂(S_k ≥ 0)`.
    pub cesaro: Vec<f64>,
    pub walks: usize,
}

/// Counts over walks of equal length.
pub fn positivity_table(walks: &[AreaWalk]) -> Result<PositivityTable> {
    let Some(len) = walks.first().map(|w| w.len()) else {
        return Err(Error::InsufficientData("no walks".into()));
    };
    if len == 0 || walks.iter().any(|w| w.len() != len) {
        return Err(Error::InsufficientData("walks must be nonempty and of equal length".into()));
    }
    let mut counts = vec![0usize; len];
    for w in walks {
        for (c, s) in counts.iter_mut().zip(&w.partial_sums[1..]) {
            *c += (*s >= 0.0) as usize;
        }
    }
    Ok(PositivityTable::from_counts(&counts, walks.len()))
}

impl PositivityTable {
    pub fn from_counts(counts: &[usize], walks: usize) -> Self {
        let fraction: Vec<f64> = counts.iter().map(|c| *c as f64 / walks as f64).collect();
        let ci = counts.iter().map(|c| wilson(*c, walks, Z95).1).collect();
        let mut cesaro = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for (k, f) in fraction.iter().enumerate() {
            acc += f;
            cesaro.push(acc / (k + 1) as f64);
        }
        Self { n: (1..=counts.len()).collect(), fraction, ci, cesaro, walks }
    }

    /// CSV with columns `n, positivity, ci`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "positivity", "ci"])?;
        for j in 0..self.n.len() {
            wr.write_record(&[self.n[j].to_string(), self.fraction[j].to_string(), self.ci[j].to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}
