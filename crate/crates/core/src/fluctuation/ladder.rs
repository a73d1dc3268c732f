use serde::{Deserialize, Serialize};

use super::AreaWalk;

/// Strict ascending ladder points, `H_0 = 0` at epoch 0 included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderDecomposition {
    pub epochs: Vec<usize>,
    pub heights: Vec<f64>,
    /// Cumulative `Δτ` at each ladder epoch.
    pub tau_at_epochs: Vec<f64>,
}

/// Epochs `n` with `S_n > max_{k<n} S_k`; ties with the running maximum are
/// not ladder points.
pub fn ladder_heights(walk: &AreaWalk) -> LadderDecomposition {
    let mut out = LadderDecomposition { epochs: vec![0], heights: vec![0.0], tau_at_epochs: vec![0.0] };
    let mut best = 0.0;
    let mut tau = 0.0;
    for n in 1..walk.partial_sums.len() {
        tau += walk.taus[n - 1];
        let s = walk.partial_sums[n];
        if s > best {
            best = s;
            out.epochs.push(n);
            out.heights.push(s);
            out.tau_at_epochs.push(tau);
        }
    }
    out
}
