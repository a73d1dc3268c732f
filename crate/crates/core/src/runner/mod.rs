//! Experiment orchestration: configs, seeded parallel runs, output bundles
//! with manifests, nonzero starts, conditioned trajectories.

mod conditioned;
mod config;
mod decomposition;
mod run;

pub use conditioned::{sample_conditioned_trajectories, ConditionedSample, Trajectory, MIN_ACCEPTANCE};
pub use config::{
    ConditionedConfig, ExperimentConfig, Expectations, FitConfig, FluctuationConfig, KappaConfig, LogGrid,
    PassageConfig, PhiConfig, PositivityConfig, RenewalConfig, Start,
};
pub use decomposition::{decomposition_check, DecompositionCheck};
pub use run::{
    run_experiment, run_nonzero_start, sha256_hex, FileEntry, FluctuationSummary, Manifest, PassageSummary,
    RunReport, RunStatus, CODE_VERSION,
};

use crate::error::{invalid, Result};

/// Checked-in experiment configs, `(name, json)`.
pub const BUILTIN: [(&str, &str); 8] = [
    ("e1_integrated_srw", include_str!("../../../../configs/e1_integrated_srw.json")),
    ("e2_bessel_walk_mu04", include_str!("../../../../configs/e2_bessel_walk_mu04.json")),
    ("e3_ou", include_str!("../../../../configs/e3_ou.json")),
    ("e4_skew_positivity", include_str!("../../../../configs/e4_skew_positivity.json")),
    ("e5_renewal_srw", include_str!("../../../../configs/e5_renewal_srw.json")),
    ("e6_kappa_srw", include_str!("../../../../configs/e6_kappa_srw.json")),
    ("e7_nonzero_start", include_str!("../../../../configs/e7_nonzero_start.json")),
    ("e8_conditioned_srw", include_str!("../../../../configs/e8_conditioned_srw.json")),
];

/// Looks up a builtin by full name or by its `eN` prefix.
pub fn builtin(name: &str) -> Result<ExperimentConfig> {
    let hit = BUILTIN
        .iter()
        .find(|(n, _)| *n == name || n.split('_').next() == Some(name))
        .ok_or_else(|| invalid("config", format!("no builtin experiment `{name}`")))?;
    ExperimentConfig::from_json(hit.1)
}
