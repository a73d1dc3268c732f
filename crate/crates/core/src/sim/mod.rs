//! Sampling of excursions, paths, and excursion-driven Lévy increments.

mod excursion;
mod levy;
mod path;

pub use excursion::{sample_excursion, sample_excursion_with, ExcursionLimits, ExcursionSample, DEFAULT_MAX_STEPS};
pub(crate) use excursion::run_excursion;
pub use levy::{sample_levy_increment, LevyIncrement};
pub use path::{first_passage, sample_path, PassageOutcome, PathTrace};
