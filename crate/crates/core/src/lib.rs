//! Simulation and estimation of persistence probabilities for additive
//! functionals of one-dimensional Markov processes.

pub mod error;
pub mod estimator;
pub mod fluctuation;
pub mod functional;
pub mod model;
pub mod numeric;
pub mod parallel;
pub mod rng;
pub mod runner;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
