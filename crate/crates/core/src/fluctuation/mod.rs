//! The area walk of excursions, its ladder structure, and estimators for the
//! renewal function, `Φ`, `κ(0,q,0)`, `κ̄(0,q,0)` and positivity.

mod kappa;
mod ladder;
mod phi;
mod positivity;
mod renewal;
mod walk;

use std::io::Write;

pub use kappa::{kappa_estimate, KappaGrid, KappaSettings, KappaTable, TAIL_CUTOFF};
pub use ladder::{ladder_heights, LadderDecomposition};
pub use phi::{phi_estimate, PhiTable, MIN_SAMPLES};
pub use positivity::{positivity_table, spitzer_and_positivity, Positivity, PositivityTable};
pub use renewal::{
    renewal_estimate, renewal_from_records, sample_ladder_record, LadderLimits, LadderRecord, RenewalTable,
    DEFAULT_LADDER_COUNT,
};
pub use walk::{sample_area_walk, AreaWalk, AreaWalkSample};

use crate::error::{invalid, Result};

/// CSV with columns `q, phi, phi_ci, kappa_plus, kappa_minus`; `κ` columns are
/// `κ̂/c` and empty when no κ table is given.
pub fn write_phi_kappa_csv(w: impl Write, phi: &PhiTable, kappa: Option<&KappaTable>) -> Result<()> {
    if let Some(k) = kappa {
        if k.q != phi.q {
            return Err(invalid("kappa", "q grid differs from the phi table"));
        }
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["q", "phi", "phi_ci", "kappa_plus", "kappa_minus"])?;
    for j in 0..phi.q.len() {
        let (kp, km) = match kappa {
            Some(k) => (k.log_kappa_plus[j].exp().to_string(), k.log_kappa_minus[j].exp().to_string()),
            None => (String::new(), String::new()),
        };
        wr.write_record(&[phi.q[j].to_string(), phi.phi[j].to_string(), phi.ci[j].to_string(), kp, km])?;
    }
    wr.flush()?;
    Ok(())
}
