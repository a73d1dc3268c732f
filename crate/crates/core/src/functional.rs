//! Exact path functionals: ζ, ξ, zero set, local time, inverse local time,
//! the last zero `g_t`, and the decomposition `ξ_t = ξ_{g_t} + max(Δ_t, 0)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::PathTrace;

/// Functionals of one path, stored at the path's breakpoints.
///
/// Segment `k` is `[t[k], t[k + 1])`; `zeta`, `xi` and `local_time` hold the
/// values at the breakpoints and are linear in between.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub t: Vec<f64>,
    pub site: Vec<i32>,
    pub slope: Vec<f64>,
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
    pub local_time: Vec<f64>,
    /// Maximal intervals spent at the zero site.
    pub zero_intervals: Vec<(f64, f64)>,
    /// Local time at the start of each zero interval.
    pub zero_local_start: Vec<f64>,
    /// `Z` values: `ζ` on each zero interval, i.e. after each completed excursion.
    pub z_values: Vec<f64>,
    zero_segments: Vec<usize>,
    zero_site: i32,
    m: f64,
}

/// Quantities entering `ξ_t = ξ_{g_t} + max(Δ_t, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub g: f64,
    pub xi_g: f64,
    pub zeta_g: f64,
    pub i_t: f64,
    pub delta_t: f64,
    pub xi_t: f64,
}

/// Builds the trace; `f_values` is indexed by site, `zero_site` is the index
/// of 0 and `m` the local-time normalization.
pub fn compute_trace(path: &PathTrace, f_values: &[f64], zero_site: i32, m: f64) -> Result<FunctionalTrace> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid("m", "must be positive and finite"));
    }
    let k = path.segments();
    let mut t = path.times.clone();
    t.push(path.horizon);
    let mut slope = Vec::with_capacity(k);
    for s in &path.sites {
        let v = usize::try_from(*s).ok().and_then(|i| f_values.get(i)).copied();
        slope.push(v.ok_or_else(|| invalid("sites", format!("site {s} has no f value")))?);
    }
    let (mut zeta, mut xi, mut lt) = (vec![0.0f64; k + 1], vec![0.0f64; k + 1], vec![0.0f64; k + 1]);
    let mut zero_intervals = Vec::new();
    let mut zero_local_start = Vec::new();
    let mut z_values = Vec::new();
    let mut zero_segments = Vec::new();
    for j in 0..k {
        let dt = t[j + 1] - t[j];
        zeta[j + 1] = zeta[j] + slope[j] * dt;
        xi[j + 1] = xi[j].max(zeta[j + 1]);
        if path.sites[j] == zero_site {
            lt[j + 1] = lt[j] + dt / m;
            zero_intervals.push((t[j], t[j + 1]));
            zero_local_start.push(lt[j]);
            z_values.push(zeta[j]);
            zero_segments.push(j);
        } else {
            lt[j + 1] = lt[j];
        }
    }
    Ok(FunctionalTrace {
        t,
        site: path.sites.clone(),
        slope,
        zeta,
        xi,
        local_time: lt,
        zero_intervals,
        zero_local_start,
        z_values,
        zero_segments,
        zero_site,
        m,
    })
}

impl FunctionalTrace {
    pub fn horizon(&self) -> f64 {
        *self.t.last().expect("nonempty")
    }

    fn segment(&self, t: f64) -> Result<usize> {
        let h = self.horizon();
        if !(0.0..=h).contains(&t) {
            return Err(Error::OutsideHorizon { t, horizon: h });
        }
        let n = self.site.len();
        Ok(self.t[..n].partition_point(|v| *v <= t).saturating_sub(1))
    }

    pub fn zeta_at(&self, t: f64) -> Result<f64> {
        let k = self.segment(t)?;
        Ok(self.zeta[k] + self.slope[k] * (t - self.t[k]))
    }

    pub fn xi_at(&self, t: f64) -> Result<f64> {
        let k = self.segment(t)?;
        Ok(self.xi[k].max(self.zeta[k] + self.slope[k] * (t - self.t[k])))
    }

    pub fn local_time_at(&self, t: f64) -> Result<f64> {
        let k = self.segment(t)?;
        Ok(if self.site[k] == self.zero_site { self.local_time[k] + (t - self.t[k]) / self.m } else { self.local_time[k] })
    }

    /// Total local time accumulated by the horizon.
    pub fn total_local_time(&self) -> f64 {
        *self.local_time.last().expect("nonempty")
    }

    /// Right-continuous inverse `τ_l = inf{t : L_t > l}`; `None` when the
    /// local time never exceeds `l` before the horizon.
    pub fn tau(&self, l: f64) -> Option<f64> {
        if l < 0.0 {
            return Some(0.0);
        }
        let j = self
            .zero_segments
            .iter()
            .position(|&k| self.local_time[k + 1] > l)?;
        let (start, _) = self.zero_intervals[j];
        Some(start + (l - self.zero_local_start[j]).max(0.0) * self.m)
    }

    /// Last zero before `t`: the start of the current holding interval if the
    /// path sits at 0 at time `t`, otherwise the time it last left 0.
    pub fn g(&self, t: f64) -> Result<f64> {
        let k = self.segment(t)?;
        if self.site[k] == self.zero_site {
            return Ok(self.t[k]);
        }
        let idx = self.zero_segments.partition_point(|&j| j < k);
        if idx == 0 {
            return Err(Error::BeforeFirstZero { t });
        }
        Ok(self.t[self.zero_segments[idx - 1] + 1])
    }

    pub fn decomposition(&self, t: f64) -> Result<Decomposition> {
        let g = self.g(t)?;
        let zeta_t = self.zeta_at(t)?;
        let xi_t = self.xi_at(t)?;
        let zeta_g = self.zeta_at(g)?;
        let xi_g = self.xi_at(g)?;
        let i_t = zeta_t - zeta_g;
        let delta_t = i_t - (xi_g - zeta_g);
        Ok(Decomposition { g, xi_g, zeta_g, i_t, delta_t, xi_t })
    }

    /// `T_z = inf{t > 0 : ζ_t ≥ z}` for `z > 0`, or `None` if not reached by the horizon.
    pub fn first_passage(&self, z: f64) -> Option<f64> {
        for k in 0..self.site.len() {
            if self.zeta[k + 1] >= z {
                let s = self.slope[k];
                return Some(if s > 0.0 { self.t[k] + ((z - self.zeta[k]) / s).max(0.0) } else { self.t[k] });
            }
        }
        None
    }

    /// Checks `sup_{[0, τ_l]} ζ = max_{s ≤ l} Z_s` by evaluating both sides
    /// independently.
    pub fn sup_identity_check(&self, l: f64) -> Result<bool> {
        let tau = self.tau(l).ok_or(Error::OutsideHorizon { t: l, horizon: self.total_local_time() })?;
        // left: scan the path up to τ
        let mut lhs = f64::NEG_INFINITY;
        for k in 0..self.site.len() {
            if self.t[k] > tau {
                break;
            }
            lhs = lhs.max(self.zeta[k]);
            let end = self.t[k + 1].min(tau);
            lhs = lhs.max(self.zeta[k] + self.slope[k] * (end - self.t[k]));
        }
        // right: Z on zero intervals entered by local time l
        let mut rhs = f64::NEG_INFINITY;
        for (j, z) in self.z_values.iter().enumerate() {
            if self.zero_local_start[j] <= l {
                rhs = rhs.max(*z);
            }
        }
        if self.site[0] != self.zero_site {
            rhs = rhs.max(self.zeta[0]);
        }
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        Ok((lhs - rhs).abs() <= 1e-12 * scale)
    }

    /// CSV export with columns `t, X, zeta, xi, L` at every breakpoint.
    pub fn write_csv(&self, w: impl Write, site_values: &[f64]) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "X", "zeta", "xi", "L"])?;
        for k in 0..self.t.len() {
            let s = self.site[k.min(self.site.len() - 1)];
            let x = site_values.get(s as usize).copied().unwrap_or(f64::NAN);
            wr.write_record(&[
                self.t[k].to_string(),
                x.to_string(),
                self.zeta[k].to_string(),
                self.xi[k].to_string(),
                self.local_time[k].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}
