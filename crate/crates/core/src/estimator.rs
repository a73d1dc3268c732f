//! Survival curves of first-passage times and persistence-exponent fits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{quantile, wilson, wls, wls_coefficients, Z95};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub t_grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub survivors: Vec<usize>,
    pub censored_fraction: f64,
    pub z: f64,
    pub replica_count: usize,
}

/// `survival[j]` = fraction of replicas with `T > t_grid[j]`; `None` marks a
/// replica that had not crossed by `horizon`.
pub fn survival_curve(passage_times: &[Option<f64>], horizon: f64, t_grid: &[f64], z: f64) -> Result<SurvivalCurve> {
    let n = passage_times.len();
    if n < 100 {
        return Err(Error::InsufficientData(format!("need at least 100 replicas, got {n}")));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "must be nonempty and strictly increasing"));
    }
    let t_max = t_grid[t_grid.len() - 1];
    if t_max > horizon {
        return Err(Error::OutsideHorizon { t: t_max, horizon });
    }
    let mut crossed: Vec<f64> = passage_times.iter().flatten().copied().collect();
    crossed.sort_by(|a, b| a.total_cmp(b));
    let censored = n - crossed.len();
    let survivors: Vec<usize> = t_grid.iter().map(|t| n - crossed.partition_point(|c| c <= t)).collect();
    Ok(SurvivalCurve::from_counts(t_grid.to_vec(), survivors, n, censored as f64 / n as f64, z))
}

impl SurvivalCurve {
    pub fn from_counts(t_grid: Vec<f64>, survivors: Vec<usize>, n: usize, censored_fraction: f64, z: f64) -> Self {
        let survival = survivors.iter().map(|s| *s as f64 / n as f64).collect();
        let ci_halfwidth = survivors.iter().map(|s| wilson(*s, n, Z95).1).collect();
        Self { t_grid, survival, ci_halfwidth, survivors, censored_fraction, z, replica_count: n }
    }

    /// Exact (noise-free) survival values, e.g. for synthetic checks.
    pub fn from_values(t_grid: Vec<f64>, survival: Vec<f64>, n: usize) -> Self {
        let survivors = survival.iter().map(|s| (s * n as f64).round() as usize).collect();
        let ci_halfwidth = vec![0.0; survival.len()];
        Self { t_grid, survival, ci_halfwidth, survivors, censored_fraction: 0.0, z: 0.0, replica_count: n }
    }

    /// CSV with columns `t, survival, ci`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "survival", "ci"])?;
        for j in 0..self.t_grid.len() {
            wr.write_record(&[self.t_grid[j].to_string(), self.survival[j].to_string(), self.ci_halfwidth[j].to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Top 2.5 decades of the grid without the last half decade.
    pub fn default_window(&self) -> (f64, f64) {
        let t_max = self.t_grid[self.t_grid.len() - 1];
        (t_max * 1e-3, t_max * 10f64.powf(-0.5))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    PurePower,
    LocalSlopes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub points: usize,
    pub intercept: f64,
    /// Dyadic local slopes (local_slopes mode only).
    pub local_slopes: Vec<f64>,
    pub iqr: Option<f64>,
    /// Standard error of the weighted least-squares slope under the
    /// correlated binomial covariance of the curve.
    pub wls_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub theta_hat: f64,
    /// 95% half-width.
    pub ci: f64,
    pub window: (f64, f64),
    pub mode: FitMode,
    pub censored_fraction: f64,
    pub diagnostics: FitDiagnostics,
}

const REL: f64 = 1e-9;

/// Fits `P(T > t) ≈ C t^{-θ}` on `window` (default: [`SurvivalCurve::default_window`]).
pub fn exponent_fit(curve: &SurvivalCurve, window: Option<(f64, f64)>, mode: FitMode) -> Result<ExponentFit> {
    let (lo, hi) = window.unwrap_or_else(|| curve.default_window());
    let g = &curve.t_grid;
    if !(lo < hi) || lo < g[0] * (1.0 - REL) || hi > g[g.len() - 1] * (1.0 + REL) {
        return Err(invalid("window", format!("[{lo}, {hi}] is not inside the grid [{}, {}]", g[0], g[g.len() - 1])));
    }
    let idx: Vec<usize> = (0..g.len()).filter(|&j| g[j] >= lo * (1.0 - REL) && g[j] <= hi * (1.0 + REL)).collect();
    if idx.len() < 6 {
        return Err(Error::InsufficientData(format!("{} grid points in the window, need 6", idx.len())));
    }
    let n = curve.replica_count as f64;
    let floor = 10.0 / n;
    if let Some(pos) = idx.iter().position(|&j| curve.survival[j] <= floor) {
        let suggested = (pos >= 6).then(|| g[idx[pos - 1]]);
        return Err(Error::TailNoise { t: g[idx[pos]], suggested_t_hi: suggested });
    }
    let xs: Vec<f64> = idx.iter().map(|&j| g[j].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&j| curve.survival[j].ln()).collect();
    let var: Vec<f64> = idx
        .iter()
        .map(|&j| {
            let s = curve.survival[j];
            ((1.0 - s) / (n * s)).max(1.0 / (n * n))
        })
        .collect();
    let ws: Vec<f64> = var.iter().map(|v| 1.0 / v).collect();
    let (a, b) = wls(&xs, &ys, &ws);
    let coef = wls_coefficients(&xs, &ws);
    // Cov(ln Ŝ_i, ln Ŝ_j) = (1 - S_i)/(n S_i) for t_i <= t_j
    let mut vb = 0.0;
    for i in 0..idx.len() {
        for j in 0..idx.len() {
            let c = var[i.min(j)];
            vb += coef[i].1 * coef[j].1 * c;
        }
    }
    let wls_se = vb.max(0.0).sqrt();
    let mut diag = FitDiagnostics { points: idx.len(), intercept: a, local_slopes: vec![], iqr: None, wls_se };
    let (theta_hat, ci) = match mode {
        FitMode::PurePower => (-b, Z95 * wls_se),
        FitMode::LocalSlopes => {
            let slopes = dyadic_slopes(&xs, &ys);
            if slopes.len() < 3 {
                return Err(Error::InsufficientData("window spans fewer than 3 doublings".into()));
            }
            let med = -quantile(&slopes, 0.5);
            let iqr = quantile(&slopes, 0.75) - quantile(&slopes, 0.25);
            diag.local_slopes = slopes.iter().map(|s| -s).collect();
            diag.iqr = Some(iqr);
            (med, ((iqr / 2.0).powi(2) + (Z95 * wls_se).powi(2)).sqrt())
        }
    };
    Ok(ExponentFit { theta_hat, ci, window: (lo, hi), mode, censored_fraction: curve.censored_fraction, diagnostics: diag })
}

/// Slopes of `y` against `x = ln t` between successive doublings of `t`,
/// with `y` interpolated linearly in `x`.
fn dyadic_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let step = 2f64.ln();
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let interp = |x: f64| {
        let k = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1);
        let (xa, xb, ya, yb) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
        ya + (yb - ya) * (x - xa) / (xb - xa)
    };
    let mut out = Vec::new();
    let mut x = x0;
    while x + step <= x1 + 1e-12 {
        out.push((interp(x + step) - interp(x)) / step);
        x += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_space;

    #[test]
    fn all_cross_at_one() {
        let times = vec![Some(1.0); 100];
        let c = survival_curve(&times, 10.0, &[0.5, 2.0], 1.0).unwrap();
        assert_eq!(c.survival, vec![1.0, 0.0]);
    }

    #[test]
    fn half_censored() {
        let mut times = vec![Some(1.0); 50];
        times.extend(vec![None; 50]);
        let c = survival_curve(&times, 100.0, &[10.0], 1.0).unwrap();
        assert_eq!(c.survival, vec![0.5]);
        assert_eq!(c.censored_fraction, 0.5);
        assert!(survival_curve(&times, 5.0, &[10.0], 1.0).is_err());
        assert!(survival_curve(&times[..99], 100.0, &[10.0], 1.0).is_err());
    }

    #[test]
    fn exact_pure_power() {
        let t = log_space(1.0, 1e5, 51);
        let s: Vec<f64> = t.iter().map(|t| t.powf(-0.25)).collect();
        let c = SurvivalCurve::from_values(t, s, 1_000_000);
        let f = exponent_fit(&c, Some((10.0, 1e4)), FitMode::PurePower).unwrap();
        assert!((f.theta_hat - 0.25).abs() < 1e-12);
    }

    #[test]
    fn local_slopes_tolerate_log_corrections() {
        let t = log_space(1e2, 1e7, 101);
        let s: Vec<f64> = t.iter().map(|t| t.powf(-0.35) * (1.0 + 1.0 / t.ln())).collect();
        let c = SurvivalCurve::from_values(t, s, 1_000_000_000);
        let f = exponent_fit(&c, Some((1e3, 1e6)), FitMode::LocalSlopes).unwrap();
        assert!((f.theta_hat - 0.35).abs() < 0.02, "{}", f.theta_hat);
    }

    #[test]
    fn tail_guard_suggests_cutoff() {
        let t = log_space(1.0, 1e4, 41);
        let s: Vec<f64> = t.iter().map(|t| t.powf(-1.0)).collect();
        let c = SurvivalCurve::from_values(t, s, 10_000);
        match exponent_fit(&c, Some((1.0, 1e4)), FitMode::PurePower) {
            Err(Error::TailNoise { suggested_t_hi: Some(h), .. }) => assert!(h < 1000.0 && h > 500.0, "{h}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_points() {
        let t = log_space(1.0, 1e4, 41);
        let s = vec![0.5; 41];
        let c = SurvivalCurve::from_values(t, s, 1000);
        assert!(matches!(exponent_fit(&c, Some((1.0, 2.0)), FitMode::PurePower), Err(Error::InsufficientData(_))));
    }
}
