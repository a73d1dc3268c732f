use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::conditioned::sample_on_chain;
use super::{ConditionedSample, ExperimentConfig, FluctuationConfig, PassageConfig, Start};
use crate::error::{invalid, Error, Result};
use crate::estimator::{exponent_fit, survival_curve, ExponentFit, SurvivalCurve};
use crate::fluctuation::{
    kappa_estimate, phi_estimate, positivity_table, renewal_from_records, sample_ladder_record, write_phi_kappa_csv,
    AreaWalk, KappaGrid, KappaSettings, LadderLimits, TAIL_CUTOFF,
};
use crate::model::ChainSpec;
use crate::numeric::ols;
use crate::parallel::run_replicas;
use crate::rng::derive_seed;
use crate::sim::{first_passage, sample_levy_increment, ExcursionLimits, LevyIncrement};
use crate::theory::{family_exponents, ExponentBundle};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub status: RunStatus,
    pub failures: Vec<String>,
    pub config_sha256: String,
    pub code_version: String,
    pub seed: u64,
    /// Canonical config; feeding it back to `run` reproduces every file.
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassageSummary {
    pub barrier: f64,
    pub start: Option<Start>,
    pub horizon: f64,
    pub replicas: u64,
    pub excluded_boundary: u64,
    pub excluded_fraction: f64,
    pub fit: Option<ExponentFit>,
    pub fit_error: Option<String>,
    /// The curve behind `survival.csv`, for refits at other windows.
    #[serde(skip)]
    pub curve: Option<SurvivalCurve>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSummary {
    pub phi_slope: Option<f64>,
    pub phi_unusable: usize,
    pub kappa_plus_slope: Option<f64>,
    pub kappa_minus_slope: Option<f64>,
    /// `(max − min) / mean` of `κ̂₊κ̂₋/Φ̂` over the product window.
    pub product_spread: Option<f64>,
    pub product_window: Option<(f64, f64)>,
    pub kappa_flagged: Option<bool>,
    pub renewal_slope: Option<f64>,
    pub renewal_exclusion: Option<f64>,
    /// Mean of `P̂(S_n ≥ 0)` over all block indices.
    pub positivity_cesaro: Option<f64>,
    pub positivity_terminal: Option<f64>,
    pub touched_boundary: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub status: RunStatus,
    pub failures: Vec<String>,
    pub theory: Option<ExponentBundle>,
    pub passage: Option<PassageSummary>,
    pub fluctuation: Option<FluctuationSummary>,
    pub conditioned: Option<ConditionedSample>,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

const PHI_SALT: u64 = 1;
const KAPPA_SALT: u64 = 2;
const RENEWAL_SALT: u64 = 3;
const POSITIVITY_SALT: u64 = 4;

struct Files {
    dir: PathBuf,
    list: Vec<FileEntry>,
}

impl Files {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, bytes)?;
        self.list.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn in_range(v: f64, r: (f64, f64)) -> bool {
    v >= r.0 && v <= r.1
}

/// Runs every task in `config` and writes into `<out_root>/<name>/`.
///
/// Outputs depend only on the config and seed, never on the worker count.
/// Statistical and truncation failures do not abort: the run is marked
/// failed in the report and manifest, and everything computed so far is kept.
pub fn run_experiment(config: &ExperimentConfig, out_root: &Path) -> Result<RunReport> {
    let chain = config.validate()?;
    let dir = out_root.join(&config.name);
    fs::create_dir_all(&dir)?;
    let mut files = Files { dir: dir.clone(), list: Vec::new() };
    let mut failures = Vec::new();
    let budget = config.model.truncation_budget;

    let passage = match &config.passage {
        Some(p) => Some(run_passage(config, p, &chain, budget, &mut files, &mut failures)?),
        None => None,
    };
    let fluctuation = match &config.fluctuation {
        Some(f) => Some(run_fluctuation(config, f, &chain, budget, &mut files, &mut failures)?),
        None => None,
    };
    let conditioned = match &config.conditioned {
        Some(c) => {
            match sample_on_chain(&chain, c.z, c.t_target, c.count, c.pilot_replicas, config.workers, config.seed) {
                Ok(s) => {
                    for (k, tr) in s.trajectories.iter().enumerate() {
                        let mut buf = Vec::new();
                        tr.write_csv(&mut buf)?;
                        files.put(&format!("conditioned/trajectory_{k:04}.csv"), &buf)?;
                    }
                    Some(s)
                }
                Err(e @ (Error::AcceptanceTooSmall { .. } | Error::InsufficientData(_))) => {
                    failures.push(format!("conditioned: {e}"));
                    None
                }
                Err(e) => return Err(e),
            }
        }
        None => None,
    };

    check_expectations(config, passage.as_ref(), fluctuation.as_ref(), &mut failures);
    let status = if failures.is_empty() { RunStatus::Ok } else { RunStatus::Failed };
    let report = RunReport {
        name: config.name.clone(),
        status,
        failures: failures.clone(),
        theory: family_exponents(&config.model.family).ok(),
        passage,
        fluctuation,
        conditioned,
        out_dir: dir.clone(),
    };
    files.put("report.json", &serde_json::to_vec_pretty(&report)?)?;
    let canonical = config.canonical()?;
    let manifest = Manifest {
        name: config.name.clone(),
        status,
        failures,
        config_sha256: sha256_hex(&serde_json::to_vec(&canonical)?),
        code_version: CODE_VERSION.to_string(),
        seed: config.seed,
        config: canonical,
        files: files.list,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(report)
}

/// [`run_experiment`] for a config whose passage task starts away from the
/// origin; rejects configs without an admissible start.
pub fn run_nonzero_start(config: &ExperimentConfig, out_root: &Path) -> Result<RunReport> {
    let start = config.passage.and_then(|p| p.start).ok_or_else(|| invalid("passage.start", "missing"))?;
    start.check()?;
    run_experiment(config, out_root)
}

fn run_passage(
    config: &ExperimentConfig,
    p: &PassageConfig,
    chain: &ChainSpec,
    budget: f64,
    files: &mut Files,
    failures: &mut Vec<String>,
) -> Result<PassageSummary> {
    let (zeta0, x0) = p.start.map_or((0.0, 0.0), |s| (s.z, s.x));
    let site = chain.index_of(x0).ok_or(Error::NotInSupport { index: 0, x: x0 })?;
    let barrier = p.barrier();
    let out = run_replicas(config.replicas, config.workers, config.seed, |_, rng| {
        first_passage(chain, site, zeta0, barrier, p.horizon, rng)
    })?;
    let times: Vec<Option<f64>> = out.iter().filter(|o| !o.touched_boundary).map(|o| o.time).collect();
    let excluded = (out.len() - times.len()) as u64;
    let excluded_fraction = excluded as f64 / out.len() as f64;
    if excluded_fraction > budget {
        let e = Error::TruncationBudget { fraction: excluded_fraction, budget, what: "passage replicas touched the grid ends".into() };
        failures.push(format!("passage: {e}"));
    }
    let mut summary = PassageSummary {
        barrier,
        start: p.start,
        horizon: p.horizon,
        replicas: config.replicas,
        excluded_boundary: excluded,
        excluded_fraction,
        fit: None,
        fit_error: None,
        curve: None,
    };
    let curve = match survival_curve(&times, p.horizon, &p.t_grid()?, barrier) {
        Ok(c) => c,
        Err(e @ Error::InsufficientData(_)) => {
            failures.push(format!("passage: {e}"));
            summary.fit_error = Some(e.to_string());
            return Ok(summary);
        }
        Err(e) => return Err(e),
    };
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    files.put("survival.csv", &buf)?;
    match exponent_fit(&curve, p.fit.window, p.fit.mode) {
        Ok(fit) => {
            files.put("fit.json", &serde_json::to_vec_pretty(&fit)?)?;
            summary.fit = Some(fit);
        }
        Err(e) => {
            failures.push(format!("fit: {e}"));
            summary.fit_error = Some(e.to_string());
        }
    }
    summary.curve = Some(curve);
    Ok(summary)
}

fn run_fluctuation(
    config: &ExperimentConfig,
    f: &FluctuationConfig,
    chain: &ChainSpec,
    budget: f64,
    files: &mut Files,
    failures: &mut Vec<String>,
) -> Result<FluctuationSummary> {
    let lim = ExcursionLimits { max_steps: f.max_excursion_steps, max_length: f64::INFINITY };
    let (seed, workers) = (config.seed, config.workers);
    let mut s = FluctuationSummary::default();
    let mut total_touched = 0;

    if let Some(pc) = &f.phi {
        let q = pc.q_grid.points()?;
        let inc: Vec<LevyIncrement> = run_replicas(pc.samples, workers, derive_seed(seed, PHI_SALT), |_, rng| {
            sample_levy_increment(chain, 1.0, &lim, rng)
        })?
        .into_iter()
        .collect::<Result<_>>()?;
        total_touched += touch("phi", budget, inc.iter().filter(|i| i.touched_boundary).count() as u64, pc.samples, failures);
        let dtau: Vec<f64> = inc.iter().map(|i| i.dtau).collect();
        let phi = phi_estimate(&dtau, &q)?;
        if let Err(e) = phi.check_shape() {
            failures.push(format!("phi: {e}"));
        }
        s.phi_unusable = phi.usable.iter().filter(|u| !**u).count();
        s.phi_slope = phi.slope(q[0], q[q.len() - 1]).ok();
        let kappa = match &f.kappa {
            Some(kc) => {
                if !phi.usable.iter().all(|u| *u) {
                    return Err(invalid("kappa", "phi is unusable somewhere on the q grid"));
                }
                let q_min_phi = phi.phi[0];
                let grid = KappaGrid {
                    t_min: kc.t_min,
                    t_max: TAIL_CUTOFF.max(TAIL_CUTOFF / q_min_phi),
                    points_per_decade: kc.points_per_decade,
                };
                let settings = KappaSettings {
                    grid,
                    replicas: kc.replicas,
                    workers,
                    seed: derive_seed(seed, KAPPA_SALT),
                    tolerance: kc.tolerance,
                    limits: lim,
                };
                let k = kappa_estimate(chain, &q, &phi.phi, &settings)?;
                total_touched += touch("kappa", budget, k.touched_boundary, kc.replicas, failures);
                let lq: Vec<f64> = q.iter().map(|v| v.ln()).collect();
                s.kappa_plus_slope = Some(ols(&lq, &k.log_kappa_plus).1);
                s.kappa_minus_slope = Some(ols(&lq, &k.log_kappa_minus).1);
                s.kappa_flagged = Some(k.flagged);
                if k.flagged {
                    failures.push("kappa: truncation bound exceeds the tolerance".into());
                }
                let win = kc.product_window.unwrap_or((q[q.len() - 1] / 100.0, q[q.len() - 1]));
                let prod: Vec<f64> = (0..q.len())
                    .filter(|&j| q[j] >= win.0 * (1.0 - 1e-9) && q[j] <= win.1 * (1.0 + 1e-9))
                    .map(|j| (k.log_kappa_plus[j] + k.log_kappa_minus[j] - phi.phi[j].ln()).exp())
                    .collect();
                if prod.len() >= 2 {
                    let (lo, hi) = prod.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
                    s.product_spread = Some((hi - lo) / crate::numeric::mean(&prod));
                    s.product_window = Some(win);
                }
                Some(k)
            }
            None => None,
        };
        let mut buf = Vec::new();
        write_phi_kappa_csv(&mut buf, &phi, kappa.as_ref())?;
        files.put("phi_kappa.csv", &buf)?;
    }

    if let Some(rc) = &f.renewal {
        let z = rc.z_grid.points()?;
        let ll = LadderLimits { k: rc.k, z_max: z[z.len() - 1], max_excursions: u64::MAX, max_steps: rc.max_steps_per_walk };
        let recs = run_replicas(rc.walks, workers, derive_seed(seed, RENEWAL_SALT), |_, rng| {
            sample_ladder_record(chain, &ll, &lim, rng)
        })?;
        total_touched += touch("renewal", budget, recs.iter().filter(|r| r.touched_boundary).count() as u64, rc.walks, failures);
        let table = renewal_from_records(&recs, &z, rc.k)?;
        if !table.is_nondecreasing() {
            failures.push("renewal: estimate decreases in z".into());
        }
        let (lo, hi) = rc.slope_window.unwrap_or((z[0], z[z.len() - 1]));
        s.renewal_slope = table.slope(lo, hi).ok();
        s.renewal_exclusion = Some(table.exclusion_fraction);
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        files.put("renewal.csv", &buf)?;
    }

    if let Some(pc) = &f.positivity {
        let rows = run_replicas(pc.walks, workers, derive_seed(seed, POSITIVITY_SALT), |_, rng| -> Result<(AreaWalk, bool)> {
            let (mut dz, mut dt) = (Vec::with_capacity(pc.blocks), Vec::with_capacity(pc.blocks));
            let mut hit = false;
            for _ in 0..pc.blocks {
                let inc = sample_levy_increment(chain, pc.block_local_time, &lim, rng)?;
                dz.push(inc.dz);
                dt.push(inc.dtau);
                hit |= inc.touched_boundary;
            }
            Ok((AreaWalk::new(dz, dt)?, hit))
        })?;
        let rows: Vec<(AreaWalk, bool)> = rows.into_iter().collect::<Result<_>>()?;
        total_touched += touch("positivity", budget, rows.iter().filter(|r| r.1).count() as u64, pc.walks, failures);
        let walks: Vec<AreaWalk> = rows.into_iter().map(|r| r.0).collect();
        let table = positivity_table(&walks)?;
        s.positivity_cesaro = table.cesaro.last().copied();
        s.positivity_terminal = table.fraction.last().copied();
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        files.put("positivity.csv", &buf)?;
    }
    s.touched_boundary = total_touched;
    Ok(s)
}

/// Records a budget failure when too many samples touched the grid ends;
/// returns `count`.
fn touch(what: &str, budget: f64, count: u64, units: u64, failures: &mut Vec<String>) -> u64 {
    let fraction = count as f64 / units.max(1) as f64;
    if fraction > budget {
        let e = Error::TruncationBudget { fraction, budget, what: format!("{what} samples touched the grid ends") };
        failures.push(format!("{what}: {e}"));
    }
    count
}

fn check_expectations(
    config: &ExperimentConfig,
    passage: Option<&PassageSummary>,
    fl: Option<&FluctuationSummary>,
    failures: &mut Vec<String>,
) {
    let e = &config.expect;
    let mut check = |label: &str, range: Option<(f64, f64)>, v: Option<f64>| {
        if let Some(r) = range {
            match v {
                Some(v) if in_range(v, r) => {}
                Some(v) => failures.push(format!("{label} = {v} outside [{}, {}]", r.0, r.1)),
                None => failures.push(format!("{label} expected but not estimated")),
            }
        }
    };
    check("theta_hat", e.theta, passage.and_then(|p| p.fit.as_ref()).map(|f| f.theta_hat));
    check("kappa_plus_slope", e.kappa_plus_slope, fl.and_then(|f| f.kappa_plus_slope));
    check("renewal_slope", e.renewal_slope, fl.and_then(|f| f.renewal_slope));
    check("positivity", e.positivity, fl.and_then(|f| f.positivity_cesaro));
    check("product_spread", e.product_spread_max.map(|m| (0.0, m)), fl.and_then(|f| f.product_spread));
}
