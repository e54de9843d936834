//! Experiment configs, deterministic parallel runs and their JSON-lines
//! records, plus the verification suites.

mod verify;

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coalescence::{coalescence_tail, TailParams};
use crate::geometry::{build_frame, EuclideanNorm};
use crate::lattice::{DistributionSpec, Site};
use crate::ray::{crossing_density, midpoint_probability, CrossingParams, Sector, Window};
use crate::scaling::{
    check_hg_gap, estimate_limit_shape, estimate_sigma, estimate_time_constant, measure_transverse_fluctuation,
    RunOptions,
};

pub use verify::{exhaustive_passage, verify, Check, Suite, VerifyOptions, VerifyReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 2,
            HarnessError::Runtime(_) => 1,
        }
    }
}

fn invalid<T>(m: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Validation(m.into()))
}

fn runtime(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

fn two() -> usize {
    2
}

fn default_crossing_kappa() -> f64 {
    crate::ray::DEFAULT_KAPPA
}

fn default_tail_kappa() -> f64 {
    2.0
}

fn one() -> usize {
    1
}

/// The experiment and its parameters; `kind` selects the variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    TimeConstant {
        direction: Vec<i32>,
        n: Vec<u32>,
    },
    Shape {
        directions: Vec<Vec<f64>>,
        radius: f64,
    },
    Sigma {
        #[serde(default = "two")]
        dim: usize,
        r: Vec<u32>,
    },
    Transverse {
        #[serde(default = "two")]
        dim: usize,
        r: Vec<u32>,
    },
    /// Frames come from the round shape `mu |x|`.
    CrossingDensity {
        theta: Vec<f64>,
        mu: f64,
        s: Vec<f64>,
        window: Window,
        #[serde(default = "default_crossing_kappa")]
        kappa: f64,
        #[serde(default)]
        sector: Option<Sector>,
    },
    Coalesce {
        theta: Vec<f64>,
        mu: f64,
        separation: i32,
        r: Vec<f64>,
        #[serde(default = "default_tail_kappa")]
        kappa: f64,
        #[serde(default = "one")]
        pairs: usize,
    },
    /// Geodesics from `-v` to `v` for each listed `v`.
    Midpoint {
        v: Vec<Vec<i32>>,
    },
    HgGap {
        #[serde(default = "two")]
        dim: usize,
        n: Vec<u32>,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::TimeConstant { .. } => "time-constant",
            Experiment::Shape { .. } => "shape",
            Experiment::Sigma { .. } => "sigma",
            Experiment::Transverse { .. } => "transverse",
            Experiment::CrossingDensity { .. } => "crossing-density",
            Experiment::Coalesce { .. } => "coalesce",
            Experiment::Midpoint { .. } => "midpoint",
            Experiment::HgGap { .. } => "hg-gap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub distribution: DistributionSpec,
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub options: RunOptions,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn check_vector(name: &str, v: &[f64]) -> Result<(), HarnessError> {
    if !(2..=4).contains(&v.len()) || v.iter().any(|x| !x.is_finite()) || v.iter().all(|x| *x == 0.0) {
        return invalid(format!("{name} must be a finite nonzero vector of dimension 2..4, got {v:?}"));
    }
    Ok(())
}

fn check_dim(dim: usize) -> Result<(), HarnessError> {
    if !(2..=4).contains(&dim) {
        return invalid(format!("dim must be 2..4, got {dim}"));
    }
    Ok(())
}

fn check_positive_ints(name: &str, v: &[u32]) -> Result<(), HarnessError> {
    if v.is_empty() || v.contains(&0) {
        return invalid(format!("{name} must be a nonempty list of positive integers"));
    }
    Ok(())
}

fn check_levels(name: &str, v: &[f64], increasing: bool) -> Result<(), HarnessError> {
    if v.is_empty() || v.iter().any(|x| !positive(*x)) {
        return invalid(format!("{name} must be a nonempty list of positive numbers"));
    }
    if increasing && v.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid(format!("{name} must be strictly increasing"));
    }
    Ok(())
}

fn ints(v: &[i32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Validation(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Check every parameter; nothing is computed or written.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicas < 2 {
            return invalid("replicas must be at least 2");
        }
        self.distribution.validate().map_err(|e| HarnessError::Validation(e.to_string()))?;
        let o = &self.options;
        if !(o.margin >= 0.0 && o.margin.is_finite())
            || !positive(o.width_factor)
            || o.shell < 0
            || !(0.0..=1.0).contains(&o.max_discard)
            || o.site_cap == 0
        {
            return invalid(format!("bad run options {o:?}"));
        }
        let unique = || {
            if !self.distribution.is_continuous() && !o.force {
                return invalid(format!(
                    "{} needs unique geodesics; weight tables are refused unless options.force is set",
                    self.experiment.name()
                ));
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::TimeConstant { direction, n } => {
                check_vector("direction", &ints(direction))?;
                check_positive_ints("n", n)
            }
            Experiment::Shape { directions, radius } => {
                if directions.is_empty() {
                    return invalid("no directions");
                }
                for d in directions {
                    check_vector("direction", d)?;
                    if d.len() != directions[0].len() {
                        return invalid("directions of mixed dimension");
                    }
                }
                if !(radius.is_finite() && *radius >= 1.0) {
                    return invalid("radius must be at least 1");
                }
                Ok(())
            }
            Experiment::Sigma { dim, r } | Experiment::Transverse { dim, r } => {
                check_dim(*dim)?;
                check_positive_ints("r", r)
            }
            Experiment::HgGap { dim, n } => {
                check_dim(*dim)?;
                check_positive_ints("n", n)?;
                if n.len() < 2 {
                    return invalid("hg-gap needs at least two values of n");
                }
                Ok(())
            }
            Experiment::CrossingDensity { theta, mu, s, window, kappa, sector } => {
                check_vector("theta", theta)?;
                if !positive(*mu) {
                    return invalid("mu must be positive");
                }
                check_levels("s", s, false)?;
                let d = theta.len();
                if window.lo.len() != d - 1
                    || window.hi.len() != d - 1
                    || window.lo.iter().zip(&window.hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b))
                {
                    return invalid(format!("window needs {} finite coordinates with lo < hi", d - 1));
                }
                if !(*kappa >= 2.0 && kappa.is_finite()) {
                    return invalid("kappa must be at least 2");
                }
                if let Some(sec) = sector {
                    if d != 2 || !positive(sec.eps) || sec.spacing() > sec.eps / 4.0 {
                        return invalid("sector needs d=2, eps > 0 and grid spacing at most eps/4");
                    }
                }
                unique()
            }
            Experiment::Coalesce { theta, mu, separation, r, kappa, pairs } => {
                check_vector("theta", theta)?;
                if theta.len() != 2 {
                    return invalid("coalescence needs d=2");
                }
                if !positive(*mu) {
                    return invalid("mu must be positive");
                }
                if *separation < 1 || *pairs < 1 {
                    return invalid("separation and pairs must be at least 1");
                }
                check_levels("r", r, true)?;
                if !(*kappa >= 2.0 && kappa.is_finite()) {
                    return invalid("kappa must be at least 2");
                }
                unique()
            }
            Experiment::Midpoint { v } => {
                if v.is_empty() {
                    return invalid("no endpoints");
                }
                for x in v {
                    check_vector("v", &ints(x))?;
                    if x.len() != v[0].len() {
                        return invalid("endpoints of mixed dimension");
                    }
                }
                unique()
            }
        }
    }
}

/// One JSON line. Every record of a run carries its id and the config hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub run_id: String,
    pub experiment: String,
    /// `run` (header holding the config), `row`, `fit` or `curvature`.
    pub record: String,
    pub parameters: Value,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub replicas: Option<u64>,
    pub censored: Option<u64>,
    pub detail: Value,
    pub tool_version: String,
    pub config_hash: String,
}

#[derive(Default)]
struct Row {
    record: &'static str,
    parameters: Value,
    estimate: Option<f64>,
    se: Option<f64>,
    ci: Option<(f64, f64)>,
    replicas: Option<u64>,
    censored: Option<u64>,
    detail: Value,
}

fn row(parameters: Value, estimate: f64, se: f64) -> Row {
    Row { record: "row", parameters, estimate: Some(estimate), se: Some(se), ..Row::default() }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Rows and CSV summary of one experiment.
fn compute(cfg: &ExperimentConfig) -> Result<(Vec<Row>, String), HarnessError> {
    let spec = &cfg.distribution;
    let (reps, seed, opts) = (cfg.replicas, cfg.seed, &cfg.options);
    let mut rows = Vec::new();
    let csv = match &cfg.experiment {
        Experiment::TimeConstant { direction, n } => {
            let dir = Site::new(direction).map_err(runtime)?;
            let t = estimate_time_constant(spec, &dir, n, reps, seed, opts).map_err(runtime)?;
            for r in &t.rows {
                rows.push(Row {
                    replicas: Some(r.replicas as u64),
                    censored: Some(r.discarded as u64),
                    detail: to_value(r),
                    ..row(json!({ "n": r.n, "direction": direction }), r.mean, r.se)
                });
            }
            t.to_csv()
        }
        Experiment::Shape { directions, radius } => {
            let est = estimate_limit_shape(spec, directions, *radius, reps, seed, opts).map_err(runtime)?;
            for r in &est.rows {
                rows.push(Row {
                    replicas: Some(r.replicas as u64),
                    censored: Some(r.discarded as u64),
                    detail: to_value(r),
                    ..row(json!({ "theta": r.theta, "target": r.target }), r.g, r.se)
                });
            }
            for c in &est.curvature {
                rows.push(Row { record: "curvature", ..row(json!({ "angle": c.angle }), c.curvature, c.se) });
            }
            rows.push(Row {
                record: "fit",
                parameters: json!({ "quantity": "mu" }),
                estimate: Some(est.mu()),
                ..Row::default()
            });
            est.to_csv()
        }
        Experiment::Sigma { dim, r } => {
            let t = estimate_sigma(spec, *dim, r, reps, seed, opts).map_err(runtime)?;
            for x in &t.rows {
                rows.push(Row {
                    replicas: Some(x.replicas as u64),
                    censored: Some(x.discarded as u64),
                    detail: to_value(x),
                    ..row(json!({ "r": x.r }), x.sigma, x.se)
                });
            }
            rows.push(Row {
                record: "fit",
                parameters: json!({ "quantity": "chi" }),
                estimate: t.model.as_ref().map(|m| m.chi),
                se: t.fit.as_ref().map(|f| f.slope_se),
                detail: json!({ "model": t.model, "fit": t.fit, "error": t.fit_error }),
                ..Row::default()
            });
            t.to_csv()
        }
        Experiment::Transverse { dim, r } => {
            let t = measure_transverse_fluctuation(spec, *dim, r, reps, seed, opts).map_err(runtime)?;
            for x in &t.rows {
                rows.push(Row {
                    replicas: Some(x.replicas as u64),
                    detail: to_value(x),
                    ..row(json!({ "r": x.r }), x.wander, x.se)
                });
            }
            rows.push(Row {
                record: "fit",
                parameters: json!({ "quantity": "xi" }),
                estimate: t.xi,
                se: t.fit.as_ref().map(|f| f.slope_se),
                detail: json!({ "fit": t.fit, "continuous": t.continuous }),
                ..Row::default()
            });
            t.to_csv()
        }
        Experiment::HgGap { dim, n } => {
            let mut e1 = vec![0; *dim];
            e1[0] = 1;
            let dir = Site::new(&e1).map_err(runtime)?;
            let means = estimate_time_constant(spec, &dir, n, reps, seed, opts).map_err(runtime)?;
            let sigma = estimate_sigma(spec, *dim, n, reps, seed, opts).map_err(runtime)?;
            let rep = check_hg_gap(&means, &sigma);
            for x in &rep.rows {
                rows.push(Row { detail: to_value(x), ..row(json!({ "n": x.n }), x.gap, x.se) });
            }
            rows.push(Row {
                record: "fit",
                parameters: json!({ "quantity": "C" }),
                estimate: rep.fitted_c,
                detail: json!({ "stable": rep.stable, "all_nonnegative": rep.all_nonnegative() }),
                ..Row::default()
            });
            rep.to_csv()
        }
        Experiment::CrossingDensity { theta, mu, s, window, kappa, sector } => {
            let shape = EuclideanNorm::scaled(theta.len(), *mu);
            let frame = build_frame(theta, &shape).map_err(runtime)?;
            let params = CrossingParams { s_list: s.clone(), window: window.clone(), kappa: *kappa, sector: sector.clone() };
            let (table, _) = crossing_density(spec, &frame, Some(&shape), &params, reps, seed, opts).map_err(runtime)?;
            let mut csv = String::from("s,volume,eps,mean_count,density,se,replicas,censored,rays\n");
            for x in &table {
                rows.push(Row {
                    replicas: Some(x.replicas as u64),
                    censored: Some(x.censored),
                    detail: to_value(x),
                    ..row(json!({ "s": x.s, "volume": x.volume, "eps": x.eps }), x.density, x.se)
                });
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    x.s, x.volume, x.eps, x.mean_count, x.density, x.se, x.replicas, x.censored, x.rays
                ));
            }
            csv
        }
        Experiment::Coalesce { theta, mu, separation, r, kappa, pairs } => {
            let shape = EuclideanNorm::scaled(2, *mu);
            let frame = build_frame(theta, &shape).map_err(runtime)?;
            let params = TailParams { separation: *separation, r_grid: r.clone(), kappa: *kappa, pairs: *pairs };
            let (t, _) = coalescence_tail(spec, &frame, Some(&shape), &params, reps, seed, opts).map_err(runtime)?;
            for x in &t.rows {
                rows.push(Row {
                    ci: Some(x.ci),
                    replicas: Some(x.n),
                    censored: Some(t.boundary),
                    detail: to_value(x),
                    ..row(json!({ "r": x.r, "separation": t.separation }), x.p, x.se)
                });
            }
            rows.push(Row {
                record: "fit",
                parameters: json!({ "quantity": "tail slope" }),
                estimate: t.fit.as_ref().map(|f| f.slope),
                se: t.fit.as_ref().map(|f| f.slope_se),
                censored: Some(t.boundary),
                detail: json!({
                    "optimistic": t.fit_optimistic,
                    "pessimistic": t.fit_pessimistic,
                    "bracketed": t.censoring_brackets_fit(),
                    "total": t.total,
                    "backtracks": t.backtracks,
                }),
                ..Row::default()
            });
            t.to_csv()
        }
        Experiment::Midpoint { v } => {
            let mut csv = String::from("v,hits,replicas,discarded,p,se,ci_lo,ci_hi\n");
            for x in v {
                let vs = Site::new(x).map_err(runtime)?;
                let neg: Vec<i32> = x.iter().map(|c| -c).collect();
                let us = Site::new(&neg).map_err(runtime)?;
                let m = midpoint_probability(spec, &us, &vs, reps, seed, opts).map_err(runtime)?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    vs, m.hits, m.replicas, m.discarded, m.p, m.se, m.ci.0, m.ci.1
                ));
                rows.push(Row {
                    ci: Some(m.ci),
                    replicas: Some(m.replicas),
                    censored: Some(m.discarded),
                    detail: to_value(&m),
                    ..row(json!({ "u": us, "v": vs }), m.p, m.se)
                });
            }
            csv
        }
    };
    Ok((rows, csv))
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub run_id: String,
    pub config_hash: String,
    pub jsonl: PathBuf,
    pub csv: PathBuf,
    pub records: usize,
}

fn count_runs(path: &Path) -> Result<usize, HarnessError> {
    let Ok(text) = fs::read_to_string(path) else { return Ok(0) };
    let mut n = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let r: ResultRecord = serde_json::from_str(line).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        n += usize::from(r.record == "run");
    }
    Ok(n)
}

/// Run a validated config. Replicas run on `threads` workers (the global
/// pool when `None`); the records do not depend on the thread count.
pub fn run_config(cfg: &ExperimentConfig, threads: Option<usize>, out: &Path) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    let (rows, csv) = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(runtime)?
            .install(|| compute(cfg))?,
        None => compute(cfg)?,
    };
    let name = cfg.experiment.name();
    let hash = cfg.hash();
    let jsonl = out.join(format!("{name}.jsonl"));
    let index = count_runs(&jsonl)? + 1;
    let run_id = format!("{}-{index:04}", &hash[..12]);
    let stamp = |r: Row| ResultRecord {
        run_id: run_id.clone(),
        experiment: name.to_string(),
        record: r.record.to_string(),
        parameters: r.parameters,
        estimate: r.estimate,
        se: r.se,
        ci: r.ci,
        replicas: r.replicas,
        censored: r.censored,
        detail: r.detail,
        tool_version: TOOL_VERSION.to_string(),
        config_hash: hash.clone(),
    };
    let mut c = cfg.clone();
    c.out = None;
    let header = Row { record: "run", parameters: json!({ "seed": cfg.seed }), detail: json!({ "config": c }), ..Row::default() };
    let mut text = String::new();
    let all: Vec<ResultRecord> = std::iter::once(header).chain(rows).map(stamp).collect();
    for r in &all {
        text.push_str(&serde_json::to_string(r).map_err(runtime)?);
        text.push('\n');
    }
    fs::create_dir_all(out).map_err(runtime)?;
    let mut f = OpenOptions::new().create(true).append(true).open(&jsonl).map_err(runtime)?;
    f.write_all(text.as_bytes()).map_err(runtime)?;
    let csv_path = out.join(format!("{name}-{run_id}.csv"));
    fs::write(&csv_path, csv).map_err(runtime)?;
    Ok(RunOutcome { run_id, config_hash: hash, jsonl, csv: csv_path, records: all.len() })
}

/// Load, override the seed, validate and run. The output directory is
/// `out`, else the config's own, else `results`.
pub fn run(
    config_path: &Path,
    threads: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<RunOutcome, HarnessError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    run_config(&cfg, threads, &dir)
}

/// Recompute the config hash of every run block in a records file and
/// check that each record carries it.
pub fn check_record_hashes(path: &Path) -> Result<bool, HarnessError> {
    let text = fs::read_to_string(path).map_err(runtime)?;
    let mut current: Option<String> = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let r: ResultRecord = serde_json::from_str(line).map_err(runtime)?;
        if r.record == "run" {
            let cfg: ExperimentConfig = serde_json::from_value(r.detail["config"].clone()).map_err(runtime)?;
            current = Some(cfg.hash());
        }
        if current.as_deref() != Some(r.config_hash.as_str()) {
            return Ok(false);
        }
    }
    Ok(current.is_some())
}

#[cfg(test)]
mod tests;
