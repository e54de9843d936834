use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{check_discards, replicate, tree_to_targets, RunOptions, ScalingError};
use crate::geometry::{FitInfo, ScalingModel};
use crate::lattice::{sample_config_capped, DistributionSpec, Site};
use crate::seed::replica_seed;
use crate::stats::{log_log_fit, sd_standard_error, summarize, LineFit};

/// Bin edges of the standardized-fluctuation histogram.
pub const HISTOGRAM_EDGES: [f64; 17] = [
    -4.0, -3.5, -3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub r: u32,
    pub mean: f64,
    pub sigma: f64,
    pub se: f64,
    pub replicas: usize,
    pub discarded: usize,
    /// Counts of `(T - mean) / sigma` per histogram bin, with the two open
    /// tails first and last.
    pub histogram: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaTable {
    pub rows: Vec<SigmaRow>,
    pub model: Option<ScalingModel>,
    pub fit: Option<LineFit>,
    pub fit_error: Option<String>,
}

impl SigmaTable {
    pub fn fitted_model(&self) -> Result<&ScalingModel, ScalingError> {
        self.model
            .as_ref()
            .ok_or_else(|| ScalingError::FitDegenerate(self.fit_error.clone().unwrap_or_default()))
    }

    pub fn row(&self, r: u32) -> Option<&SigmaRow> {
        self.rows.iter().find(|x| x.r == r)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,mean,sigma,se,replicas,discarded\n");
        for x in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{},{}", x.r, x.mean, x.sigma, x.se, x.replicas, x.discarded);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransverseRow {
    pub r: u32,
    /// Mean over replicas of the largest transverse distance of the geodesic.
    pub wander: f64,
    pub se: f64,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransverseTable {
    pub rows: Vec<TransverseRow>,
    /// False for weight tables, whose tie-broken geodesics say nothing
    /// about wandering; no exponent is fitted then.
    pub continuous: bool,
    pub xi: Option<f64>,
    pub fit: Option<LineFit>,
}

impl TransverseTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,wander,se,replicas\n");
        for x in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", x.r, x.wander, x.se, x.replicas);
        }
        s
    }
}

fn histogram(vals: &[f64], mean: f64, sd: f64) -> Vec<u64> {
    let mut h = vec![0u64; HISTOGRAM_EDGES.len() + 1];
    if sd > 0.0 {
        for v in vals {
            let z = (v - mean) / sd;
            h[HISTOGRAM_EDGES.partition_point(|e| *e <= z)] += 1;
        }
    }
    h
}

/// Fit `sigma = a r^chi` to the rows; `None` with a reason when degenerate.
pub(crate) fn fit_sigma(rows: &[SigmaRow]) -> (Option<ScalingModel>, Option<LineFit>, Option<String>) {
    if rows.len() < 3 {
        return (None, None, Some(format!("{} radii, need at least 3", rows.len())));
    }
    if let Some(r) = rows.iter().find(|r| !(r.sigma > 0.0)) {
        return (None, None, Some(format!("zero fluctuation at r={}", r.r)));
    }
    let x: Vec<f64> = rows.iter().map(|r| f64::from(r.r)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    let Some(fit) = log_log_fit(&x, &y) else {
        return (None, None, Some("least squares failed".into()));
    };
    match ScalingModel::new(fit.intercept.exp(), fit.slope) {
        Ok(m) => {
            let info = FitInfo {
                r_min: x[0],
                r_max: *x.last().expect("rows"),
                points: rows.len(),
                residual_norm: fit.residual_norm,
            };
            (Some(m.with_fit(info)), Some(fit), None)
        }
        Err(e) => (None, Some(fit), Some(e.to_string())),
    }
}

/// One pass over replicas measuring `T(0, r e_1)` and the transverse
/// wandering of its geodesic for every `r`.
pub fn estimate_sigma_and_transverse(
    spec: &DistributionSpec,
    dim: usize,
    r_list: &[u32],
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<(SigmaTable, TransverseTable), ScalingError> {
    if r_list.is_empty() || r_list.contains(&0) || replicas < 2 {
        return Err(ScalingError::InvalidInput("need positive radii and at least 2 replicas".into()));
    }
    if r_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ScalingError::InvalidInput("radii must be strictly increasing".into()));
    }
    spec.validate()?;
    let origin = Site::origin(dim);
    let targets: Vec<Site> = r_list
        .iter()
        .map(|&r| {
            let mut c = vec![0i32; dim];
            c[0] = r as i32;
            Site::new(&c)
        })
        .collect::<Result<_, _>>()?;
    let tf: Vec<Vec<f64>> = targets.iter().map(|t| t.to_f64()).collect();
    let region = opts.union_box(&origin.to_f64(), &tf)?;

    let per_replica = replicate(replicas, |i| {
        let config = sample_config_capped(&region, spec, replica_seed(seed, "sigma", i), opts.site_cap)?;
        let (tree, idx) = tree_to_targets(&config, &origin, &targets)?;
        let out: Vec<Option<(f64, f64)>> = idx
            .iter()
            .map(|&j| {
                let path = tree.trace_indices(j).expect("target finalized");
                let mut touched = false;
                let mut wander = 0.0f64;
                for &p in &path {
                    let s = region.site(p);
                    touched |= opts.shell > 0 && region.in_shell(&s, opts.shell);
                    let t2: f64 = s.coords()[1..].iter().map(|&c| f64::from(c).powi(2)).sum();
                    wander = wander.max(t2.sqrt());
                }
                (!touched).then(|| (tree.dist_index(j).expect("target finalized"), wander))
            })
            .collect();
        Ok(out)
    })?;

    let mut rows = Vec::with_capacity(r_list.len());
    let mut trows = Vec::with_capacity(r_list.len());
    for (k, &r) in r_list.iter().enumerate() {
        let kept: Vec<(f64, f64)> = per_replica.iter().filter_map(|x| x[k]).collect();
        let discarded = replicas - kept.len();
        check_discards(opts, &format!("r={r}"), discarded, replicas)?;
        let times: Vec<f64> = kept.iter().map(|x| x.0).collect();
        let s = summarize(&times);
        rows.push(SigmaRow {
            r,
            mean: s.mean,
            sigma: s.sd,
            se: sd_standard_error(&s),
            replicas: kept.len(),
            discarded,
            histogram: histogram(&times, s.mean, s.sd),
        });
        let w = summarize(&kept.iter().map(|x| x.1).collect::<Vec<_>>());
        trows.push(TransverseRow { r, wander: w.mean, se: w.se, replicas: kept.len() });
    }
    let (model, fit, fit_error) = fit_sigma(&rows);
    let continuous = spec.is_continuous();
    let tfit = if continuous && trows.len() >= 2 {
        let x: Vec<f64> = trows.iter().map(|r| f64::from(r.r)).collect();
        let y: Vec<f64> = trows.iter().map(|r| r.wander).collect();
        log_log_fit(&x, &y)
    } else {
        None
    };
    Ok((
        SigmaTable { rows, model, fit, fit_error },
        TransverseTable { rows: trows, continuous, xi: tfit.map(|f| f.slope), fit: tfit },
    ))
}

/// Sample standard deviation of `T(0, r e_1)` per radius and the fitted
/// power law.
pub fn estimate_sigma(
    spec: &DistributionSpec,
    dim: usize,
    r_list: &[u32],
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<SigmaTable, ScalingError> {
    estimate_sigma_and_transverse(spec, dim, r_list, replicas, seed, opts).map(|x| x.0)
}

/// Largest transverse distance of the geodesic from 0 to `r e_1`, averaged
/// over replicas, and the fitted wandering exponent.
pub fn measure_transverse_fluctuation(
    spec: &DistributionSpec,
    dim: usize,
    r_list: &[u32],
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<TransverseTable, ScalingError> {
    estimate_sigma_and_transverse(spec, dim, r_list, replicas, seed, opts).map(|x| x.1)
}
