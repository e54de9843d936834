use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{check_discards, replicate, tree_to_targets, RunOptions, ScalingError};
use crate::lattice::{sample_config_capped, DistributionSpec, Site};
use crate::seed::replica_seed;
use crate::stats::summarize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub n: u32,
    /// Mean of `T(0, n x) / n`.
    pub mean: f64,
    pub se: f64,
    pub replicas: usize,
    pub discarded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanTable {
    pub direction: Site,
    pub rows: Vec<MeanRow>,
}

impl MeanTable {
    pub fn row(&self, n: u32) -> Option<&MeanRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mean,se,replicas,discarded\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.n, r.mean, r.se, r.replicas, r.discarded);
        }
        s
    }
}

/// `m_n = mean T(0, n x) / n` for each `n`, one configuration per replica
/// serving every `n`.
pub fn estimate_time_constant(
    spec: &DistributionSpec,
    direction: &Site,
    n_list: &[u32],
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<MeanTable, ScalingError> {
    if n_list.is_empty() || n_list.contains(&0) || replicas < 2 {
        return Err(ScalingError::InvalidInput("need positive n values and at least 2 replicas".into()));
    }
    if direction.coords().iter().all(|c| *c == 0) {
        return Err(ScalingError::InvalidInput("zero direction".into()));
    }
    spec.validate()?;
    let d = direction.dim();
    let origin = Site::origin(d);
    let targets: Vec<Site> = n_list
        .iter()
        .map(|&n| {
            let c: Vec<i32> = direction.coords().iter().map(|x| x * n as i32).collect();
            Site::new(&c)
        })
        .collect::<Result<_, _>>()?;
    let target_f: Vec<Vec<f64>> = targets.iter().map(|t| t.to_f64()).collect();
    let region = opts.union_box(&origin.to_f64(), &target_f)?;

    let per_replica = replicate(replicas, |i| {
        let config = sample_config_capped(&region, spec, replica_seed(seed, "time-constant", i), opts.site_cap)?;
        let (tree, idx) = tree_to_targets(&config, &origin, &targets)?;
        let out: Vec<Option<f64>> = idx
            .iter()
            .map(|&j| {
                let path = tree.trace_indices(j).expect("target finalized");
                let touched = opts.shell > 0 && path.iter().any(|&p| region.in_shell(&region.site(p), opts.shell));
                (!touched).then(|| tree.dist_index(j).expect("target finalized"))
            })
            .collect();
        Ok(out)
    })?;

    let mut rows = Vec::with_capacity(n_list.len());
    for (k, &n) in n_list.iter().enumerate() {
        let vals: Vec<f64> = per_replica.iter().filter_map(|r| r[k]).map(|t| t / f64::from(n)).collect();
        let discarded = replicas - vals.len();
        check_discards(opts, &format!("n={n}"), discarded, replicas)?;
        let s = summarize(&vals);
        rows.push(MeanRow { n, mean: s.mean, se: s.se, replicas: vals.len(), discarded });
    }
    Ok(MeanTable { direction: *direction, rows })
}
