use serde::{Deserialize, Serialize};

use crate::geodesic::Engine;
use crate::lattice::{sample_config_capped, DistributionSpec, Site};
use crate::scaling::{check_discards, replicate, RunOptions, ScalingError};
use crate::seed::replica_seed;
use crate::stats::{binomial_se, clopper_pearson};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointEstimate {
    pub u: Site,
    pub v: Site,
    /// Replicas whose geodesic stayed off the boundary shell.
    pub replicas: u64,
    pub discarded: u64,
    pub hits: u64,
    pub p: f64,
    pub se: f64,
    /// 95% Clopper-Pearson interval.
    pub ci: (f64, f64),
}

/// Fraction of configurations whose geodesic from `u` to `v` passes through
/// the origin.
pub fn midpoint_probability(
    spec: &DistributionSpec,
    u: &Site,
    v: &Site,
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<MidpointEstimate, ScalingError> {
    let d = u.dim();
    if v.dim() != d || replicas < 1 {
        return Err(ScalingError::InvalidInput("endpoints of different dimension or no replicas".into()));
    }
    let origin = Site::origin(d);
    // the origin must sit strictly between u and v on the segment
    let uf = u.to_f64();
    let vf = v.to_f64();
    let between = (0..d).all(|k| uf[k] * vf[k] <= 0.0 && (uf[k] == 0.0) == (vf[k] == 0.0))
        && (0..d).all(|k| (0..d).all(|j| (uf[k] * vf[j] - uf[j] * vf[k]).abs() < 1e-12))
        && *u != origin
        && *v != origin;
    if !between {
        return Err(ScalingError::InvalidInput(format!("origin is not strictly between {u} and {v}")));
    }
    spec.validate()?;
    opts.require_continuous(spec)?;
    let region = opts.segment_box(&uf, &vf)?;
    let per = replicate(replicas, |i| {
        let config = sample_config_capped(&region, spec, replica_seed(seed, "midpoint", i), opts.site_cap)?;
        let q = Engine::new(&config).with_margin(opts.shell).shortest_passage(u, v)?;
        Ok(if opts.shell > 0 && q.touched_boundary { None } else { Some(q.path.contains(&origin)) })
    })?;
    let kept: Vec<bool> = per.iter().filter_map(|x| *x).collect();
    let discarded = (replicas - kept.len()) as u64;
    check_discards(opts, &format!("{u} -> {v}"), discarded as usize, replicas)?;
    let n = kept.len() as u64;
    let hits = kept.iter().filter(|h| **h).count() as u64;
    Ok(MidpointEstimate {
        u: *u,
        v: *v,
        replicas: n,
        discarded,
        hits,
        p: if n > 0 { hits as f64 / n as f64 } else { f64::NAN },
        se: binomial_se(hits, n),
        ci: clopper_pearson(hits, n, 0.95),
    })
}
