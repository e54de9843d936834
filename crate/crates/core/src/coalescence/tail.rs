use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{line_normal, tilde_frame, CoalescenceError, LineNormal};
use crate::geometry::{DirectionFrame, ShapeNorm};
use crate::lattice::{sample_config_capped, DistributionSpec, PassageConfig, Site};
use crate::ray::{ray_box, RayError, RayField};
use crate::scaling::{replicate, RunOptions, ScalingError};
use crate::seed::replica_seed;
use crate::stats::{binomial_se, clopper_pearson, log_log_fit, summarize, LineFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceRecord {
    pub x: Site,
    pub y: Site,
    pub coalesced: bool,
    pub u: Option<Site>,
    /// `U . z~`.
    pub u1: Option<f64>,
    pub horizon: f64,
    /// One of the rays touched the boundary shell.
    pub boundary: bool,
    /// The merged part re-enters the lower side of the start line.
    pub backtrack_after_merge: bool,
}

/// Coalescence of the rays from `x` and `y` within one reverse tree.
pub(crate) fn coalesce_in_field(
    field: &RayField<'_>,
    normal: &LineNormal,
    tilde: &DirectionFrame,
    x: &Site,
    y: &Site,
    horizon: f64,
) -> Result<CoalescenceRecord, CoalescenceError> {
    let ix = field.indices(x)?;
    let iy = field.indices(y)?;
    let boundary = field.touches_shell(&ix) || field.touches_shell(&iy);
    let on_y: std::collections::HashSet<usize> = iy.iter().copied().collect();
    let region = field.region();
    let mut rec = CoalescenceRecord {
        x: *x,
        y: *y,
        coalesced: false,
        u: None,
        u1: None,
        horizon,
        boundary,
        backtrack_after_merge: false,
    };
    if let Some(kx) = ix.iter().position(|p| on_y.contains(p)) {
        let ky = iy.iter().position(|p| *p == ix[kx]).expect("common site");
        // tree paths: once met they coincide to the root
        debug_assert!(ix[kx..] == iy[ky..]);
        debug_assert!(ix[..kx].iter().all(|p| !iy[..ky].contains(p)));
        let u = region.site(ix[kx]);
        let u1 = tilde.level(&u);
        if u1 < horizon {
            rec.coalesced = true;
            rec.u = Some(u);
            rec.u1 = Some(u1);
            rec.backtrack_after_merge = ix[kx + 1..].iter().any(|&p| normal.eval(&region.site(p)) <= 0);
        }
    }
    Ok(rec)
}

/// First common site of the rays from `x` and `y`, if they merge before
/// level `r` of `tilde`. Rays go to the slab at `kappa * r` of `theta`.
pub fn coalescence_site(
    config: &PassageConfig,
    x: &Site,
    y: &Site,
    theta: &DirectionFrame,
    tilde: &DirectionFrame,
    r: f64,
    kappa: f64,
    shell: i64,
) -> Result<CoalescenceRecord, CoalescenceError> {
    if x == y {
        return Err(ScalingError::InvalidInput("x and y coincide".into()).into());
    }
    if !(kappa >= 2.0) {
        return Err(RayError::Overshoot(kappa).into());
    }
    let normal = line_normal(tilde)?;
    let field = RayField::new(config, theta, kappa * r, &[*x, *y], shell)?;
    let rec = coalesce_in_field(&field, &normal, tilde, x, y, r)?;
    if rec.boundary {
        let ix = field.indices(x)?;
        return Err(CoalescenceError::Censored(if field.touches_shell(&ix) { *x } else { *y }));
    }
    Ok(rec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    /// Height difference of the two start sites of a pair.
    pub separation: i32,
    pub r_grid: Vec<f64>,
    pub kappa: f64,
    /// Pairs per configuration, stacked along the start line.
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub r: f64,
    /// Among pairs with no boundary contact: merged at `U1 >= r` or not
    /// merged within the horizon.
    pub hits: u64,
    pub n: u64,
    pub p: f64,
    pub se: f64,
    /// SE from the spread of per-configuration means (pairs of one
    /// configuration are correlated).
    pub cluster_se: f64,
    pub ci: (f64, f64),
    /// Boundary contacts counted as `U1 >= r`.
    pub p_optimistic: f64,
    /// Boundary contacts counted as `U1 < r`.
    pub p_pessimistic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub separation: f64,
    pub rows: Vec<TailRow>,
    pub fit: Option<LineFit>,
    pub fit_optimistic: Option<LineFit>,
    pub fit_pessimistic: Option<LineFit>,
    pub boundary: u64,
    pub total: u64,
    pub backtracks: u64,
}

impl TailTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,hits,n,p,se,cluster_se,ci_lo,ci_hi,p_optimistic,p_pessimistic\n");
        for x in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                x.r, x.hits, x.n, x.p, x.se, x.cluster_se, x.ci.0, x.ci.1, x.p_optimistic, x.p_pessimistic
            );
        }
        s
    }

    /// True if the slopes of the two censoring conventions enclose the
    /// fitted slope.
    pub fn censoring_brackets_fit(&self) -> bool {
        match (&self.fit, &self.fit_optimistic, &self.fit_pessimistic) {
            (Some(f), Some(o), Some(p)) => {
                let (a, b) = (o.slope.min(p.slope), o.slope.max(p.slope));
                a <= f.slope + 1e-12 && f.slope <= b + 1e-12
            }
            _ => false,
        }
    }
}

fn fit_tail(r: &[f64], p: &[f64]) -> Option<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = r.iter().zip(p).filter(|(_, p)| **p > 0.0).map(|(a, b)| (*a, *b)).unzip();
    if x.len() < 2 {
        return None;
    }
    log_log_fit(&x, &y)
}

/// Empirical `P(U1 >= r)` for pairs of start sites `separation` rows apart.
pub fn coalescence_tail(
    spec: &DistributionSpec,
    theta: &DirectionFrame,
    shape: Option<&dyn ShapeNorm>,
    params: &TailParams,
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<(TailTable, Vec<CoalescenceRecord>), CoalescenceError> {
    if theta.dim() != 2 {
        return Err(CoalescenceError::BadDimension(theta.dim()));
    }
    let invalid = |m: &str| CoalescenceError::Scaling(ScalingError::InvalidInput(m.into()));
    if params.separation < 1 || params.pairs < 1 || replicas < 2 {
        return Err(invalid("need separation >= 1, at least one pair and 2 replicas"));
    }
    if params.r_grid.is_empty() || params.r_grid.windows(2).any(|w| !(w[0] < w[1])) || !(params.r_grid[0] > 0.0) {
        return Err(invalid("r grid must be positive and increasing"));
    }
    if !(params.kappa >= 2.0) {
        return Err(RayError::Overshoot(params.kappa).into());
    }
    spec.validate().map_err(ScalingError::from)?;
    opts.require_continuous(spec)?;
    let tilde = tilde_frame(theta, shape)?;
    let normal = line_normal(&tilde)?;
    let r_max = *params.r_grid.last().expect("nonempty");
    let ynorm = crate::geometry::norm2(tilde.y());
    let delta_max = opts.model.delta((r_max * ynorm).max(1.0)).map_err(ScalingError::from)?;
    let sep = params.separation;
    let delta_min = opts.model.delta((params.r_grid[0] * ynorm).max(1.0)).map_err(ScalingError::from)?;
    let (x0, y0) = (normal.start_at(0), normal.start_at(sep));
    let dist = f64::from(x0.coord(0) - y0.coord(0)).hypot(f64::from(sep));
    if dist > delta_min {
        return Err(invalid("pair separation exceeds Delta at the smallest r"));
    }
    // pairs 2 Delta(r_max) apart, centered on height 0
    let spacing = (2.0 * delta_max).ceil() as i32 + sep;
    let first = -(spacing * (params.pairs as i32 - 1)) / 2;
    let pairs: Vec<(Site, Site)> = (0..params.pairs as i32)
        .map(|k| {
            let h = first + k * spacing;
            (normal.start_at(h), normal.start_at(h + sep))
        })
        .collect();
    let starts: Vec<Site> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let region = ray_box(theta, &starts, params.kappa * r_max, opts)?;

    let per = replicate(replicas, |i| {
        let config = sample_config_capped(&region, spec, replica_seed(seed, "coalescence", i), opts.site_cap)?;
        let field = RayField::new(&config, theta, params.kappa * r_max, &starts, opts.shell).map_err(|e| match e {
            RayError::Scaling(s) => s,
            RayError::Geodesic(g) => ScalingError::Geodesic(g),
            other => ScalingError::InvalidInput(other.to_string()),
        })?;
        pairs
            .iter()
            .map(|(a, b)| {
                coalesce_in_field(&field, &normal, &tilde, a, b, r_max).map_err(|e| match e {
                    CoalescenceError::Scaling(s) => s,
                    CoalescenceError::Geodesic(g) => ScalingError::Geodesic(g),
                    other => ScalingError::InvalidInput(other.to_string()),
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let records: Vec<CoalescenceRecord> = per.iter().flatten().cloned().collect();
    let total = records.len() as u64;
    let boundary = records.iter().filter(|r| r.boundary).count() as u64;
    crate::scaling::check_discards(opts, "coalescence pairs", boundary as usize, total as usize)?;
    let beyond = |rec: &CoalescenceRecord, r: f64| !rec.coalesced || rec.u1.expect("coalesced") >= r;
    let rows: Vec<TailRow> = params
        .r_grid
        .iter()
        .map(|&r| {
            let clean: Vec<&CoalescenceRecord> = records.iter().filter(|x| !x.boundary).collect();
            let n = clean.len() as u64;
            let hits = clean.iter().filter(|x| beyond(x, r)).count() as u64;
            let means: Vec<f64> = per
                .iter()
                .filter_map(|reps| {
                    let c: Vec<&CoalescenceRecord> = reps.iter().filter(|x| !x.boundary).collect();
                    (!c.is_empty()).then(|| c.iter().filter(|x| beyond(x, r)).count() as f64 / c.len() as f64)
                })
                .collect();
            let p = if n > 0 { hits as f64 / n as f64 } else { f64::NAN };
            TailRow {
                r,
                hits,
                n,
                p,
                se: binomial_se(hits, n),
                cluster_se: summarize(&means).se,
                ci: clopper_pearson(hits, n, 0.95),
                p_optimistic: (hits + boundary) as f64 / total as f64,
                p_pessimistic: hits as f64 / total as f64,
            }
        })
        .collect();
    let col = |f: fn(&TailRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let table = TailTable {
        separation: dist,
        fit: fit_tail(&params.r_grid, &col(|x| x.p)),
        fit_optimistic: fit_tail(&params.r_grid, &col(|x| x.p_optimistic)),
        fit_pessimistic: fit_tail(&params.r_grid, &col(|x| x.p_pessimistic)),
        rows,
        boundary,
        total,
        backtracks: records.iter().filter(|r| r.backtrack_after_merge).count() as u64,
    };
    Ok((table, records))
}
