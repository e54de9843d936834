use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ray_box, slab_thickness, RayError, RayField};
use crate::geometry::{build_frame, DirectionFrame, ShapeNorm};
use crate::lattice::{sample_config_capped, BoxRegion, DistributionSpec, PassageConfig, Site};
use crate::scaling::{RunOptions, ScalingError};
use crate::seed::replica_seed;
use crate::stats::summarize;

/// Half-open box `[lo, hi)` in transverse coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn centered(center: &[f64], half: f64) -> Self {
        Window {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, u2: &[f64]) -> bool {
        u2.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *x >= *a && *x < *b)
    }

    /// Two halves along the first transverse axis.
    pub fn split(&self) -> (Window, Window) {
        let mid = (self.lo[0] + self.hi[0]) / 2.0;
        let mut a = self.clone();
        let mut b = self.clone();
        a.hi[0] = mid;
        b.lo[0] = mid;
        (a, b)
    }

    fn validate(&self, d: usize) -> Result<(), ScalingError> {
        if self.lo.len() != d - 1 || self.hi.len() != d - 1 || self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b)) {
            return Err(ScalingError::InvalidInput(format!("bad window {self:?}")));
        }
        Ok(())
    }
}

/// Grid of `points` directions spread evenly over angles `theta +- eps`
/// (d=2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub eps: f64,
    pub points: usize,
}

impl Sector {
    pub fn spacing(&self) -> f64 {
        if self.points < 2 {
            f64::INFINITY
        } else {
            2.0 * self.eps / (self.points - 1) as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingParams {
    /// Levels at which entry points are counted; rays start at level 0.
    pub s_list: Vec<f64>,
    pub window: Window,
    pub kappa: f64,
    pub sector: Option<Sector>,
}

/// One replica's count at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub replica: u64,
    pub s: f64,
    pub count: u64,
    pub density: f64,
    pub censored: u64,
    pub rays: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub s: f64,
    pub window: Window,
    pub volume: f64,
    pub eps: f64,
    pub mean_count: f64,
    pub density: f64,
    pub se: f64,
    pub replicas: usize,
    pub censored: u64,
    pub rays: u64,
}

/// Sites with `-thick < x . z <= 0` whose transverse coordinates lie in the
/// window widened by `pad` on every side.
pub fn start_band(frame: &DirectionFrame, window: &Window, pad: f64) -> Vec<Site> {
    let d = frame.dim();
    let thick = slab_thickness(frame);
    let wlo: Vec<f64> = window.lo.iter().map(|v| v - pad).collect();
    let whi: Vec<f64> = window.hi.iter().map(|v| v + pad).collect();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for u1 in [-thick, 0.0] {
        for corner in 0..1usize << (d - 1) {
            let u2: Vec<f64> = (0..d - 1).map(|i| if corner >> i & 1 == 0 { wlo[i] } else { whi[i] }).collect();
            let x = frame.from_coords(&crate::geometry::ThetaCoords { u1, u2 });
            for k in 0..d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
    }
    let lo: Vec<i32> = lo.iter().map(|v| v.floor() as i32 - 1).collect();
    let hi: Vec<i32> = hi.iter().map(|v| v.ceil() as i32 + 1).collect();
    let bbox = BoxRegion::new(Site::new(&lo).expect("dim"), Site::new(&hi).expect("dim")).expect("ordered");
    bbox.sites()
        .filter(|s| {
            let tc = frame.site_coords(s);
            let l = frame.level(s);
            l > -thick && l <= 0.0 && tc.u2.iter().enumerate().all(|(i, x)| *x >= wlo[i] && *x <= whi[i])
        })
        .collect()
}

fn sector_frames(frame: &DirectionFrame, sector: &Sector, shape: &dyn ShapeNorm) -> Result<Vec<DirectionFrame>, RayError> {
    if frame.dim() != 2 {
        return Err(ScalingError::InvalidInput("sector mode needs d=2".into()).into());
    }
    let spacing = sector.spacing();
    if spacing > sector.eps / 4.0 {
        return Err(RayError::UnderResolvedSector { spacing, eps: sector.eps });
    }
    let a0 = frame.theta()[1].atan2(frame.theta()[0]);
    (0..sector.points)
        .map(|i| {
            let a = a0 - sector.eps + spacing * i as f64;
            Ok(build_frame(&[a.cos(), a.sin()], shape)?)
        })
        .collect()
}

/// Distinct entry points per level of the uncensored rays of one
/// configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct EntrySets {
    pub sets: Vec<BTreeSet<Site>>,
    pub censored: u64,
    pub rays: u64,
}

/// Entry points into `{x . z >= s}` (levels of `frame`) for each `s`, over
/// the rays from `band` in every direction of `frames`. A ray is censored if
/// it touches the shell or misses some level.
pub fn entry_sets(
    config: &PassageConfig,
    frame: &DirectionFrame,
    frames: &[DirectionFrame],
    band: &[Site],
    s_list: &[f64],
    target: f64,
    shell: i64,
) -> Result<EntrySets, RayError> {
    let region = config.region();
    let mut sets = vec![BTreeSet::new(); s_list.len()];
    let mut censored = 0u64;
    let mut rays = 0u64;
    for f in frames {
        let field = RayField::new(config, f, target, band, shell)?;
        for s in band {
            rays += 1;
            let idx = field.indices(s)?;
            if field.touches_shell(&idx) {
                censored += 1;
                continue;
            }
            let sites: Vec<Site> = idx.iter().map(|&p| region.site(p)).collect();
            let hits: Vec<Site> = s_list
                .iter()
                .filter_map(|&lvl| sites.iter().find(|x| frame.level(x) >= lvl).copied())
                .collect();
            if hits.len() < s_list.len() {
                censored += 1;
                continue;
            }
            for (set, h) in sets.iter_mut().zip(hits) {
                set.insert(h);
            }
        }
    }
    Ok(EntrySets { sets, censored, rays })
}

/// Entry points whose transverse coordinates fall in `window`.
pub fn count_in_window(frame: &DirectionFrame, set: &BTreeSet<Site>, window: &Window) -> u64 {
    set.iter().filter(|x| window.contains(&frame.site_coords(x).u2)).count() as u64
}

/// Mean density of distinct entry points into `{x . z >= s}` of rays started
/// from the band below level 0, counted over the window.
pub fn crossing_density(
    spec: &DistributionSpec,
    frame: &DirectionFrame,
    shape: Option<&dyn ShapeNorm>,
    params: &CrossingParams,
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<(Vec<CrossingRow>, Vec<CrossingRecord>), RayError> {
    let d = frame.dim();
    params.window.validate(d)?;
    if params.s_list.is_empty() || params.s_list.iter().any(|s| !(*s > 0.0)) || replicas < 2 {
        return Err(ScalingError::InvalidInput("need positive levels and at least 2 replicas".into()).into());
    }
    if !(params.kappa >= 2.0) {
        return Err(RayError::Overshoot(params.kappa));
    }
    spec.validate().map_err(ScalingError::from)?;
    opts.require_continuous(spec)?;
    let frames = match (&params.sector, shape) {
        (Some(sec), Some(shape)) if sec.eps > 0.0 => sector_frames(frame, sec, shape)?,
        (Some(sec), None) if sec.eps > 0.0 => {
            return Err(ScalingError::InvalidInput("sector mode needs a shape".into()).into())
        }
        _ => vec![frame.clone()],
    };
    let eps = params.sector.as_ref().map_or(0.0, |s| s.eps);
    let s_max = params.s_list.iter().copied().fold(0.0, f64::max);
    let target = params.kappa * s_max;
    let ynorm = crate::geometry::norm2(frame.y());
    let pad = opts.width_factor / 2.0 * opts.model.delta((s_max * ynorm).max(1.0)).map_err(ScalingError::from)?;
    let band = start_band(frame, &params.window, pad);
    let mut region: Option<BoxRegion> = None;
    for f in &frames {
        let b = ray_box(f, &band, target, opts)?;
        region = Some(match region {
            None => b,
            Some(r) => {
                let lo: Vec<i32> = (0..d).map(|k| r.lo().coord(k).min(b.lo().coord(k))).collect();
                let hi: Vec<i32> = (0..d).map(|k| r.hi().coord(k).max(b.hi().coord(k))).collect();
                BoxRegion::new(Site::new(&lo)?, Site::new(&hi)?)?
            }
        });
    }
    let region = region.expect("at least one frame");
    let volume = params.window.volume();
    let ns = params.s_list.len();

    let per_replica = crate::scaling::replicate(replicas, |i| {
        let config = sample_config_capped(&region, spec, replica_seed(seed, "crossing", i), opts.site_cap)?;
        let e = entry_sets(&config, frame, &frames, &band, &params.s_list, target, opts.shell).map_err(into_scaling)?;
        let counts: Vec<u64> = e.sets.iter().map(|set| count_in_window(frame, set, &params.window)).collect();
        Ok((counts, e.censored, e.rays))
    })?;

    let mut records = Vec::with_capacity(replicas * ns);
    for (i, (counts, censored, rays)) in per_replica.iter().enumerate() {
        for (k, &s) in params.s_list.iter().enumerate() {
            records.push(CrossingRecord {
                replica: i as u64,
                s,
                count: counts[k],
                density: counts[k] as f64 / volume,
                censored: *censored,
                rays: *rays,
            });
        }
    }
    let censored: u64 = per_replica.iter().map(|r| r.1).sum();
    let rays: u64 = per_replica.iter().map(|r| r.2).sum();
    crate::scaling::check_discards(opts, "start band", censored as usize, rays as usize)?;
    let rows = params
        .s_list
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let c: Vec<f64> = per_replica.iter().map(|r| r.0[k] as f64).collect();
            let st = summarize(&c);
            CrossingRow {
                s,
                window: params.window.clone(),
                volume,
                eps,
                mean_count: st.mean,
                density: st.mean / volume,
                se: st.se / volume,
                replicas,
                censored,
                rays,
            }
        })
        .collect();
    Ok((rows, records))
}

fn into_scaling(e: RayError) -> ScalingError {
    match e {
        RayError::Scaling(s) => s,
        RayError::Geodesic(g) => ScalingError::Geodesic(g),
        RayError::Lattice(l) => ScalingError::Lattice(l),
        RayError::Geometry(g) => ScalingError::Geometry(g),
        other => ScalingError::InvalidInput(other.to_string()),
    }
}
