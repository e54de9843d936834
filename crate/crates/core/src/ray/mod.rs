//! Finite-horizon approximations of semi-infinite geodesics in a fixed
//! direction, crossing densities of their entry points and midpoint
//! probabilities of point-to-point geodesics.
//!
//! Every ray in a configuration comes from one reverse tree grown out of the
//! target slab `{target <= x . z < target + thick}`, with `thick` the largest
//! `|z_k|`: a lattice path cannot cross the level `target` without visiting
//! that slab, so tree paths are geodesics to the whole far halfspace.

mod density;
mod midpoint;

use serde::Serialize;
use thiserror::Error;

use crate::geodesic::{Engine, GeodesicError, GeodesicTree, LatticePath};
use crate::geometry::{deviation_cost, DirectionFrame, GeometryError, ScalingModel};
use crate::lattice::{BoxRegion, LatticeError, PassageConfig, Site};
use crate::scaling::{RunOptions, ScalingError};

pub use density::{
    count_in_window, crossing_density, entry_sets, start_band, CrossingParams, CrossingRecord, CrossingRow, EntrySets,
    Sector, Window,
};
pub use midpoint::{midpoint_probability, MidpointEstimate};

#[derive(Debug, Error)]
pub enum RayError {
    #[error("direction grid spacing {spacing} exceeds a quarter of the sector half-angle {eps}")]
    UnderResolvedSector { spacing: f64, eps: f64 },
    #[error("overshoot factor {0} is below 2")]
    Overshoot(f64),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Default overshoot factor.
pub const DEFAULT_KAPPA: f64 = 4.0;

/// Geodesic from `start` to the far slab, with the position of its first
/// site at level `horizon` or above.
#[derive(Clone, Debug, Serialize)]
pub struct RayApprox {
    pub start: Site,
    /// Level (not distance from `start`) of the halfspace whose entry point
    /// ends the converged prefix.
    pub horizon: f64,
    pub path: LatticePath,
    /// Index into `path` of the entry point into `{x . z >= horizon}`.
    pub entry: usize,
    pub censored: bool,
}

impl RayApprox {
    pub fn entry_point(&self) -> Site {
        self.path.sites()[self.entry]
    }

    /// The part treated as converged: `start` through the entry point.
    pub fn prefix(&self) -> LatticePath {
        self.path.slice(0, self.entry)
    }

    /// First site at level `s` or above.
    pub fn entry_at(&self, frame: &DirectionFrame, s: f64) -> Option<Site> {
        self.path.sites().iter().find(|x| frame.level(x) >= s).copied()
    }

    /// Largest deviation cost of a prefix site relative to `start`.
    pub fn max_deviation_cost(&self, model: &ScalingModel, frame: &DirectionFrame) -> Result<f64, GeometryError> {
        let s0 = self.start.to_f64();
        let mut best = 0.0f64;
        for x in &self.path.sites()[1..=self.entry] {
            let u: Vec<f64> = x.to_f64().iter().zip(&s0).map(|(a, b)| a - b).collect();
            best = best.max(deviation_cost(model, frame, &u)?);
        }
        Ok(best)
    }
}

/// Thickness of a slab that every lattice path crossing a level must visit.
pub fn slab_thickness(frame: &DirectionFrame) -> f64 {
    frame.z().iter().fold(0.0f64, |m, z| m.max(z.abs()))
}

/// Reverse tree from the slab at `target`, shared by all rays of one
/// configuration.
pub struct RayField<'c> {
    config: &'c PassageConfig,
    frame: DirectionFrame,
    target: f64,
    tree: GeodesicTree,
    shell: i64,
}

impl<'c> RayField<'c> {
    /// Grow the tree until every site in `starts` is finalized.
    pub fn new(
        config: &'c PassageConfig,
        frame: &DirectionFrame,
        target: f64,
        starts: &[Site],
        shell: i64,
    ) -> Result<Self, RayError> {
        let region = config.region();
        let thick = slab_thickness(frame);
        let n = region.num_sites() as usize;
        let mut sources = Vec::new();
        for i in 0..n {
            let l = frame.level(&region.site(i));
            if l >= target && l < target + thick {
                sources.push(i);
            }
        }
        if sources.is_empty() {
            return Err(GeodesicError::NoSources.into());
        }
        let mut mask = vec![false; n];
        for s in starts {
            let i = region.index(s).ok_or(GeodesicError::OutOfBox(*s))?;
            mask[i] = true;
        }
        let tree = Engine::new(config).tree_until(&sources, &mask);
        Ok(RayField { config, frame: frame.clone(), target, tree, shell })
    }

    pub fn frame(&self) -> &DirectionFrame {
        &self.frame
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn tree(&self) -> &GeodesicTree {
        &self.tree
    }

    pub fn region(&self) -> &BoxRegion {
        self.config.region()
    }

    /// Site indices of the ray from `start`, `start` first.
    pub(crate) fn indices(&self, start: &Site) -> Result<Vec<usize>, GeodesicError> {
        let i = self.region().index(start).ok_or(GeodesicError::OutOfBox(*start))?;
        self.tree.trace_indices(i).ok_or(GeodesicError::Unreached(*start))
    }

    pub(crate) fn touches_shell(&self, idx: &[usize]) -> bool {
        let region = self.region();
        self.shell > 0 && idx.iter().any(|&p| region.in_shell(&region.site(p), self.shell))
    }

    pub fn ray(&self, start: &Site, horizon: f64) -> Result<RayApprox, RayError> {
        if horizon > self.target {
            return Err(ScalingError::InvalidInput("horizon beyond the target slab".into()).into());
        }
        let idx = self.indices(start)?;
        let censored = self.touches_shell(&idx);
        let region = self.region();
        let sites: Vec<Site> = idx.iter().map(|&p| region.site(p)).collect();
        let entry = sites.iter().position(|x| self.frame.level(x) >= horizon).ok_or(GeodesicError::NoEntry)?;
        Ok(RayApprox { start: *start, horizon, path: LatticePath::new(sites)?, entry, censored })
    }
}

/// True if the tube of half-width `half` (lattice units) around
/// `start + t y`, `0 <= t <= horizon`, fits inside `region`.
pub fn tube_fits(region: &BoxRegion, frame: &DirectionFrame, start: &Site, horizon: f64, half: f64) -> bool {
    let d = frame.dim();
    let s = start.to_f64();
    (0..d).all(|k| {
        let spread = half * frame.basis().iter().map(|b| b[k] * b[k]).sum::<f64>().sqrt();
        [0.0, horizon].iter().all(|t| {
            let c = s[k] + t * frame.y()[k];
            c - spread >= f64::from(region.lo().coord(k)) && c + spread <= f64::from(region.hi().coord(k))
        })
    })
}

/// Approximate ray from `start`: the geodesic to the slab at `kappa *
/// horizon`, converged up to its entry at level `horizon`. Censored if it
/// touches the outer `shell` layers or the tube of half-width `wf/2 *
/// Delta(horizon)` leaves the box.
pub fn approx_theta_ray(
    config: &PassageConfig,
    start: &Site,
    frame: &DirectionFrame,
    horizon: f64,
    kappa: f64,
    opts: &RunOptions,
) -> Result<RayApprox, RayError> {
    if !(kappa >= 2.0) {
        return Err(RayError::Overshoot(kappa));
    }
    let region = config.region();
    if !region.contains(start) {
        return Err(GeodesicError::OutOfBox(*start).into());
    }
    let target = frame.level(start) + kappa * horizon;
    let field = RayField::new(config, frame, target, &[*start], opts.shell)?;
    let mut ray = field.ray(start, frame.level(start) + horizon)?;
    let len = horizon * crate::geometry::norm2(frame.y());
    let half = opts.width_factor / 2.0 * opts.model.delta(len.max(1.0))?;
    ray.censored |= !tube_fits(region, frame, start, horizon, half);
    Ok(ray)
}

/// Box for rays from `starts` to the slab at level `target`: the starts'
/// transverse extent plus half the sizing-rule width on each side,
/// `margin * L` behind the lowest start and the slab plus the shell in front.
pub fn ray_box(frame: &DirectionFrame, starts: &[Site], target: f64, opts: &RunOptions) -> Result<BoxRegion, RayError> {
    if starts.is_empty() {
        return Err(ScalingError::InvalidInput("no start sites".into()).into());
    }
    let d = frame.dim();
    let coords: Vec<_> = starts.iter().map(|s| frame.site_coords(s)).collect();
    let lo1 = coords.iter().map(|c| c.u1).fold(f64::INFINITY, f64::min);
    let ynorm = crate::geometry::norm2(frame.y());
    let len = (target - lo1) * ynorm;
    if !(len > 0.0) {
        return Err(ScalingError::InvalidInput("target slab behind the start sites".into()).into());
    }
    let half = opts.width(len) / 2.0;
    let mut u2lo = vec![f64::INFINITY; d - 1];
    let mut u2hi = vec![f64::NEG_INFINITY; d - 1];
    for c in &coords {
        for i in 0..d - 1 {
            u2lo[i] = u2lo[i].min(c.u2[i] - half);
            u2hi[i] = u2hi[i].max(c.u2[i] + half);
        }
    }
    let u1s = [lo1 - opts.margin * (target - lo1), target + slab_thickness(frame)];
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &u1 in &u1s {
        for corner in 0..1usize << (d - 1) {
            let u2: Vec<f64> = (0..d - 1).map(|i| if corner >> i & 1 == 0 { u2lo[i] } else { u2hi[i] }).collect();
            let x = frame.from_coords(&crate::geometry::ThetaCoords { u1, u2 });
            for k in 0..d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
    }
    let pad = (opts.shell + 1) as f64;
    let lo: Vec<i32> = lo.iter().map(|v| (v - pad).floor() as i32).collect();
    let hi: Vec<i32> = hi.iter().map(|v| (v + pad).ceil() as i32).collect();
    Ok(BoxRegion::new(Site::new(&lo)?, Site::new(&hi)?)?)
}

/// Fraction of starts whose rays under overshoot factors `ka` and `kb`
/// agree on every site before entering level `start + horizon/4`.
pub fn prefix_agreement(
    config: &PassageConfig,
    frame: &DirectionFrame,
    starts: &[Site],
    horizon: f64,
    ka: f64,
    kb: f64,
    shell: i64,
) -> Result<f64, RayError> {
    if starts.is_empty() {
        return Ok(1.0);
    }
    let base = starts.iter().map(|s| frame.level(s)).fold(f64::NEG_INFINITY, f64::max);
    let fa = RayField::new(config, frame, base + ka * horizon, starts, shell)?;
    let fb = RayField::new(config, frame, base + kb * horizon, starts, shell)?;
    let mut agree = 0usize;
    for s in starts {
        let cut = frame.level(s) + horizon / 4.0;
        let a = fa.ray(s, cut)?;
        let b = fb.ray(s, cut)?;
        if a.path.sites()[..a.entry] == b.path.sites()[..b.entry] {
            agree += 1;
        }
    }
    Ok(agree as f64 / starts.len() as f64)
}
