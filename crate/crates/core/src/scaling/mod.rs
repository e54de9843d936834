//! Monte Carlo estimates of the time constant, the limit shape, the
//! fluctuation scale and the transverse wandering of point-to-point
//! geodesics.

mod gap;
mod shape;
mod sigma;
mod time_constant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesic::{Engine, GeodesicError, GeodesicTree};
use crate::geometry::{GeometryError, ScalingModel};
use crate::lattice::{BoxRegion, LatticeError, PassageConfig, Site, DEFAULT_SITE_CAP};

pub use gap::{check_hg_gap, HgGapReport, HgGapRow};
pub use shape::{estimate_limit_shape, CurvatureRow, LimitShapeEstimate, ShapeRow};
pub use sigma::{
    estimate_sigma, estimate_sigma_and_transverse, measure_transverse_fluctuation, SigmaRow, SigmaTable,
    TransverseRow, TransverseTable, HISTOGRAM_EDGES,
};
pub use time_constant::{estimate_time_constant, MeanRow, MeanTable};

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("boundary contamination: {discarded} of {total} samples touched the shell at {what}")]
    BoundaryContamination { what: String, discarded: usize, total: usize },
    #[error("degenerate fit: {0}")]
    FitDegenerate(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Settings shared by every estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    /// Extra box length on each end, as a fraction of the experiment length.
    pub margin: f64,
    /// Box width in units of the predicted wandering scale.
    pub width_factor: f64,
    /// Paths entering this many outer layers of sites are discarded.
    pub shell: i64,
    /// Largest tolerated discard fraction.
    pub max_discard: f64,
    /// Fluctuation model used to size boxes.
    pub model: ScalingModel,
    pub site_cap: u64,
    /// Allow non-continuous weight tables where uniqueness matters.
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            margin: 0.25,
            width_factor: 8.0,
            shell: 2,
            max_discard: 0.05,
            model: prior_model(),
            site_cap: DEFAULT_SITE_CAP,
            force: false,
        }
    }
}

/// `sigma(r) = r^(1/3)`, used until a fitted model is supplied.
pub fn prior_model() -> ScalingModel {
    ScalingModel::new(1.0, 1.0 / 3.0).expect("valid prior")
}

impl RunOptions {
    /// Box width for an experiment of lattice length `len`.
    pub fn width(&self, len: f64) -> f64 {
        let delta = self.model.delta(len.max(1.0)).unwrap_or(1.0);
        (self.width_factor * delta).max(len / 2.0)
    }

    /// Box around the segment `a -> b`: `margin * |b - a|` beyond each end
    /// and half the width on either side.
    pub fn segment_box(&self, a: &[f64], b: &[f64]) -> Result<BoxRegion, ScalingError> {
        let d = a.len();
        let diff: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
        let len = diff.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len == 0.0 {
            return Err(ScalingError::InvalidInput("zero-length segment".into()));
        }
        let half = self.width(len) / 2.0;
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for k in 0..d {
            let u = diff[k] / len;
            let pad = (self.margin * len * u.abs())
                .max(half * (1.0 - u * u).max(0.0).sqrt())
                .max((self.shell + 1) as f64);
            lo.push((a[k].min(b[k]) - pad).floor() as i32);
            hi.push((a[k].max(b[k]) + pad).ceil() as i32);
        }
        Ok(BoxRegion::new(Site::new(&lo)?, Site::new(&hi)?)?)
    }

    /// Smallest box containing the segment boxes from `a` to every target.
    pub fn union_box(&self, a: &[f64], targets: &[Vec<f64>]) -> Result<BoxRegion, ScalingError> {
        let mut out: Option<(Vec<i32>, Vec<i32>)> = None;
        for t in targets {
            let b = self.segment_box(a, t)?;
            let (blo, bhi) = (b.lo(), b.hi());
            out = Some(match out {
                None => (blo.coords().to_vec(), bhi.coords().to_vec()),
                Some((lo, hi)) => (
                    lo.iter().zip(blo.coords()).map(|(x, y)| *x.min(y)).collect(),
                    hi.iter().zip(bhi.coords()).map(|(x, y)| *x.max(y)).collect(),
                ),
            });
        }
        let (lo, hi) = out.ok_or_else(|| ScalingError::InvalidInput("no targets".into()))?;
        Ok(BoxRegion::new(Site::new(&lo)?, Site::new(&hi)?)?)
    }

    pub(crate) fn require_continuous(&self, spec: &crate::lattice::DistributionSpec) -> Result<(), ScalingError> {
        if spec.is_continuous() || self.force {
            Ok(())
        } else {
            Err(ScalingError::InvalidInput(
                "weight tables are not continuous; geodesics need not be unique (set force to override)".into(),
            ))
        }
    }
}

/// Run `f` for every replica index on the current rayon pool; results come
/// back in index order.
pub(crate) fn replicate<T, F>(replicas: usize, f: F) -> Result<Vec<T>, ScalingError>
where
    T: Send,
    F: Fn(u64) -> Result<T, ScalingError> + Sync + Send,
{
    (0..replicas as u64).into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

/// Tree from `source` that finalizes every site in `targets`.
pub(crate) fn tree_to_targets(
    config: &PassageConfig,
    source: &Site,
    targets: &[Site],
) -> Result<(GeodesicTree, Vec<usize>), ScalingError> {
    let region = config.region();
    let si = region.index(source).ok_or(GeodesicError::OutOfBox(*source))?;
    let mut mask = vec![false; region.num_sites() as usize];
    let mut idx = Vec::with_capacity(targets.len());
    for t in targets {
        let i = region.index(t).ok_or(GeodesicError::OutOfBox(*t))?;
        mask[i] = true;
        idx.push(i);
    }
    let tree = Engine::new(config).tree_until(&[si], &mask);
    Ok((tree, idx))
}

/// Fail when more than the allowed fraction of samples was discarded.
pub(crate) fn check_discards(opts: &RunOptions, what: &str, discarded: usize, total: usize) -> Result<(), ScalingError> {
    if total > 0 && discarded as f64 > opts.max_discard * total as f64 {
        return Err(ScalingError::BoundaryContamination { what: what.into(), discarded, total });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_box_follows_sizing_rule() {
        let opts = RunOptions::default();
        let b = opts.segment_box(&[0.0, 0.0], &[64.0, 0.0]).unwrap();
        // delta(64) = 16 under the prior, width = max(128, 32)
        assert_eq!(b.lo().coords(), &[-16, -64]);
        assert_eq!(b.hi().coords(), &[80, 64]);
    }

    #[test]
    fn union_box_covers_all_segments() {
        let opts = RunOptions::default();
        let t = vec![vec![16.0, 0.0], vec![64.0, 0.0], vec![40.0, 30.0]];
        let u = opts.union_box(&[0.0, 0.0], &t).unwrap();
        for x in &t {
            let b = opts.segment_box(&[0.0, 0.0], x).unwrap();
            assert!(u.contains(&b.lo()) && u.contains(&b.hi()));
        }
    }
}
