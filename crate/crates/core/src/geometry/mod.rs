//! Direction frames, θ-coordinates, the fluctuation model and the deviation
//! cost built from it, plus path diagnostics.

mod cost;
mod diagnostics;
mod frame;
mod model;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{deviation_cost, tube_contains, TubeRegion};
pub use diagnostics::{classify_fast_segments, ell_segments, fat_triangle_excess, max_backtrack};
pub use frame::{build_frame, build_frame_with_step, DirectionFrame, ThetaCoords, FRAME_STEP};
pub use model::{FitInfo, ScalingModel};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("argument must be positive and finite, got {0}")]
    NonpositiveArg(f64),
    #[error("zero vector")]
    ZeroVector,
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("unsupported dimension {0}")]
    BadDimension(usize),
    #[error("{0} segments but {1} times")]
    LengthMismatch(usize, usize),
    #[error("path never enters the first cut")]
    NoEntry,
    #[error("invalid model a={a}, chi={chi}")]
    BadModel { a: f64, chi: f64 },
    #[error("cannot parse model: {0}")]
    Parse(String),
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A norm on R^d whose unit ball plays the role of the limit shape.
pub trait ShapeNorm: Sync {
    fn dim(&self) -> usize;
    fn norm(&self, x: &[f64]) -> f64;
}

#[derive(Clone, Debug)]
pub struct EuclideanNorm {
    dim: usize,
    scale: f64,
}

impl EuclideanNorm {
    pub fn new(dim: usize) -> Self {
        EuclideanNorm { dim, scale: 1.0 }
    }

    /// `scale * |x|`: a round shape with `g(e_1) = scale`.
    pub fn scaled(dim: usize, scale: f64) -> Self {
        EuclideanNorm { dim, scale }
    }
}

impl ShapeNorm for EuclideanNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn norm(&self, x: &[f64]) -> f64 {
        self.scale * norm2(x)
    }
}

/// `scale * |x|_1`: the exact shape for constant weights `scale`.
#[derive(Clone, Debug)]
pub struct L1Norm {
    dim: usize,
    scale: f64,
}

impl L1Norm {
    pub fn scaled(dim: usize, scale: f64) -> Self {
        L1Norm { dim, scale }
    }
}

impl ShapeNorm for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn norm(&self, x: &[f64]) -> f64 {
        self.scale * x.iter().map(|c| c.abs()).sum::<f64>()
    }
}

/// Fold `x` into the fundamental chamber of the hyperoctahedral group:
/// absolute values, sorted descending.
pub fn fold_to_chamber(x: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().map(|c| c.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// A lattice-symmetric norm interpolated from its values on unit directions.
///
/// In d=2 values are interpolated linearly in the polar angle of the folded
/// direction; in higher dimension by inverse squared angular distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TabulatedNorm {
    dim: usize,
    /// Folded unit directions and the norm of each.
    nodes: Vec<(Vec<f64>, f64)>,
}

impl TabulatedNorm {
    pub fn new(dim: usize, samples: &[(Vec<f64>, f64)]) -> Result<Self, GeometryError> {
        if samples.is_empty() {
            return Err(GeometryError::DegenerateShape("no directions".into()));
        }
        let mut nodes = Vec::with_capacity(samples.len());
        for (dir, g) in samples {
            if dir.len() != dim {
                return Err(GeometryError::BadDimension(dir.len()));
            }
            let n = norm2(dir);
            if n == 0.0 || !(*g > 0.0 && g.is_finite()) {
                return Err(GeometryError::DegenerateShape(format!("bad sample {dir:?} -> {g}")));
            }
            let unit: Vec<f64> = dir.iter().map(|c| c / n).collect();
            nodes.push((fold_to_chamber(&unit), *g));
        }
        if dim == 2 {
            nodes.sort_by(|a, b| angle2(&a.0).total_cmp(&angle2(&b.0)));
        }
        Ok(TabulatedNorm { dim, nodes })
    }

    /// Interpolated norm of a unit direction.
    fn unit_value(&self, unit: &[f64]) -> f64 {
        let f = fold_to_chamber(unit);
        if self.dim == 2 {
            return self.interp2(angle2(&f));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (dir, g) in &self.nodes {
            let c = dot(dir, &f).clamp(-1.0, 1.0);
            let a = c.acos();
            if a < 1e-12 {
                return *g;
            }
            let w = 1.0 / (a * a);
            num += w * g;
            den += w;
        }
        num / den
    }

    fn interp2(&self, phi: f64) -> f64 {
        // mirror nodes across 0 and pi/4 so any angle in [0, pi/4] is bracketed
        let q = std::f64::consts::FRAC_PI_4;
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(3 * self.nodes.len());
        for (dir, g) in &self.nodes {
            let a = angle2(dir);
            pts.push((-a, *g));
            pts.push((a, *g));
            pts.push((2.0 * q - a, *g));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        if pts.len() == 1 {
            return pts[0].1;
        }
        let k = pts.partition_point(|p| p.0 <= phi);
        if k == 0 {
            return pts[0].1;
        }
        if k == pts.len() {
            return pts[k - 1].1;
        }
        let (a0, g0) = pts[k - 1];
        let (a1, g1) = pts[k];
        g0 + (g1 - g0) * (phi - a0) / (a1 - a0)
    }
}

fn angle2(folded: &[f64]) -> f64 {
    folded[1].atan2(folded[0])
}

impl ShapeNorm for TabulatedNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn norm(&self, x: &[f64]) -> f64 {
        let n = norm2(x);
        if n == 0.0 {
            return 0.0;
        }
        let unit: Vec<f64> = x.iter().map(|c| c / n).collect();
        n * self.unit_value(&unit)
    }
}
