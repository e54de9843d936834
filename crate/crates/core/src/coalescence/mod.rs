//! Coalescence structure of rays in the plane: start sites along a
//! rationally oriented line, sources, gaps and entry intervals, and the
//! coalescence time of two rays.

mod gaps;
mod tail;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesic::GeodesicError;
use crate::geometry::{build_frame, DirectionFrame, GeometryError, ShapeNorm};
use crate::lattice::{LatticeError, Site};
use crate::ray::RayError;
use crate::scaling::ScalingError;

pub use gaps::{
    duality_holds, enlarge_gap, entries_monotone, find_gaps, jump_property, sources_and_entries, EntryInterval,
    GapKind, GapRecord, StartSiteRow,
};
pub use tail::{coalescence_site, coalescence_tail, CoalescenceRecord, TailParams, TailRow, TailTable};

/// Largest denominator of a snapped orientation.
pub const MAX_DENOMINATOR: i64 = 32;

#[derive(Debug, Error)]
pub enum CoalescenceError {
    #[error("coalescence needs d=2, got d={0}")]
    BadDimension(usize),
    #[error("bad orientation: {0}")]
    BadOrientation(String),
    #[error("scan range ends before the {0} side of the gap is resolved")]
    MissingSide(&'static str),
    #[error("ray from {0} touched the boundary shell")]
    Censored(Site),
    #[error(transparent)]
    Ray(#[from] RayError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Integer normal `(a, b)` of a start line, `a > 0`, `|b| <= a`, coprime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineNormal {
    pub a: i64,
    pub b: i64,
}

impl LineNormal {
    /// `a x + b y`: the sign gives the side of the line.
    #[inline]
    pub fn eval(&self, s: &Site) -> i64 {
        self.a * i64::from(s.coord(0)) + self.b * i64::from(s.coord(1))
    }

    /// The unique start site at height `h`: largest `x` with `a x + b h <= 0`.
    pub fn start_at(&self, h: i32) -> Site {
        let x = (-self.b * i64::from(h)).div_euclid(self.a);
        Site::d2(x as i32, h)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Recover the integer normal of a frame whose `z` is rationally oriented.
pub fn line_normal(frame: &DirectionFrame) -> Result<LineNormal, CoalescenceError> {
    if frame.dim() != 2 {
        return Err(CoalescenceError::BadDimension(frame.dim()));
    }
    let (z1, z2) = (frame.z()[0], frame.z()[1]);
    if !(z1 > 0.0) || z2.abs() > z1 * (1.0 + 1e-12) {
        return Err(CoalescenceError::BadOrientation(format!(
            "z=({z1}, {z2}) needs a positive first component and |slope| >= 1"
        )));
    }
    let t = z2 / z1;
    for a in 1..=MAX_DENOMINATOR {
        let b = (t * a as f64).round();
        if (t - b / a as f64).abs() < 1e-9 {
            let b = b as i64;
            let g = gcd(a, b);
            return Ok(LineNormal { a: a / g, b: b / g });
        }
    }
    Err(CoalescenceError::BadOrientation(format!("z=({z1}, {z2}) is not rational with denominator <= 32")))
}

/// Rational normal closest in angle to `z`, smallest denominator on ties.
fn nearest_rational(z: &[f64]) -> Result<LineNormal, CoalescenceError> {
    let phi = z[1].atan2(z[0]);
    if phi.abs() > std::f64::consts::FRAC_PI_4 + 1e-12 {
        return Err(CoalescenceError::BadOrientation(format!("normal angle {phi} exceeds pi/4")));
    }
    let mut best = (f64::INFINITY, LineNormal { a: 1, b: 0 });
    for a in 1..=MAX_DENOMINATOR {
        for b in -a..=a {
            let e = ((b as f64).atan2(a as f64) - phi).abs();
            if e < best.0 - 1e-15 {
                best = (e, LineNormal { a, b });
            }
        }
    }
    let n = best.1;
    let g = gcd(n.a, n.b);
    Ok(LineNormal { a: n.a / g, b: n.b / g })
}

/// Frame of the direction whose boundary normal is the rational direction
/// nearest to the normal of `theta`. Without a shape, `theta` must already
/// be rationally oriented.
pub fn tilde_frame(theta: &DirectionFrame, shape: Option<&dyn ShapeNorm>) -> Result<DirectionFrame, CoalescenceError> {
    if theta.dim() != 2 {
        return Err(CoalescenceError::BadDimension(theta.dim()));
    }
    if line_normal(theta).is_ok() {
        return Ok(theta.clone());
    }
    let n = nearest_rational(theta.z())?;
    let Some(shape) = shape else {
        return Err(CoalescenceError::BadOrientation("not rational and no shape to snap with".into()));
    };
    let target = (n.b as f64).atan2(n.a as f64);
    let normal_angle = |alpha: f64| -> Result<f64, CoalescenceError> {
        let f = build_frame(&[alpha.cos(), alpha.sin()], shape)?;
        Ok(f.z()[1].atan2(f.z()[0]))
    };
    let a0 = theta.theta()[1].atan2(theta.theta()[0]);
    let (mut lo, mut hi) = (a0 - 0.6, a0 + 0.6);
    if normal_angle(lo)? > target || normal_angle(hi)? < target {
        return Err(GeometryError::DegenerateShape("normal map does not bracket the snapped normal".into()).into());
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if normal_angle(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let dir = [alpha.cos(), alpha.sin()];
    let g = shape.norm(&dir);
    Ok(DirectionFrame::new(vec![dir[0] / g, dir[1] / g], vec![n.a as f64, n.b as f64])?)
}

/// Start sites at heights `lo..=hi`, one per height.
pub fn enumerate_start_sites(tilde: &DirectionFrame, lo: i32, hi: i32) -> Result<Vec<Site>, CoalescenceError> {
    let n = line_normal(tilde)?;
    Ok((lo..=hi).map(|h| n.start_at(h)).collect())
}

/// Coordinate along the start line, increasing with height.
pub fn projected(tilde: &DirectionFrame, s: &Site) -> f64 {
    -tilde.site_coords(s).u2[0]
}

#[cfg(test)]
mod tests;
