use serde::Serialize;

use super::{dot, norm2, GeometryError, ShapeNorm};
use crate::lattice::Site;

/// A direction together with its boundary point, tangent normal and an
/// orthonormal basis of `{x : x . z = 0}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionFrame {
    theta: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

/// `u = u1 * y + sum u2[i] * basis[i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaCoords {
    pub u1: f64,
    pub u2: Vec<f64>,
}

impl ThetaCoords {
    pub fn u2_norm(&self) -> f64 {
        norm2(&self.u2)
    }

    /// `max(|u1|, |u2|)`.
    pub fn sup_norm(&self) -> f64 {
        self.u1.abs().max(self.u2_norm())
    }
}

impl DirectionFrame {
    /// Frame from `y` and `z`; `theta` is taken as `y / |y|` and `z` is
    /// rescaled so that `y . z = 1`.
    pub fn new(y: Vec<f64>, z: Vec<f64>) -> Result<Self, GeometryError> {
        let d = y.len();
        if !(2..=4).contains(&d) || z.len() != d {
            return Err(GeometryError::BadDimension(d));
        }
        let ny = norm2(&y);
        let yz = dot(&y, &z);
        if !(ny > 0.0 && ny.is_finite() && yz > 0.0 && yz.is_finite()) {
            return Err(GeometryError::DegenerateShape(format!("y={y:?} z={z:?}")));
        }
        let theta = y.iter().map(|c| c / ny).collect();
        let z: Vec<f64> = z.iter().map(|c| c / yz).collect();
        let basis = complete_basis(&z);
        Ok(DirectionFrame { theta, y, z, basis })
    }

    /// Frame for the axis direction `e_axis` of a lattice-symmetric shape
    /// with `g(e_axis) = mu`.
    pub fn axis(dim: usize, axis: usize, mu: f64) -> Result<Self, GeometryError> {
        let mut y = vec![0.0; dim];
        let mut z = vec![0.0; dim];
        y[axis] = 1.0 / mu;
        z[axis] = mu;
        Self::new(y, z)
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// First θ-coordinate of a lattice site.
    #[inline]
    pub fn level(&self, s: &Site) -> f64 {
        s.coords().iter().zip(&self.z).map(|(&c, z)| f64::from(c) * z).sum()
    }

    pub fn coords(&self, u: &[f64]) -> ThetaCoords {
        let u1 = dot(u, &self.z);
        let rest: Vec<f64> = u.iter().zip(&self.y).map(|(a, y)| a - u1 * y).collect();
        let u2 = self.basis.iter().map(|b| dot(&rest, b)).collect();
        ThetaCoords { u1, u2 }
    }

    pub fn site_coords(&self, s: &Site) -> ThetaCoords {
        self.coords(&s.to_f64())
    }

    pub fn from_coords(&self, tc: &ThetaCoords) -> Vec<f64> {
        let mut u: Vec<f64> = self.y.iter().map(|y| tc.u1 * y).collect();
        for (c, b) in tc.u2.iter().zip(&self.basis) {
            for (ui, bi) in u.iter_mut().zip(b) {
                *ui += c * bi;
            }
        }
        u
    }

    /// Cosine of the angle between `y` and `z`; at least `1/sqrt(d)` for a
    /// lattice-symmetric norm.
    pub fn yz_cosine(&self) -> f64 {
        dot(&self.y, &self.z) / (norm2(&self.y) * norm2(&self.z))
    }
}

/// Orthonormal basis of the complement of `z`. In d=2 this is
/// `(z2, -z1)/|z|`.
fn complete_basis(z: &[f64]) -> Vec<Vec<f64>> {
    let d = z.len();
    let nz = norm2(z);
    if d == 2 {
        return vec![vec![z[1] / nz, -z[0] / nz]];
    }
    let mut ortho: Vec<Vec<f64>> = vec![z.iter().map(|c| c / nz).collect()];
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for b in &ortho {
            let p = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let n = norm2(&v);
        if n > 1e-8 {
            ortho.push(v.iter().map(|c| c / n).collect());
        }
        if ortho.len() == d {
            break;
        }
    }
    ortho.remove(0);
    ortho
}

/// Default angular step for the tangent-normal differences.
pub const FRAME_STEP: f64 = 1e-3;

/// Frame for direction `theta` on the unit ball of `shape`.
pub fn build_frame(theta: &[f64], shape: &dyn ShapeNorm) -> Result<DirectionFrame, GeometryError> {
    build_frame_with_step(theta, shape, FRAME_STEP)
}

pub fn build_frame_with_step(theta: &[f64], shape: &dyn ShapeNorm, h: f64) -> Result<DirectionFrame, GeometryError> {
    let d = theta.len();
    if d != shape.dim() {
        return Err(GeometryError::BadDimension(d));
    }
    let nt = norm2(theta);
    if nt == 0.0 || !nt.is_finite() {
        return Err(GeometryError::ZeroVector);
    }
    let th: Vec<f64> = theta.iter().map(|c| c / nt).collect();
    let g = shape.norm(&th);
    if !(g > 0.0 && g.is_finite()) {
        return Err(GeometryError::DegenerateShape(format!("g(theta) = {g}")));
    }
    let y: Vec<f64> = th.iter().map(|c| c / g).collect();
    // gradient of the 1-homogeneous norm: radial part g(theta) theta plus
    // tangential central differences
    let mut z: Vec<f64> = th.iter().map(|c| g * c).collect();
    for t in complete_basis(&th) {
        let plus: Vec<f64> = th.iter().zip(&t).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = th.iter().zip(&t).map(|(a, b)| a - h * b).collect();
        let slope = (shape.norm(&plus) - shape.norm(&minus)) / (2.0 * h);
        for (zi, ti) in z.iter_mut().zip(&t) {
            *zi += slope * ti;
        }
    }
    if z.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::DegenerateShape("non-finite tangent normal".into()));
    }
    DirectionFrame::new(y, z)
}
