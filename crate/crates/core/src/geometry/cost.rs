use serde::Serialize;

use super::{DirectionFrame, GeometryError, ScalingModel};

/// Deviation cost `D_theta(u)`.
pub fn deviation_cost(model: &ScalingModel, frame: &DirectionFrame, u: &[f64]) -> Result<f64, GeometryError> {
    if u.iter().all(|c| *c == 0.0) {
        return Err(GeometryError::ZeroVector);
    }
    let tc = frame.coords(u);
    let phi = model.phi(tc.sup_norm())?;
    let n2 = tc.u2_norm();
    if tc.u1 > 0.0 && n2 < tc.u1 {
        let xi = model.xi_fn(tc.u1)?;
        Ok((n2 * n2 / (xi * xi)).min(phi))
    } else {
        // |u2| >= u1 >= 0: the tube term is at least Phi(|u2|) since Xi is
        // increasing and Xi(s)^2 Phi(s) = s^2
        Ok(phi)
    }
}

/// The tube-and-cylinders region `{u : D_{theta,r}(u) <= c}`.
#[derive(Clone, Debug, Serialize)]
pub struct TubeRegion {
    pub frame: DirectionFrame,
    pub model: ScalingModel,
    pub r: f64,
    pub c: f64,
}

impl TubeRegion {
    /// Symmetrized cost: `D(u)` on the near half, `D(r y - u)` on the far half.
    /// The two endpoints cost 0.
    pub fn cost(&self, u: &[f64]) -> Result<f64, GeometryError> {
        let u1 = crate::geometry::dot(u, self.frame.z());
        let v: Vec<f64> = if u1 <= self.r / 2.0 {
            u.to_vec()
        } else {
            self.frame.y().iter().zip(u).map(|(y, a)| self.r * y - a).collect()
        };
        if v.iter().all(|c| *c == 0.0) {
            return Ok(0.0);
        }
        deviation_cost(&self.model, &self.frame, &v)
    }
}

pub fn tube_contains(region: &TubeRegion, u: &[f64]) -> bool {
    region.cost(u).is_ok_and(|d| d <= region.c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ThetaCoords;

    fn setup() -> (ScalingModel, DirectionFrame) {
        let m = ScalingModel::new(0.9, 1.0 / 3.0).unwrap();
        let f = DirectionFrame::new(vec![1.2, 0.3], vec![0.8, 0.1]).unwrap();
        (m, f)
    }

    #[test]
    fn branches() {
        let (m, f) = setup();
        let axis = DirectionFrame::axis(2, 0, 0.5).unwrap();
        assert_eq!(deviation_cost(&m, &axis, &[3.0, 0.0]).unwrap(), 0.0);
        let behind = f.from_coords(&ThetaCoords { u1: -3.0, u2: vec![1.0] });
        assert_eq!(deviation_cost(&m, &f, &behind).unwrap(), m.phi(3.0).unwrap());
        assert!(deviation_cost(&m, &f, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn wide_deviation_takes_phi_branch() {
        let (m, f) = setup();
        for (u1, u2) in [(2.0, 2.0), (4.0, -9.0), (50.0, 70.0)] {
            let u = f.from_coords(&ThetaCoords { u1, u2: vec![u2] });
            let tc = f.coords(&u);
            let phi = m.phi(tc.sup_norm()).unwrap();
            let xi = m.xi_fn(tc.u1).unwrap();
            let tube = tc.u2_norm().powi(2) / (xi * xi);
            assert!(tube >= phi * (1.0 - 1e-12));
            assert!((deviation_cost(&m, &f, &u).unwrap() - phi).abs() <= 1e-12 * phi);
        }
    }

    #[test]
    fn tube_membership() {
        let (m, f) = setup();
        let region = TubeRegion { frame: f.clone(), model: m, r: 40.0, c: 0.5 };
        for t in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let u: Vec<f64> = f.y().iter().map(|y| t * 40.0 * y).collect();
            assert!(tube_contains(&region, &u));
        }
        // a point exactly on the boundary, nudged outward
        let u1: f64 = 10.0;
        let xi = region.model.xi_fn(u1).unwrap();
        let edge = (region.c * (1.0 + 1e-6)).sqrt() * xi;
        let u = f.from_coords(&ThetaCoords { u1, u2: vec![edge] });
        let d = region.cost(&u).unwrap();
        assert!(d > region.c);
        assert!(!tube_contains(&region, &u));
    }

    #[test]
    fn tube_is_symmetric_about_midpoint() {
        let (m, f) = setup();
        let region = TubeRegion { frame: f.clone(), model: m, r: 64.0, c: 1.0 };
        for (u1, u2) in [(3.0, 1.0), (10.0, -4.0), (-2.0, 0.5), (20.0, 9.0)] {
            let u = f.from_coords(&ThetaCoords { u1, u2: vec![u2] });
            let mirrored = f.from_coords(&ThetaCoords { u1, u2: vec![-u2] });
            let far: Vec<f64> = f.y().iter().zip(&mirrored).map(|(y, a)| 64.0 * y - a).collect();
            assert!((region.cost(&u).unwrap() - region.cost(&far).unwrap()).abs() < 1e-9);
            assert_eq!(tube_contains(&region, &u), tube_contains(&region, &far));
        }
    }
}
