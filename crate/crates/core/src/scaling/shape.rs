use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{check_discards, replicate, tree_to_targets, RunOptions, ScalingError};
use crate::geometry::{ShapeNorm, TabulatedNorm};
use crate::lattice::{nearest_site, sample_config_capped, DistributionSpec, Site};
use crate::seed::replica_seed;
use crate::stats::summarize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeRow {
    /// Requested unit direction.
    pub theta: Vec<f64>,
    /// Lattice target nearest to `radius * theta`.
    pub target: Site,
    /// `T(0, target) / |target|`: the norm of the realized direction.
    pub g: f64,
    pub se: f64,
    pub replicas: usize,
    pub discarded: usize,
}

/// Polar curvature of the estimated unit-ball boundary (d=2 only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRow {
    pub angle: f64,
    pub curvature: f64,
    /// Spread of the estimate over replica batches.
    pub se: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitShapeEstimate {
    pub dim: usize,
    pub spec: DistributionSpec,
    pub radius: f64,
    pub rows: Vec<ShapeRow>,
    pub curvature: Vec<CurvatureRow>,
    norm: TabulatedNorm,
}

impl LimitShapeEstimate {
    pub fn from_rows(dim: usize, spec: DistributionSpec, radius: f64, rows: Vec<ShapeRow>) -> Result<Self, ScalingError> {
        let samples: Vec<(Vec<f64>, f64)> = rows.iter().map(|r| (r.target.to_f64(), r.g)).collect();
        let norm = TabulatedNorm::new(dim, &samples)?;
        Ok(LimitShapeEstimate { dim, spec, radius, rows, curvature: Vec::new(), norm })
    }

    /// Interpolated norm of `e_1`.
    pub fn mu(&self) -> f64 {
        let mut e1 = vec![0.0; self.dim];
        e1[0] = 1.0;
        self.norm.norm(&e1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("target,g,se,replicas,discarded\n");
        for r in &self.rows {
            let t: Vec<String> = r.target.coords().iter().map(|c| c.to_string()).collect();
            let _ = writeln!(s, "{},{},{},{},{}", t.join(" "), r.g, r.se, r.replicas, r.discarded);
        }
        s
    }
}

impl ShapeNorm for LimitShapeEstimate {
    fn dim(&self) -> usize {
        self.dim
    }
    fn norm(&self, x: &[f64]) -> f64 {
        self.norm.norm(x)
    }
}

const CURVATURE_BATCHES: usize = 10;

/// Estimate the norm along each direction at the given radius; in d=2 also
/// the boundary curvature between consecutive directions.
pub fn estimate_limit_shape(
    spec: &DistributionSpec,
    directions: &[Vec<f64>],
    radius: f64,
    replicas: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<LimitShapeEstimate, ScalingError> {
    if directions.is_empty() || replicas < 2 || !(radius >= 1.0) {
        return Err(ScalingError::InvalidInput("need directions, radius >= 1 and at least 2 replicas".into()));
    }
    spec.validate()?;
    let d = directions[0].len();
    let mut targets: Vec<Site> = Vec::with_capacity(directions.len());
    let mut thetas = Vec::with_capacity(directions.len());
    for dir in directions {
        let n = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        if dir.len() != d || n == 0.0 {
            return Err(ScalingError::InvalidInput(format!("bad direction {dir:?}")));
        }
        let theta: Vec<f64> = dir.iter().map(|c| c / n).collect();
        let scaled: Vec<f64> = theta.iter().map(|c| c * radius).collect();
        let t = nearest_site(&scaled)?;
        if t.coords().iter().all(|c| *c == 0) {
            return Err(ScalingError::InvalidInput("radius too small".into()));
        }
        targets.push(t);
        thetas.push(theta);
    }
    let origin = Site::origin(d);
    let tf: Vec<Vec<f64>> = targets.iter().map(|t| t.to_f64()).collect();
    let region = opts.union_box(&origin.to_f64(), &tf)?;

    let per_replica = replicate(replicas, |i| {
        let config = sample_config_capped(&region, spec, replica_seed(seed, "shape", i), opts.site_cap)?;
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

    let mut rows = Vec::with_capacity(targets.len());
    for (k, t) in targets.iter().enumerate() {
        let len = t.to_f64().iter().map(|c| c * c).sum::<f64>().sqrt();
        let vals: Vec<f64> = per_replica.iter().filter_map(|r| r[k]).map(|v| v / len).collect();
        let discarded = replicas - vals.len();
        check_discards(opts, &format!("target {t}"), discarded, replicas)?;
        let s = summarize(&vals);
        rows.push(ShapeRow {
            theta: thetas[k].clone(),
            target: *t,
            g: s.mean,
            se: s.se,
            replicas: vals.len(),
            discarded,
        });
    }
    let mut est = LimitShapeEstimate::from_rows(d, spec.clone(), radius, rows)?;
    if d == 2 && targets.len() >= 3 {
        est.curvature = curvature_rows(&targets, &per_replica);
    }
    Ok(est)
}

fn polar(t: &Site) -> (f64, f64) {
    let x = f64::from(t.coord(0));
    let y = f64::from(t.coord(1));
    (y.atan2(x), x.hypot(y))
}

/// Curvature of the curve `rho(phi) = 1 / g(phi)` at each interior node.
fn curvature_at(angles: &[f64], g: &[f64]) -> Vec<f64> {
    let rho: Vec<f64> = g.iter().map(|v| 1.0 / v).collect();
    (1..angles.len() - 1)
        .map(|i| {
            let (h0, h1) = (angles[i] - angles[i - 1], angles[i + 1] - angles[i]);
            let (r0, r1, r2) = (rho[i - 1], rho[i], rho[i + 1]);
            let d1 = (r2 - r1) * h0 / (h1 * (h0 + h1)) + (r1 - r0) * h1 / (h0 * (h0 + h1));
            let d2 = 2.0 * ((r2 - r1) / h1 - (r1 - r0) / h0) / (h0 + h1);
            (r1 * r1 + 2.0 * d1 * d1 - r1 * d2) / (r1 * r1 + d1 * d1).powf(1.5)
        })
        .collect()
}

fn curvature_rows(targets: &[Site], per_replica: &[Vec<Option<f64>>]) -> Vec<CurvatureRow> {
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| polar(&targets[a]).0.total_cmp(&polar(&targets[b]).0));
    let angles: Vec<f64> = order.iter().map(|&k| polar(&targets[k]).0).collect();
    if angles.windows(2).any(|w| w[1] - w[0] <= 0.0) {
        return Vec::new();
    }
    let mean_g = |reps: &[Vec<Option<f64>>]| -> Vec<f64> {
        order
            .iter()
            .map(|&k| {
                let len = polar(&targets[k]).1;
                let v: Vec<f64> = reps.iter().filter_map(|r| r[k]).map(|t| t / len).collect();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect()
    };
    let full = curvature_at(&angles, &mean_g(per_replica));
    let batches = CURVATURE_BATCHES.min(per_replica.len());
    let size = per_replica.len() / batches;
    let per_batch: Vec<Vec<f64>> = (0..batches)
        .map(|b| curvature_at(&angles, &mean_g(&per_replica[b * size..(b + 1) * size])))
        .collect();
    full.iter()
        .enumerate()
        .map(|(i, &c)| {
            let vals: Vec<f64> = per_batch.iter().map(|v| v[i]).collect();
            let s = summarize(&vals);
            CurvatureRow { angle: angles[i + 1], curvature: c, se: s.sd / (batches as f64).sqrt() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::WeightTable;

    fn fan(k: usize, center: f64, half_angle: f64) -> Vec<Vec<f64>> {
        (0..k)
            .map(|i| {
                let a = center - half_angle + 2.0 * half_angle * i as f64 / (k - 1) as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    }

    #[test]
    fn constant_weights_give_l1_ball() {
        let spec = DistributionSpec::TestTable(WeightTable::constant(1.0));
        let diag = std::f64::consts::FRAC_PI_4;
        let est = estimate_limit_shape(&spec, &fan(7, diag, 0.5), 40.0, 2, 3, &RunOptions::default()).unwrap();
        for r in &est.rows {
            let t = r.target.to_f64();
            let l1 = t[0].abs() + t[1].abs();
            let l2 = t[0].hypot(t[1]);
            assert!((r.g - l1 / l2).abs() < 1e-12);
            assert_eq!(r.se, 0.0);
        }
        // the l1 ball is flat between its corners, up to finite-difference error
        assert_eq!(est.curvature.len(), 5);
        for c in &est.curvature {
            assert!(c.curvature.abs() < 5e-2, "{c:?}");
        }
        let axis = estimate_limit_shape(&spec, &fan(3, 0.0, 0.3), 40.0, 2, 3, &RunOptions::default()).unwrap();
        assert!((axis.mu() - 1.0).abs() < 1e-12);
        assert!(axis.curvature[0].curvature > 1.0);
    }

    #[test]
    fn circle_has_unit_curvature() {
        let angles = [-0.2, -0.05, 0.1, 0.3];
        let g = [1.0; 4];
        for c in curvature_at(&angles, &g) {
            assert!((c - 1.0).abs() < 1e-12);
        }
        // circle of radius 2
        for c in curvature_at(&angles, &[0.5; 4]) {
            assert!((c - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_directions_agree() {
        let spec = DistributionSpec::default();
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let est = estimate_limit_shape(&spec, &dirs, 24.0, 200, 5, &RunOptions::default()).unwrap();
        for a in &est.rows {
            for b in &est.rows {
                assert!((a.g - b.g).abs() <= 3.0 * a.se.hypot(b.se));
            }
        }
    }
}
