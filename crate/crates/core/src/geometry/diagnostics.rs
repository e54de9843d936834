//! Path and triangle diagnostics along a direction.

use super::{norm2, DirectionFrame, GeometryError, ShapeNorm};
use crate::geodesic::{first_entry_position, LatticePath};

/// Relative distance of `u` from the segment `x -> v`, and the excess
/// `g(u-x) + g(v-u) - g(v-x)`.
pub fn fat_triangle_excess(x: &[f64], u: &[f64], v: &[f64], shape: &dyn ShapeNorm) -> (f64, f64) {
    let sub = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p - q).collect() };
    let vx = sub(v, x);
    let ux = sub(u, x);
    let len2: f64 = vx.iter().map(|c| c * c).sum();
    let t = (ux.iter().zip(&vx).map(|(a, b)| a * b).sum::<f64>() / len2).clamp(0.0, 1.0);
    let off: Vec<f64> = ux.iter().zip(&vx).map(|(a, b)| a - t * b).collect();
    let delta = norm2(&off) / len2.sqrt();
    let excess = shape.norm(&ux) + shape.norm(&sub(v, u)) - shape.norm(&vx);
    (delta, excess)
}

/// Largest drop of the first θ-coordinate from an earlier site to a later
/// one, floored at 0.
pub fn max_backtrack(path: &LatticePath, frame: &DirectionFrame) -> f64 {
    max_drop(path.sites().iter().map(|s| frame.level(s)))
}

fn max_drop(levels: impl IntoIterator<Item = f64>) -> f64 {
    let mut best = 0.0f64;
    let mut high = f64::NEG_INFINITY;
    for l in levels {
        high = high.max(l);
        best = best.max(high - l);
    }
    best
}

/// Split `path` at its successive entry points into `{u1 >= i ell}`.
/// Segment `i` (from 1) runs from the previous cut to the `i`-th entry point.
pub fn ell_segments(
    path: &LatticePath,
    frame: &DirectionFrame,
    ell: f64,
) -> Result<Vec<(LatticePath, usize)>, GeometryError> {
    if !(ell > 0.0) {
        return Err(GeometryError::NonpositiveArg(ell));
    }
    let mut out = Vec::new();
    let mut prev = 0;
    for i in 1usize.. {
        let Ok(p) = first_entry_position(path, frame, i as f64 * ell) else {
            break;
        };
        out.push((path.slice(prev, p), i));
        prev = p;
    }
    if out.is_empty() {
        return Err(GeometryError::NoEntry);
    }
    Ok(out)
}

/// Flag segments whose time is at most `baseline_mean + (eta/8) sigma_ell`.
pub fn classify_fast_segments(
    segments: &[(LatticePath, usize)],
    times: &[f64],
    baseline_mean: f64,
    sigma_ell: f64,
    eta: f64,
) -> Result<Vec<bool>, GeometryError> {
    if segments.len() != times.len() {
        return Err(GeometryError::LengthMismatch(segments.len(), times.len()));
    }
    let cut = baseline_mean + eta / 8.0 * sigma_ell;
    Ok(times.iter().map(|t| *t <= cut).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EuclideanNorm, L1Norm};
    use crate::lattice::Site;
    use proptest::prelude::*;

    fn straight(n: i32) -> LatticePath {
        LatticePath::new((0..=n).map(|i| Site::d2(i, 0)).collect()).unwrap()
    }

    #[test]
    fn euclidean_right_angle_detour() {
        let (delta, excess) = fat_triangle_excess(&[0.0, 0.0], &[5.0, 5.0], &[10.0, 0.0], &EuclideanNorm::new(2));
        assert!((delta - 0.5).abs() < 1e-15);
        assert!((excess - (2.0 * 50f64.sqrt() - 10.0)).abs() < 1e-12);
        let (delta, excess) = fat_triangle_excess(&[0.0, 0.0], &[4.0, 0.0], &[10.0, 0.0], &EuclideanNorm::new(2));
        assert_eq!(delta, 0.0);
        assert!(excess.abs() < 1e-12);
    }

    #[test]
    fn right_triangle_lower_bound() {
        // leg ell along the axis, offset m: excess >= min(m/3, m^2/(3 ell))
        let e = EuclideanNorm::new(2);
        for ell in [1.0, 4.0, 10.0, 100.0] {
            for m in [0.1, 1.0, 3.0, 20.0, 500.0] {
                let (_, excess) = fat_triangle_excess(&[0.0, 0.0], &[ell, m], &[2.0 * ell, 0.0], &e);
                assert!(excess >= (m / 3.0).min(m * m / (3.0 * ell)));
            }
        }
    }

    #[test]
    fn backtrack_examples() {
        let f = DirectionFrame::axis(2, 0, 1.0).unwrap();
        assert_eq!(max_backtrack(&straight(6), &f), 0.0);
        assert_eq!(max_drop([0.0, 1.0, 2.0, 1.25, 3.0]), 0.75);
        let g = DirectionFrame::new(vec![1.0, 0.0], vec![1.0, 0.25]).unwrap();
        let path = LatticePath::new(vec![Site::d2(0, 0), Site::d2(1, 0), Site::d2(1, -1), Site::d2(1, -2), Site::d2(0, -2)]).unwrap();
        // levels 0, 1, 0.75, 0.5, -0.5
        assert_eq!(max_backtrack(&path, &g), 1.5);
    }

    #[test]
    fn segments_of_straight_path() {
        let f = DirectionFrame::axis(2, 0, 1.0).unwrap();
        let p = straight(20);
        let segs = ell_segments(&p, &f, 5.0).unwrap();
        assert_eq!(segs.len(), 4);
        for (i, (s, k)) in segs.iter().enumerate() {
            assert_eq!(*k, i + 1);
            assert_eq!(s.num_bonds(), 5);
        }
        assert!(matches!(ell_segments(&straight(3), &f, 5.0), Err(GeometryError::NoEntry)));
    }

    #[test]
    fn fast_classification() {
        let f = DirectionFrame::axis(2, 0, 1.0).unwrap();
        let segs = ell_segments(&straight(12), &f, 4.0).unwrap();
        let slow = classify_fast_segments(&segs, &[3.0, 3.0, 3.0], 2.0, 1.0, 0.5).unwrap();
        assert_eq!(slow, vec![false; 3]);
        let fast = classify_fast_segments(&segs, &[1.0, 1.0, 1.0], 2.0, 1.0, 0.5).unwrap();
        assert_eq!(fast, vec![true; 3]);
        assert!(classify_fast_segments(&segs, &[1.0], 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn l1_norm_triangle() {
        let (_, excess) = fat_triangle_excess(&[0.0, 0.0], &[3.0, 3.0], &[6.0, 0.0], &L1Norm::scaled(2, 1.0));
        assert_eq!(excess, 6.0);
    }

    fn random_path() -> impl Strategy<Value = LatticePath> {
        proptest::collection::vec(0usize..4, 1..120).prop_map(|steps| {
            let mut sites = vec![Site::d2(0, 0)];
            let mut seen = std::collections::HashSet::from([Site::d2(0, 0)]);
            for s in steps {
                let cur = *sites.last().unwrap();
                let next = cur.step(s / 2, if s % 2 == 0 { 1 } else { -1 });
                if seen.insert(next) {
                    sites.push(next);
                }
            }
            LatticePath::new(sites).unwrap()
        })
    }

    proptest! {
        #[test]
        fn backtrack_matches_quadratic_oracle(p in random_path(), zx in 0.1f64..2.0, zy in -1.0f64..1.0) {
            let f = DirectionFrame::new(vec![1.0 / zx, 0.0], vec![zx, zy]).unwrap();
            let lv: Vec<f64> = p.sites().iter().map(|s| f.level(s)).collect();
            let mut oracle = 0.0f64;
            for i in 0..lv.len() {
                for j in i + 1..lv.len() {
                    oracle = oracle.max(lv[i] - lv[j]);
                }
            }
            prop_assert_eq!(max_backtrack(&p, &f), oracle);
        }

        #[test]
        fn segments_reconcatenate(p in random_path(), ell in 0.5f64..4.0) {
            let f = DirectionFrame::axis(2, 0, 1.0).unwrap();
            if let Ok(segs) = ell_segments(&p, &f, ell) {
                let mut joined: Vec<Site> = vec![p.first()];
                for (s, _) in &segs {
                    prop_assert_eq!(s.first(), *joined.last().unwrap());
                    joined.extend_from_slice(&s.sites()[1..]);
                }
                let last = segs.last().unwrap().0.last();
                let cut = p.sites().iter().position(|x| *x == last).unwrap();
                prop_assert_eq!(&joined[..], &p.sites()[..=cut]);
            }
        }
    }
}
