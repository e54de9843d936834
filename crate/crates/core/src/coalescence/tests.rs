use super::*;
use crate::geometry::EuclideanNorm;
use crate::lattice::{sample_config, BoxRegion, DistributionSpec, PassageConfig, WeightTable};
use crate::ray::ray_box;
use crate::scaling::RunOptions;

fn axis() -> DirectionFrame {
    DirectionFrame::axis(2, 0, 1.0).unwrap()
}

#[test]
fn diagonal_line_gives_staircase() {
    let tilde = DirectionFrame::new(vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
    let s = enumerate_start_sites(&tilde, -5, 6).unwrap();
    assert_eq!(s.len(), 12);
    let n = line_normal(&tilde).unwrap();
    assert_eq!(n, LineNormal { a: 1, b: 1 });
    for (k, z) in s.iter().enumerate() {
        assert_eq!(*z, Site::d2(5 - k as i32, k as i32 - 5));
        assert!(n.eval(z) <= 0);
        assert!((0..2).any(|ax| n.eval(&z.step(ax, 1)) > 0));
    }
}

#[test]
fn start_sites_are_unique_per_row() {
    // slope 3/2 line: brute-force every row for the defining property
    let tilde = DirectionFrame::new(vec![0.9, 0.2], vec![3.0, 2.0]).unwrap();
    let n = line_normal(&tilde).unwrap();
    for h in -20..=20 {
        let hits: Vec<Site> = (-40..=40)
            .map(|x| Site::d2(x, h))
            .filter(|z| {
                n.eval(z) <= 0
                    && [z.step(0, 1), z.step(0, -1), z.step(1, 1), z.step(1, -1)].iter().any(|w| n.eval(w) > 0)
            })
            .collect();
        assert_eq!(hits, vec![n.start_at(h)]);
    }
}

#[test]
fn shallow_or_irrational_lines_are_rejected() {
    let shallow = DirectionFrame::new(vec![0.2, 1.0], vec![1.0, 2.0]).unwrap();
    assert!(matches!(enumerate_start_sites(&shallow, 0, 3), Err(CoalescenceError::BadOrientation(_))));
    let irr = DirectionFrame::new(vec![1.0, 0.1], vec![1.0, std::f64::consts::PI / 10.0]).unwrap();
    assert!(matches!(line_normal(&irr), Err(CoalescenceError::BadOrientation(_))));
    let d3 = DirectionFrame::axis(3, 0, 1.0).unwrap();
    assert!(matches!(line_normal(&d3), Err(CoalescenceError::BadDimension(3))));
}

#[test]
fn snapping_lands_on_a_rational_normal() {
    let shape = EuclideanNorm::new(2);
    let theta = crate::geometry::build_frame(&[0.3f64.cos(), 0.3f64.sin()], &shape).unwrap();
    let tilde = tilde_frame(&theta, Some(&shape)).unwrap();
    let n = line_normal(&tilde).unwrap();
    assert!(n.a <= MAX_DENOMINATOR);
    let snapped = (n.b as f64).atan2(n.a as f64);
    assert!((snapped - 0.3).abs() < 1.0 / (32.0 * 32.0));
    // for a circle the direction and its normal coincide
    let t = tilde.theta();
    assert!((t[1].atan2(t[0]) - snapped).abs() < 1e-9);
    assert!(tilde_frame(&theta, None).is_err());
    assert_eq!(tilde_frame(&axis(), None).unwrap(), axis());
}

fn constant_config(lo: (i32, i32), hi: (i32, i32), t: WeightTable) -> PassageConfig {
    let region = BoxRegion::new(Site::d2(lo.0, lo.1), Site::d2(hi.0, hi.1)).unwrap();
    sample_config(&region, &DistributionSpec::TestTable(t), 0).unwrap()
}

#[test]
fn straight_rays_are_all_sources() {
    let c = constant_config((-4, -12), (20, 12), WeightTable::constant(1.0));
    let starts = enumerate_start_sites(&axis(), -4, 4).unwrap();
    let rows = sources_and_entries(&c, &axis(), &axis(), 5.0, &starts, 2.0, 1).unwrap();
    for r in &rows {
        assert!(r.is_source && !r.censored);
        assert_eq!(r.v, r.z);
        assert_eq!(r.w, Some(Site::d2(5, r.height)));
    }
    let (gaps, intervals) = find_gaps(&axis(), &rows);
    assert_eq!(gaps.len(), 8);
    assert_eq!(intervals.len(), 9);
    assert!(duality_holds(&rows, &intervals));
    assert!(entries_monotone(&axis(), &rows));
    let g = enlarge_gap(&axis(), &rows, &gaps[3]).unwrap();
    assert_eq!((g.lo, g.hi), (gaps[3].lo, gaps[3].hi));
    assert_eq!(g.kind, GapKind::Enlarged);
    // a censored start below g_min could have jumped across
    let mut cut = rows.clone();
    cut[0].censored = true;
    cut[0].w = None;
    assert!(matches!(enlarge_gap(&axis(), &cut, &gaps[3]), Err(CoalescenceError::MissingSide("lower"))));
}

#[test]
fn corridor_makes_one_source() {
    let mut t = WeightTable::constant(1.0);
    for x in 0..20 {
        t = t.with(Site::d2(x, 0), 0, 0.01);
    }
    let c = constant_config((-4, -12), (20, 12), t);
    let starts = enumerate_start_sites(&axis(), -3, 3).unwrap();
    let rows = sources_and_entries(&c, &axis(), &axis(), 5.0, &starts, 2.0, 1).unwrap();
    for r in &rows {
        // every start walks down the line x = 0 to the corridor
        assert_eq!(r.v, Site::d2(0, 0));
        assert_eq!(r.is_source, r.height == 0);
        assert_eq!(r.w, Some(Site::d2(5, 0)));
    }
    let (gaps, intervals) = find_gaps(&axis(), &rows);
    assert!(gaps.is_empty());
    assert_eq!(intervals.len(), 1);
}

/// Minimal passage to the column `x >= col` by exhaustive search; ties do
/// not occur for the configurations used here.
fn brute_ray(c: &PassageConfig, start: Site, col: i32) -> Vec<Site> {
    fn go(c: &PassageConfig, col: i32, cur: &mut Vec<Site>, t: f64, best: &mut (f64, Vec<Site>)) {
        if t >= best.0 {
            return;
        }
        let last = *cur.last().unwrap();
        if last.coord(0) >= col {
            *best = (t, cur.clone());
            return;
        }
        for k in 0..2 {
            for sgn in [1, -1] {
                let next = last.step(k, sgn);
                if c.region().contains(&next) && !cur.contains(&next) {
                    let w = c.weight_between(&last, &next).unwrap();
                    cur.push(next);
                    go(c, col, cur, t + w, best);
                    cur.pop();
                }
            }
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    go(c, col, &mut vec![start], 0.0, &mut best);
    best.1
}

#[test]
fn crafted_merge_matches_brute_force() {
    let mut t = WeightTable::constant(1.0);
    for (base, ax) in [((0, 1), 0), ((1, 1), 1), ((0, 2), 0), ((1, 2), 0), ((2, 2), 0), ((3, 2), 0)] {
        t = t.with(Site::d2(base.0, base.1), ax, 0.1);
    }
    let c = constant_config((0, 0), (4, 4), t);
    let (x, y) = (Site::d2(0, 1), Site::d2(0, 2));
    let rec = coalescence_site(&c, &x, &y, &axis(), &axis(), 2.0, 2.0, 0).unwrap();
    let px = brute_ray(&c, x, 4);
    let py = brute_ray(&c, y, 4);
    let u = *px.iter().find(|s| py.contains(s)).unwrap();
    assert_eq!(u, Site::d2(1, 2));
    assert_eq!(rec.u, Some(u));
    assert_eq!(rec.u1, Some(1.0));
    assert!(rec.coalesced && !rec.backtrack_after_merge);
    let rev = coalescence_site(&c, &y, &x, &axis(), &axis(), 2.0, 2.0, 0).unwrap();
    assert_eq!(rev.u, rec.u);
    // merging at level 1 is not before a horizon of 1
    let late = coalescence_site(&c, &x, &y, &axis(), &axis(), 1.0, 4.0, 0).unwrap();
    assert!(!late.coalesced);
}

#[test]
fn random_configs_satisfy_planarity() {
    let theta = DirectionFrame::axis(2, 0, 0.42).unwrap();
    let opts = RunOptions::default();
    let r = 12.0;
    let starts = enumerate_start_sites(&theta, -24, 24).unwrap();
    let region = ray_box(&theta, &starts, 2.0 * r, &opts).unwrap();
    let mut enlarged = 0;
    for seed in 0..20 {
        let c = sample_config(&region, &DistributionSpec::default(), seed).unwrap();
        let rows = sources_and_entries(&c, &theta, &theta, r, &starts, 2.0, opts.shell).unwrap();
        let (gaps, intervals) = find_gaps(&theta, &rows);
        assert!(duality_holds(&rows, &intervals));
        assert!(entries_monotone(&theta, &rows));
        for row in rows.iter().filter(|x| !x.censored) {
            // V is a start site and, when scanned, a source
            if let Some(vr) = rows.iter().find(|x| x.z == row.v) {
                assert!(vr.is_source, "{row:?}");
            }
        }
        for g in &gaps {
            if let Ok(e) = enlarge_gap(&theta, &rows, g) {
                assert!(e.lo <= g.lo && e.hi >= g.hi);
                assert!(jump_property(&theta, &rows, &e));
                enlarged += 1;
            }
        }
    }
    assert!(enlarged > 0);
}

#[test]
fn tail_is_monotone_and_bracketed() {
    let theta = DirectionFrame::axis(2, 0, 0.42).unwrap();
    let params = TailParams { separation: 2, r_grid: vec![4.0, 8.0, 16.0], kappa: 2.0, pairs: 2 };
    let (t, recs) =
        coalescence_tail(&DistributionSpec::default(), &theta, None, &params, 30, 5, &RunOptions::default()).unwrap();
    assert_eq!(recs.len(), 60);
    for w in t.rows.windows(2) {
        assert!(w[1].p <= w[0].p && w[1].p_optimistic <= w[0].p_optimistic);
        assert!(w[1].p_pessimistic <= w[0].p_pessimistic);
    }
    for row in &t.rows {
        assert!(row.p_pessimistic <= row.p && row.p <= row.p_optimistic);
    }
    for rec in recs.iter().filter(|r| r.coalesced) {
        assert!(rec.u1.unwrap() < 16.0);
    }
    let d3 = DirectionFrame::axis(3, 0, 0.42).unwrap();
    assert!(matches!(
        coalescence_tail(&DistributionSpec::default(), &d3, None, &params, 30, 5, &RunOptions::default()),
        Err(CoalescenceError::BadDimension(3))
    ));
}
