use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coalescence::{
    duality_holds, enlarge_gap, entries_monotone, enumerate_start_sites, find_gaps, jump_property,
    sources_and_entries,
};
use crate::geodesic::{geodesic_tree, shortest_passage};
use crate::geometry::DirectionFrame;
use crate::lattice::{sample_config, BoxRegion, DistributionSpec, PassageConfig, Site};
use crate::ray::ray_box;
use crate::scaling::RunOptions;
use crate::seed::replica_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Oracle,
    Metric,
    Duality,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(Suite::Oracle),
            "metric" => Ok(Suite::Metric),
            "duality" => Ok(Suite::Duality),
            _ => Err(format!("unknown suite {s:?} (oracle, metric, duality)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Oracle => "oracle",
            Suite::Metric => "metric",
            Suite::Duality => "duality",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Seeds (oracle, duality) or boxes (metric); `None` for the suite default.
    pub seeds: Option<u64>,
    pub master_seed: u64,
    pub threads: Option<usize>,
    /// Negate every sampled weight before checking.
    #[doc(hidden)]
    pub inject_fault: bool,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }
}

fn check(name: &str, bad: usize, total: usize) -> Check {
    Check { name: name.into(), pass: bad == 0 && total > 0, detail: format!("{bad} of {total} violated") }
}

fn sample(region: &BoxRegion, seed: u64, opts: &VerifyOptions) -> PassageConfig {
    let mut c = sample_config(region, &DistributionSpec::default(), seed).expect("small box");
    if opts.inject_fault {
        c.inject_fault_negate_weights();
    }
    c
}

pub fn verify(suite: Suite, opts: &VerifyOptions) -> VerifyReport {
    let go = || match suite {
        Suite::Oracle => oracle_suite(opts),
        Suite::Metric => metric_suite(opts),
        Suite::Duality => duality_suite(opts),
    };
    let pool = opts.threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok());
    let checks = match pool {
        Some(p) => p.install(go),
        None => go(),
    };
    VerifyReport { suite, checks }
}

/// Minimal passage time over all self-avoiding in-box paths, ties resolved
/// toward the smallest reversed site sequence.
pub fn exhaustive_passage(config: &PassageConfig, x: &Site, y: &Site) -> (f64, Vec<Site>) {
    fn go(c: &PassageConfig, y: &Site, cur: &mut Vec<Site>, t: f64, best: &mut Vec<(f64, Vec<Site>)>) {
        let last = *cur.last().expect("nonempty");
        if last == *y {
            best.push((t, cur.clone()));
            return;
        }
        for k in 0..last.dim() {
            for sgn in [1, -1] {
                let next = last.step(k, sgn);
                if c.region().contains(&next) && !cur.contains(&next) {
                    let w = c.weight_between(&last, &next).expect("in box");
                    cur.push(next);
                    go(c, y, cur, t + w, best);
                    cur.pop();
                }
            }
        }
    }
    let mut all = Vec::new();
    go(config, y, &mut vec![*x], 0.0, &mut all);
    let t = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut ties: Vec<Vec<Site>> = all.into_iter().filter(|p| p.0 == t).map(|p| p.1).collect();
    ties.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    (t, ties.swap_remove(0))
}

fn oracle_suite(opts: &VerifyOptions) -> Vec<Check> {
    let seeds = opts.seeds.unwrap_or(20);
    let mut out = Vec::new();
    for nx in 1..=3 {
        for ny in 1..=3 {
            let region = BoxRegion::new(Site::d2(0, 0), Site::d2(nx - 1, ny - 1)).expect("box");
            let (mut bad_t, mut bad_p, mut total) = (0, 0, 0);
            for i in 0..seeds {
                let c = sample(&region, replica_seed(opts.master_seed, "oracle", i), opts);
                for x in region.sites() {
                    for y in region.sites() {
                        let q = shortest_passage(&c, &x, &y).expect("in box");
                        let (t, p) = exhaustive_passage(&c, &x, &y);
                        total += 1;
                        bad_t += usize::from((q.time - t).abs() > 1e-12);
                        bad_p += usize::from(q.path.sites() != p.as_slice());
                    }
                }
            }
            out.push(check(&format!("time {nx}x{ny}"), bad_t, total));
            out.push(check(&format!("path {nx}x{ny}"), bad_p, total));
        }
    }
    out
}

fn metric_suite(opts: &VerifyOptions) -> Vec<Check> {
    let boxes = opts.seeds.unwrap_or(1);
    let region = BoxRegion::new(Site::d2(0, 0), Site::d2(63, 63)).expect("box");
    let (mut sym, mut tri, mut tree, mut n3, mut nt) = (0, 0, 0, 0, 0);
    for b in 0..boxes {
        let c = sample(&region, replica_seed(opts.master_seed, "metric", b), opts);
        let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(opts.master_seed, "metric-points", b));
        let mut pick = || Site::d2(rng.random_range(0..64), rng.random_range(0..64));
        let triples: Vec<[Site; 3]> = (0..200).map(|_| [pick(), pick(), pick()]).collect();
        let src = pick();
        let targets: Vec<Site> = (0..500).map(|_| pick()).collect();
        let t = |a: &Site, b: &Site| shortest_passage(&c, a, b).expect("in box").time;
        let res: Vec<(bool, bool)> = triples
            .par_iter()
            .map(|[a, b, x]| {
                let (ab, ba, bx, ax) = (t(a, b), t(b, a), t(b, x), t(a, x));
                (ab == ba, ax <= ab + bx)
            })
            .collect();
        sym += res.iter().filter(|r| !r.0).count();
        tri += res.iter().filter(|r| !r.1).count();
        n3 += res.len();
        let tr = geodesic_tree(&c, &[src], None).expect("source in box");
        tree += targets.par_iter().filter(|x| tr.dist(x) != Some(t(&src, x))).count();
        nt += targets.len();
    }
    vec![check("symmetry", sym, n3), check("triangle inequality", tri, n3), check("tree equals point query", tree, nt)]
}

/// Start line, horizon and overshoot of the duality suite.
fn duality_setup() -> (DirectionFrame, Vec<Site>, f64, f64) {
    let theta = DirectionFrame::axis(2, 0, 0.42).expect("axis frame");
    let starts = enumerate_start_sites(&theta, -32, 32).expect("axis line");
    (theta, starts, 32.0, 2.0)
}

fn duality_suite(opts: &VerifyOptions) -> Vec<Check> {
    let seeds = opts.seeds.unwrap_or(100);
    let (theta, starts, r, kappa) = duality_setup();
    let ro = RunOptions::default();
    let region = ray_box(&theta, &starts, kappa * r, &ro).expect("box");
    let per: Vec<[usize; 5]> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let c = sample(&region, replica_seed(opts.master_seed, "duality", i), opts);
            let rows = sources_and_entries(&c, &theta, &theta, r, &starts, kappa, ro.shell).expect("rays");
            let (gaps, intervals) = find_gaps(&theta, &rows);
            let src_bad = rows
                .iter()
                .filter(|x| !x.censored)
                .filter(|x| rows.iter().any(|v| v.z == x.v && !v.is_source))
                .count();
            let (mut jumps, mut jump_bad) = (0, 0);
            for g in &gaps {
                if let Ok(e) = enlarge_gap(&theta, &rows, g) {
                    jumps += 1;
                    jump_bad += usize::from(!jump_property(&theta, &rows, &e));
                }
            }
            [
                usize::from(!duality_holds(&rows, &intervals)),
                usize::from(!entries_monotone(&theta, &rows)),
                src_bad,
                jump_bad,
                jumps,
            ]
        })
        .collect();
    let sum = |k: usize| per.iter().map(|p| p[k]).sum::<usize>();
    let n = per.len();
    vec![
        check("gap duality", sum(0), n),
        check("entry monotonicity", sum(1), n),
        check("last lower site is a source", sum(2), n * starts.len()),
        check("jump property", sum(3), sum(4)),
    ]
}
