use serde::{Deserialize, Serialize};

use super::{line_normal, projected, CoalescenceError};
use crate::geometry::DirectionFrame;
use crate::lattice::{PassageConfig, Site};
use crate::ray::{RayError, RayField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSiteRow {
    pub z: Site,
    pub height: i32,
    /// The ray's only site on the closed lower side of the line is `z`.
    pub is_source: bool,
    /// Last site of the ray on the lower side.
    pub v: Site,
    /// Entry point of the ray from `v` into `{x . z~ >= r}`; `None` when
    /// censored.
    pub w: Option<Site>,
    pub censored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapKind {
    Gap,
    Enlarged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    /// Projected positions of the bounding sources (for an enlarged gap,
    /// of the enlarged ends).
    pub lo: f64,
    pub hi: f64,
    pub kind: GapKind,
    pub lower: Site,
    pub upper: Site,
    pub g_min: Option<Site>,
    pub g_max: Option<Site>,
}

impl GapRecord {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Maximal run of consecutive sources sharing one entry point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryInterval {
    pub lo: f64,
    pub hi: f64,
    pub sources: Vec<Site>,
    pub w: Site,
}

/// Rays from every start site to the slab at `kappa * r` (levels of
/// `theta`), with their last lower-side site and their entry point into
/// `{x . z~ >= r}`.
pub fn sources_and_entries(
    config: &PassageConfig,
    theta: &DirectionFrame,
    tilde: &DirectionFrame,
    r: f64,
    starts: &[Site],
    kappa: f64,
    shell: i64,
) -> Result<Vec<StartSiteRow>, CoalescenceError> {
    if !(kappa >= 2.0) {
        return Err(RayError::Overshoot(kappa).into());
    }
    let field = RayField::new(config, theta, kappa * r, starts, shell)?;
    rows_from_field(&field, tilde, r, starts)
}

pub(crate) fn rows_from_field(
    field: &RayField<'_>,
    tilde: &DirectionFrame,
    r: f64,
    starts: &[Site],
) -> Result<Vec<StartSiteRow>, CoalescenceError> {
    let n = line_normal(tilde)?;
    let region = field.region();
    starts
        .iter()
        .map(|z| {
            if n.eval(z) > 0 || n.eval(&z.step(0, 1)) <= 0 {
                return Err(CoalescenceError::BadOrientation(format!("{z} is not a start site")));
            }
            let idx = field.indices(z)?;
            let sites: Vec<Site> = idx.iter().map(|&p| region.site(p)).collect();
            let k = sites.iter().rposition(|s| n.eval(s) <= 0).expect("z is on the lower side");
            let v = sites[k];
            // the entry point belongs to the ray of V, the tail of this one
            let w = sites[k..].iter().find(|s| tilde.level(s) >= r).copied();
            let censored = field.touches_shell(&idx) || w.is_none();
            Ok(StartSiteRow {
                z: *z,
                height: z.coord(1),
                is_source: v == *z,
                v,
                w: if censored { None } else { w },
                censored,
            })
        })
        .collect()
}

fn sorted_sources(rows: &[StartSiteRow]) -> Vec<&StartSiteRow> {
    let mut s: Vec<&StartSiteRow> = rows.iter().filter(|r| r.is_source && !r.censored).collect();
    s.sort_by_key(|r| r.height);
    s
}

/// Gaps between consecutive uncensored sources with distinct entry points,
/// and the entry intervals between them.
pub fn find_gaps(tilde: &DirectionFrame, rows: &[StartSiteRow]) -> (Vec<GapRecord>, Vec<EntryInterval>) {
    let src = sorted_sources(rows);
    let mut gaps = Vec::new();
    let mut intervals: Vec<EntryInterval> = Vec::new();
    for (i, s) in src.iter().enumerate() {
        let p = projected(tilde, &s.z);
        let w = s.w.expect("uncensored");
        if i > 0 && src[i - 1].w == s.w {
            let cur = intervals.last_mut().expect("open interval");
            cur.hi = p;
            cur.sources.push(s.z);
            continue;
        }
        if i > 0 {
            let prev = src[i - 1];
            gaps.push(GapRecord {
                lo: projected(tilde, &prev.z),
                hi: p,
                kind: super::GapKind::Gap,
                lower: prev.z,
                upper: s.z,
                g_min: None,
                g_max: None,
            });
        }
        intervals.push(EntryInterval { lo: p, hi: p, sources: vec![s.z], w });
    }
    (gaps, intervals)
}

/// `W_v = W_w` exactly when `v` and `w` lie in the same entry interval, for
/// every pair of uncensored sources.
pub fn duality_holds(rows: &[StartSiteRow], intervals: &[EntryInterval]) -> bool {
    let src = sorted_sources(rows);
    let which = |z: &Site| intervals.iter().position(|iv| iv.sources.contains(z));
    for (i, a) in src.iter().enumerate() {
        for b in &src[i + 1..] {
            if (a.w == b.w) != (which(&a.z) == which(&b.z)) {
                return false;
            }
        }
    }
    true
}

/// Projected entry points never decrease along the start line: rows
/// ordered by their projected `V` (the start of the ray `W` belongs to)
/// have nondecreasing projected `W`.
pub fn entries_monotone(tilde: &DirectionFrame, rows: &[StartSiteRow]) -> bool {
    let mut r: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.censored)
        .map(|x| (projected(tilde, &x.v), projected(tilde, &x.w.expect("uncensored"))))
        .collect();
    r.sort_by(|a, b| a.0.total_cmp(&b.0));
    r.windows(2).all(|p| p[0].1 <= p[1].1)
}

/// Extend `gap` by the start sites that jump across it: `g_min` is the
/// lowest start whose `V` lies at or above the gap, `g_max` the highest
/// whose `V` lies at or below it.
pub fn enlarge_gap(tilde: &DirectionFrame, rows: &[StartSiteRow], gap: &GapRecord) -> Result<GapRecord, CoalescenceError> {
    let mut r: Vec<&StartSiteRow> = rows.iter().collect();
    r.sort_by_key(|x| x.height);
    let (Some(first), Some(last)) = (r.first(), r.last()) else {
        return Err(CoalescenceError::MissingSide("lower"));
    };
    let (first_h, last_h) = (first.height, last.height);
    let pv = |x: &StartSiteRow| projected(tilde, &x.v);

    let gmin = r.iter().find(|x| !x.censored && pv(x) >= gap.hi).expect("the upper source qualifies");
    let gmax = r.iter().rev().find(|x| !x.censored && pv(x) <= gap.lo).expect("the lower source qualifies");
    if gmin.height == first_h || r.iter().any(|x| x.censored && x.height < gmin.height) {
        return Err(CoalescenceError::MissingSide("lower"));
    }
    if gmax.height == last_h || r.iter().any(|x| x.censored && x.height > gmax.height) {
        return Err(CoalescenceError::MissingSide("upper"));
    }
    let lo = gap.lo.min(projected(tilde, &gmin.z));
    let hi = gap.hi.max(projected(tilde, &gmax.z));
    Ok(GapRecord {
        lo,
        hi,
        kind: super::GapKind::Enlarged,
        lower: gap.lower,
        upper: gap.upper,
        g_min: Some(gmin.z),
        g_max: Some(gmax.z),
    })
}

/// One of `g_min`, `g_max` jumps at least `|G+|/2 - 1` along the line.
pub fn jump_property(tilde: &DirectionFrame, rows: &[StartSiteRow], enlarged: &GapRecord) -> bool {
    let jump = |z: Option<Site>| -> f64 {
        let Some(z) = z else { return 0.0 };
        let row = rows.iter().find(|r| r.z == z).expect("row of g_min/g_max");
        (projected(tilde, &row.z) - projected(tilde, &row.v)).abs()
    };
    let need = enlarged.length() / 2.0 - 1.0;
    jump(enlarged.g_min).max(jump(enlarged.g_max)) >= need - 1e-9
}
