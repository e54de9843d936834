//! Exact shortest paths on a sampled configuration.
//!
//! All searches run a label-setting scan over the dense site index of the
//! configuration's box. Equal tentative distances keep the lexicographically
//! smaller predecessor, so every tree and path is a deterministic function of
//! the weights.

mod heap;
mod path;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::DirectionFrame;
use crate::lattice::{BoxRegion, LatticeError, PassageConfig, Site};
use heap::QuadHeap;
pub use path::LatticePath;

#[derive(Debug, Error)]
pub enum GeodesicError {
    #[error("{0} is outside the box")]
    OutOfBox(Site),
    #[error("{0} was not reached by the search")]
    Unreached(Site),
    #[error("path never enters the halfspace")]
    NoEntry,
    #[error("empty source set")]
    NoSources,
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Margin used by the free functions: the outermost layer of sites.
pub const DEFAULT_MARGIN: i64 = 1;

const SETTLED: u8 = 0x80;
const CODE_MASK: u8 = 0x7f;
const SOURCE: u8 = 0x40;
const NONE: u8 = 0x7f;

#[derive(Clone, Debug, Serialize)]
pub struct QueryResult {
    pub time: f64,
    pub path: LatticePath,
    pub touched_boundary: bool,
}

/// Shortest-path tree from a source set.
///
/// Parent links are stored as direction codes: `k < d` means the parent is
/// `v + e_k`, `d + k` means `v - e_k`.
#[derive(Clone, Debug)]
pub struct GeodesicTree {
    region: BoxRegion,
    sources: Vec<Site>,
    dist: Vec<f64>,
    parent: Vec<u8>,
}

impl GeodesicTree {
    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn sources(&self) -> &[Site] {
        &self.sources
    }

    #[inline]
    pub fn is_finalized_index(&self, i: usize) -> bool {
        self.parent[i] & SETTLED != 0
    }

    /// Exact passage time from the source set, for finalized sites only.
    #[inline]
    pub fn dist_index(&self, i: usize) -> Option<f64> {
        self.is_finalized_index(i).then(|| self.dist[i])
    }

    pub fn dist(&self, v: &Site) -> Option<f64> {
        self.region.index(v).and_then(|i| self.dist_index(i))
    }

    pub fn is_source_index(&self, i: usize) -> bool {
        self.parent[i] & CODE_MASK == SOURCE
    }

    /// Parent index of a finalized non-source site.
    #[inline]
    pub fn parent_index(&self, i: usize) -> Option<usize> {
        if !self.is_finalized_index(i) {
            return None;
        }
        let code = (self.parent[i] & CODE_MASK) as usize;
        let d = self.region.dim();
        if code < d {
            Some(i + self.region.stride(code))
        } else if code < 2 * d {
            Some(i - self.region.stride(code - d))
        } else {
            None
        }
    }

    /// Parent of `v`; sources map to themselves.
    pub fn parent(&self, v: &Site) -> Option<Site> {
        let i = self.region.index(v)?;
        if !self.is_finalized_index(i) {
            return None;
        }
        if self.is_source_index(i) {
            return Some(*v);
        }
        self.parent_index(i).map(|p| self.region.site(p))
    }

    /// Site indices from `i` back to its source, `i` first.
    pub fn trace_indices(&self, i: usize) -> Option<Vec<usize>> {
        if !self.is_finalized_index(i) {
            return None;
        }
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent_index(cur) {
            out.push(p);
            cur = p;
        }
        Some(out)
    }

    /// Tree path from `v` back to its source, `v` first.
    pub fn trace_to_source(&self, v: &Site) -> Result<LatticePath, GeodesicError> {
        let i = self.region.index(v).ok_or(GeodesicError::OutOfBox(*v))?;
        let idx = self.trace_indices(i).ok_or(GeodesicError::Unreached(*v))?;
        Ok(LatticePath::from_trusted(idx.into_iter().map(|j| self.region.site(j)).collect()))
    }

    pub fn num_finalized(&self) -> usize {
        self.parent.iter().filter(|p| **p & SETTLED != 0).count()
    }
}

/// Tree path from its source to `v`, in source-to-`v` order.
pub fn path_from_tree(tree: &GeodesicTree, v: &Site) -> Result<LatticePath, GeodesicError> {
    tree.trace_to_source(v).map(|p| p.reversed())
}

/// Which sites the search must finalize before it may stop.
#[derive(Clone, Copy)]
pub(crate) enum Halt<'a> {
    Exhaust,
    /// Stop once every marked index is finalized.
    All(&'a [bool], usize),
}

/// Label-setting search over the dense index of `config`'s box.
pub(crate) fn search(config: &PassageConfig, sources: &[usize], halt: Halt<'_>) -> (Vec<f64>, Vec<u8>) {
    let region = config.region();
    let d = region.dim();
    let n = region.num_sites() as usize;
    let w = config.slots();
    let strides: Vec<usize> = (0..d).map(|k| region.stride(k)).collect();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![NONE; n];
    let mut heap = QuadHeap::with_capacity(1024);
    for &s in sources {
        if dist[s] != 0.0 {
            dist[s] = 0.0;
            parent[s] = SOURCE;
            heap.push(0.0, s as u32);
        }
    }
    let (mask, mut remaining) = match halt {
        Halt::Exhaust => (None, usize::MAX),
        Halt::All(m, c) => (Some(m), c),
    };
    if remaining == 0 {
        return (dist, parent);
    }
    while let Some((du, ui)) = heap.pop() {
        let u = ui as usize;
        if parent[u] & SETTLED != 0 || du > dist[u] {
            continue;
        }
        parent[u] |= SETTLED;
        if let Some(m) = mask {
            if m[u] {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
        }
        for (k, &st) in strides.iter().enumerate() {
            // bond {u, u + e_k}
            let wp = w[u * d + k];
            if wp < f64::INFINITY {
                relax(&mut dist, &mut parent, &mut heap, &strides, u, u + st, du + wp, (d + k) as u8);
            }
            // bond {u - e_k, u}
            if u >= st {
                let v = u - st;
                let wm = w[v * d + k];
                if wm < f64::INFINITY {
                    relax(&mut dist, &mut parent, &mut heap, &strides, u, v, du + wm, k as u8);
                }
            }
        }
    }
    (dist, parent)
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn relax(
    dist: &mut [f64],
    parent: &mut [u8],
    heap: &mut QuadHeap,
    strides: &[usize],
    u: usize,
    v: usize,
    nd: f64,
    code: u8,
) {
    let pv = parent[v];
    if pv & SETTLED != 0 {
        return;
    }
    let cur = dist[v];
    if nd < cur {
        dist[v] = nd;
        parent[v] = code;
        heap.push(nd, v as u32);
    } else if nd == cur && pv != SOURCE && u < code_target(v, pv, strides) {
        parent[v] = code;
    }
}

/// Index that parent code `code` of `v` points to.
#[inline(always)]
fn code_target(v: usize, code: u8, strides: &[usize]) -> usize {
    let d = strides.len();
    let c = code as usize;
    if c < d {
        v + strides[c]
    } else {
        v - strides[c - d]
    }
}

/// Search engine bound to one configuration and a boundary margin.
pub struct Engine<'c> {
    config: &'c PassageConfig,
    margin: i64,
}

impl<'c> Engine<'c> {
    pub fn new(config: &'c PassageConfig) -> Self {
        Engine {
            config,
            margin: DEFAULT_MARGIN,
        }
    }

    pub fn with_margin(mut self, margin: i64) -> Self {
        self.margin = margin;
        self
    }

    pub fn config(&self) -> &'c PassageConfig {
        self.config
    }

    pub fn margin(&self) -> i64 {
        self.margin
    }

    fn index_of(&self, s: &Site) -> Result<usize, GeodesicError> {
        self.config.region().index(s).ok_or(GeodesicError::OutOfBox(*s))
    }

    pub fn shortest_passage(&self, x: &Site, y: &Site) -> Result<QueryResult, GeodesicError> {
        let xi = self.index_of(x)?;
        let yi = self.index_of(y)?;
        let region = self.config.region();
        let mut mask = vec![false; region.num_sites() as usize];
        mask[yi] = true;
        let (dist, parent) = search(self.config, &[xi], Halt::All(&mask, 1));
        let tree = GeodesicTree {
            region: region.clone(),
            sources: vec![*x],
            dist,
            parent,
        };
        let path = path_from_tree(&tree, y)?;
        Ok(QueryResult {
            time: tree.dist[yi],
            touched_boundary: path.touches_shell(region, self.margin),
            path,
        })
    }

    /// Tree from `sources`; with `stop`, halts once every site satisfying it
    /// is finalized.
    pub fn geodesic_tree(
        &self,
        sources: &[Site],
        stop: Option<&dyn Fn(&Site) -> bool>,
    ) -> Result<GeodesicTree, GeodesicError> {
        if sources.is_empty() {
            return Err(GeodesicError::NoSources);
        }
        let idx = sources.iter().map(|s| self.index_of(s)).collect::<Result<Vec<_>, _>>()?;
        let region = self.config.region();
        let (dist, parent) = match stop {
            None => search(self.config, &idx, Halt::Exhaust),
            Some(pred) => {
                let mask: Vec<bool> = region.sites().map(|s| pred(&s)).collect();
                let count = mask.iter().filter(|m| **m).count();
                search(self.config, &idx, Halt::All(&mask, count))
            }
        };
        Ok(self.wrap(sources.to_vec(), dist, parent))
    }

    /// Tree from sources by index, stopping once all marked sites are final.
    pub(crate) fn tree_until(&self, sources: &[usize], mask: &[bool]) -> GeodesicTree {
        let count = mask.iter().filter(|m| **m).count();
        let (dist, parent) = search(self.config, sources, Halt::All(mask, count));
        let region = self.config.region();
        let src = sources.iter().map(|&i| region.site(i)).collect();
        self.wrap(src, dist, parent)
    }

    fn wrap(&self, sources: Vec<Site>, dist: Vec<f64>, parent: Vec<u8>) -> GeodesicTree {
        GeodesicTree {
            region: self.config.region().clone(),
            sources,
            dist,
            parent,
        }
    }
}

pub fn shortest_passage(config: &PassageConfig, x: &Site, y: &Site) -> Result<QueryResult, GeodesicError> {
    Engine::new(config).shortest_passage(x, y)
}

pub fn geodesic_tree(
    config: &PassageConfig,
    sources: &[Site],
    stop: Option<&dyn Fn(&Site) -> bool>,
) -> Result<GeodesicTree, GeodesicError> {
    Engine::new(config).geodesic_tree(sources, stop)
}

/// First site of `path` in `{x : x . z >= s}`.
pub fn first_entry_point(path: &LatticePath, frame: &DirectionFrame, s: f64) -> Result<Site, GeodesicError> {
    first_entry_position(path, frame, s).map(|i| path.sites()[i])
}

pub fn first_entry_position(path: &LatticePath, frame: &DirectionFrame, s: f64) -> Result<usize, GeodesicError> {
    path.sites()
        .iter()
        .position(|x| frame.level(x) >= s)
        .ok_or(GeodesicError::NoEntry)
}

/// True iff only the first bond meets `{u1 < s1}` and only the last bond
/// meets `{u1 >= s2}`.
pub fn is_slab_geodesic(path: &LatticePath, frame: &DirectionFrame, s1: f64, s2: f64) -> bool {
    let sites = path.sites();
    let n = sites.len();
    if n < 2 || s1 >= s2 {
        return false;
    }
    let lv: Vec<f64> = sites.iter().map(|x| frame.level(x)).collect();
    lv[0] < s1 && lv[1..].iter().all(|&u| u >= s1) && lv[n - 1] >= s2 && lv[..n - 1].iter().all(|&u| u < s2)
}
