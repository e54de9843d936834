use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::GeodesicError;
use crate::lattice::{BoxRegion, PassageConfig, Site};

/// A self-avoiding nearest-neighbor path, stored as its site sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    sites: Vec<Site>,
}

impl LatticePath {
    pub fn new(sites: Vec<Site>) -> Result<Self, GeodesicError> {
        if sites.is_empty() {
            return Err(GeodesicError::InvalidPath("empty path".into()));
        }
        for w in sites.windows(2) {
            if !w[0].is_neighbor(&w[1]) {
                return Err(GeodesicError::InvalidPath(format!("{} and {} are not neighbors", w[0], w[1])));
            }
        }
        let mut seen = HashSet::with_capacity(sites.len());
        for s in &sites {
            if !seen.insert(*s) {
                return Err(GeodesicError::InvalidPath(format!("site {s} repeats")));
            }
        }
        Ok(LatticePath { sites })
    }

    /// Caller guarantees the path invariants (used for tree paths).
    pub(crate) fn from_trusted(sites: Vec<Site>) -> Self {
        debug_assert!(!sites.is_empty());
        LatticePath { sites }
    }

    pub fn single(site: Site) -> Self {
        LatticePath { sites: vec![site] }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<Site> {
        self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Number of bonds.
    pub fn num_bonds(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn first(&self) -> Site {
        self.sites[0]
    }

    pub fn last(&self) -> Site {
        *self.sites.last().expect("paths are nonempty")
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.sites.contains(s)
    }

    pub fn reversed(&self) -> LatticePath {
        let mut s = self.sites.clone();
        s.reverse();
        LatticePath { sites: s }
    }

    /// Sub-path between positions `a` and `b` inclusive.
    pub fn slice(&self, a: usize, b: usize) -> LatticePath {
        LatticePath {
            sites: self.sites[a..=b].to_vec(),
        }
    }

    /// Passage time: the sum of the bond weights along the path.
    pub fn passage_time(&self, config: &PassageConfig) -> Result<f64, GeodesicError> {
        let mut t = 0.0;
        for w in self.sites.windows(2) {
            t += config.weight_between(&w[0], &w[1])?;
        }
        Ok(t)
    }

    pub fn touches_shell(&self, region: &BoxRegion, margin: i64) -> bool {
        margin > 0 && self.sites.iter().any(|s| region.in_shell(s, margin))
    }

    /// One "x0,x1[,x2...]" row per site.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for s in &self.sites {
            let row: Vec<String> = s.coords().iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(LatticePath::new(vec![]).is_err());
        assert!(LatticePath::new(vec![Site::d2(0, 0), Site::d2(1, 1)]).is_err());
        assert!(LatticePath::new(vec![Site::d2(0, 0), Site::d2(1, 0), Site::d2(0, 0)]).is_err());
        let p = LatticePath::new(vec![Site::d2(0, 0), Site::d2(1, 0), Site::d2(1, 1)]).unwrap();
        assert_eq!(p.num_bonds(), 2);
        assert_eq!(p.to_csv(), "0,0\n1,0\n1,1\n");
    }
}
