use serde::{Deserialize, Serialize};

use super::site::{Site, MAX_DIM};
use super::LatticeError;

/// Default cap on the number of sites a box may hold.
pub const DEFAULT_SITE_CAP: u64 = 200_000_000;

/// An axis-aligned box of Z^d with inclusive bounds.
///
/// Sites are indexed with axis 0 varying slowest, so comparing indices is
/// the same as comparing sites lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxRegion {
    lo: Site,
    hi: Site,
    extent: [usize; MAX_DIM],
    stride: [usize; MAX_DIM],
    sites: u64,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    lo: Site,
    hi: Site,
}

impl Serialize for BoxRegion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RegionRepr {
            lo: self.lo,
            hi: self.hi,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoxRegion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RegionRepr::deserialize(d)?;
        BoxRegion::new(r.lo, r.hi).map_err(serde::de::Error::custom)
    }
}

impl BoxRegion {
    pub fn new(lo: Site, hi: Site) -> Result<Self, LatticeError> {
        if lo.dim() != hi.dim() {
            return Err(LatticeError::BadDimension(hi.dim()));
        }
        let d = lo.dim();
        let mut extent = [1usize; MAX_DIM];
        for k in 0..d {
            if lo.coord(k) > hi.coord(k) {
                return Err(LatticeError::InvalidBox(format!(
                    "lo {lo} exceeds hi {hi} on axis {k}"
                )));
            }
            extent[k] = (i64::from(hi.coord(k)) - i64::from(lo.coord(k)) + 1) as usize;
        }
        let mut stride = [0usize; MAX_DIM];
        let mut acc: u64 = 1;
        for k in (0..d).rev() {
            stride[k] = acc as usize;
            acc = acc.saturating_mul(extent[k] as u64);
        }
        Ok(BoxRegion {
            lo,
            hi,
            extent,
            stride,
            sites: acc,
        })
    }

    /// Box `[-half, half]^d` shifted by `center`.
    pub fn centered(center: Site, half: &[i32]) -> Result<Self, LatticeError> {
        let neg: Vec<i32> = half.iter().map(|h| -h).collect();
        BoxRegion::new(center.offset(&neg), center.offset(half))
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> Site {
        self.lo
    }

    pub fn hi(&self) -> Site {
        self.hi
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.extent[axis]
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.stride[axis]
    }

    pub fn num_sites(&self) -> u64 {
        self.sites
    }

    pub fn contains(&self, s: &Site) -> bool {
        s.dim() == self.dim()
            && (0..self.dim()).all(|k| s.coord(k) >= self.lo.coord(k) && s.coord(k) <= self.hi.coord(k))
    }

    #[inline]
    pub fn index(&self, s: &Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let mut i = 0usize;
        for k in 0..self.dim() {
            i += (s.coord(k) - self.lo.coord(k)) as usize * self.stride[k];
        }
        Some(i)
    }

    #[inline]
    pub fn site(&self, mut index: usize) -> Site {
        let d = self.dim();
        let mut c = [0i32; MAX_DIM];
        for k in 0..d {
            let q = index / self.stride[k];
            index -= q * self.stride[k];
            c[k] = self.lo.coord(k) + q as i32;
        }
        Site::new(&c[..d]).expect("box dimension is valid")
    }

    /// Lattice distance from `s` to the nearest face of the box (0 on the faces).
    pub fn depth(&self, s: &Site) -> i64 {
        (0..self.dim())
            .map(|k| {
                let a = i64::from(s.coord(k)) - i64::from(self.lo.coord(k));
                let b = i64::from(self.hi.coord(k)) - i64::from(s.coord(k));
                a.min(b)
            })
            .min()
            .unwrap_or(0)
    }

    /// True when `s` lies in the outer shell of thickness `margin`.
    pub fn in_shell(&self, s: &Site, margin: i64) -> bool {
        self.depth(s) < margin
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.sites as usize).map(move |i| self.site(i))
    }
}
