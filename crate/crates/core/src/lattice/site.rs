use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use super::LatticeError;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 4;

/// A site of Z^d, 2 <= d <= 4.
///
/// The derived ordering is lexicographic on the coordinates (sites of
/// different dimension never meet in practice).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl Site {
    pub fn new(coords: &[i32]) -> Result<Self, LatticeError> {
        if !(2..=MAX_DIM).contains(&coords.len()) {
            return Err(LatticeError::BadDimension(coords.len()));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Site {
            dim: coords.len() as u8,
            coords: c,
        })
    }

    pub fn d2(x: i32, y: i32) -> Self {
        Site {
            dim: 2,
            coords: [x, y, 0, 0],
        }
    }

    pub fn origin(dim: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Site {
            dim: dim as u8,
            coords: [0; MAX_DIM],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i32 {
        self.coords[axis]
    }

    /// The neighbor `self + sign * e_axis`.
    pub fn step(&self, axis: usize, sign: i32) -> Site {
        let mut s = *self;
        s.coords[axis] += sign;
        s
    }

    pub fn offset(&self, delta: &[i32]) -> Site {
        let mut s = *self;
        for (c, d) in s.coords.iter_mut().zip(delta) {
            *c += d;
        }
        s
    }

    pub fn l1_distance(&self, other: &Site) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (i64::from(*a) - i64::from(*b)).abs())
            .sum()
    }

    pub fn is_neighbor(&self, other: &Site) -> bool {
        self.dim == other.dim && self.l1_distance(other) == 1
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords().iter().map(|&c| f64::from(c)).collect()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.coords()
            .iter()
            .zip(v)
            .map(|(&c, &x)| f64::from(c) * x)
            .sum()
    }
}

/// The rounding map Z: R^d -> Z^d, sending the cell `z + [-1/2, 1/2)^d` to `z`.
pub fn nearest_site(x: &[f64]) -> Result<Site, LatticeError> {
    let coords: Vec<i32> = x.iter().map(|v| (v + 0.5).floor() as i32).collect();
    Site::new(&coords)
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords().iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for c in self.coords() {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SiteVisitor;
        impl<'de> Visitor<'de> for SiteVisitor {
            type Value = Site;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of 2 to 4 integer coordinates")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Site, A::Error> {
                let mut coords = Vec::new();
                while let Some(c) = seq.next_element::<i32>()? {
                    coords.push(c);
                }
                Site::new(&coords).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_seq(SiteVisitor)
    }
}

/// A nearest-neighbor bond in canonical form `{base, base + e_axis}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Bond {
    pub base: Site,
    pub axis: usize,
}

impl Bond {
    pub fn new(base: Site, axis: usize) -> Self {
        Bond { base, axis }
    }

    pub fn tip(&self) -> Site {
        self.base.step(self.axis, 1)
    }
}

/// Canonical bond of the unordered pair {u, v}.
pub fn canonical_bond(u: &Site, v: &Site) -> Result<Bond, LatticeError> {
    if !u.is_neighbor(v) {
        return Err(LatticeError::NotAdjacent(*u, *v));
    }
    let axis = (0..u.dim())
        .find(|&k| u.coord(k) != v.coord(k))
        .expect("neighbors differ in one axis");
    let base = if u.coord(axis) < v.coord(axis) { *u } else { *v };
    Ok(Bond { base, axis })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_bond_is_symmetric() {
        let u = Site::d2(3, 4);
        let v = Site::d2(3, 5);
        let b = canonical_bond(&u, &v).unwrap();
        assert_eq!(b, canonical_bond(&v, &u).unwrap());
        assert_eq!(b.base, u);
        assert_eq!(b.axis, 1);
        assert_eq!(b.tip(), v);
    }

    #[test]
    fn non_neighbors_are_rejected() {
        assert!(canonical_bond(&Site::d2(0, 0), &Site::d2(1, 1)).is_err());
        assert!(canonical_bond(&Site::d2(0, 0), &Site::d2(0, 0)).is_err());
    }

    #[test]
    fn rounding_uses_half_open_cells() {
        assert_eq!(nearest_site(&[0.5, -0.5]).unwrap(), Site::d2(1, 0));
        assert_eq!(nearest_site(&[0.49, -0.51]).unwrap(), Site::d2(0, -1));
    }

    #[test]
    fn ordering_is_lexicographic() {
        assert!(Site::d2(0, 5) < Site::d2(1, -5));
        assert!(Site::d2(1, -5) < Site::d2(1, -4));
    }

    #[test]
    fn site_serde_is_a_plain_list() {
        let s = Site::new(&[1, -2, 3]).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, "[1,-2,3]");
        let back: Site = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
    }
}
