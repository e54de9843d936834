use sha2::{Digest, Sha256};

use super::distribution::DistributionSpec;
use super::region::{BoxRegion, DEFAULT_SITE_CAP};
use super::site::{Bond, Site};
use super::LatticeError;
use crate::seed::mix64;

/// Counter-based key of the bond `{base, base + e_axis}` under `seed`.
///
/// Depends only on absolute coordinates, so any sub-box regenerates the same
/// weights as the box that contains it.
#[inline]
pub fn bond_key(seed: u64, base: &Site, axis: usize) -> u64 {
    let mut h = mix64(seed ^ 0x243f_6a88_85a3_08d3);
    for &c in base.coords() {
        h = mix64(h ^ u64::from(c as u32));
    }
    mix64(h ^ ((axis as u64 + 1) << 56))
}

/// A sampled passage-time configuration on a finite box.
///
/// Weights are stored site-major with `d` slots per site; slot `k` of site
/// `x` holds the weight of `{x, x + e_k}`, or `+inf` when `x + e_k` leaves
/// the box. Immutable once built.
#[derive(Clone, Debug)]
pub struct PassageConfig {
    region: BoxRegion,
    spec: DistributionSpec,
    seed: u64,
    weights: Vec<f64>,
}

impl PartialEq for PassageConfig {
    fn eq(&self, other: &Self) -> bool {
        self.region == other.region
            && self.spec == other.spec
            && self.seed == other.seed
            && self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Sample one weight per in-box bond; a deterministic function of its inputs.
pub fn sample_config(
    region: &BoxRegion,
    spec: &DistributionSpec,
    seed: u64,
) -> Result<PassageConfig, LatticeError> {
    sample_config_capped(region, spec, seed, DEFAULT_SITE_CAP)
}

pub fn sample_config_capped(
    region: &BoxRegion,
    spec: &DistributionSpec,
    seed: u64,
    site_cap: u64,
) -> Result<PassageConfig, LatticeError> {
    if region.num_sites() > site_cap {
        return Err(LatticeError::BoxTooLarge {
            sites: region.num_sites(),
            cap: site_cap,
        });
    }
    spec.validate()?;
    let d = region.dim();
    let n = region.num_sites() as usize;
    let mut weights = vec![f64::INFINITY; n * d];
    let table = match spec {
        DistributionSpec::TestTable(t) => Some((t.lookup_map(), t.default)),
        _ => None,
    };
    let lo = region.lo();
    let hi = region.hi();
    // Walk the sites in index order, carrying the coordinates along.
    let mut cur = lo;
    for i in 0..n {
        for k in 0..d {
            if cur.coord(k) == hi.coord(k) {
                continue;
            }
            let w = match &table {
                Some((map, default)) => {
                    let bond = Bond::new(cur, k);
                    match map.get(&bond).copied().or(*default) {
                        Some(w) => w,
                        None => {
                            return Err(LatticeError::InvalidSpec(format!(
                                "weight table has no entry for bond {cur}+e{k}"
                            )))
                        }
                    }
                }
                None => spec.draw(bond_key(seed, &cur, k)),
            };
            weights[i * d + k] = w;
        }
        // advance odometer, last axis fastest
        for k in (0..d).rev() {
            if cur.coord(k) < hi.coord(k) {
                cur = cur.step(k, 1);
                break;
            }
            let reset = lo.coord(k) - cur.coord(k);
            cur = cur.step(k, reset);
        }
    }
    Ok(PassageConfig {
        region: region.clone(),
        spec: spec.clone(),
        seed,
        weights,
    })
}

impl PassageConfig {
    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    /// Raw slot array (see the type docs for the layout).
    #[inline]
    pub fn slots(&self) -> &[f64] {
        &self.weights
    }

    pub fn bond_weight(&self, bond: &Bond) -> Result<f64, LatticeError> {
        let i = self
            .region
            .index(&bond.base)
            .filter(|_| self.region.contains(&bond.tip()))
            .ok_or(LatticeError::OutOfBox(bond.base))?;
        Ok(self.weights[i * self.dim() + bond.axis])
    }

    /// Weight of the bond between neighboring sites `u` and `v`.
    pub fn weight_between(&self, u: &Site, v: &Site) -> Result<f64, LatticeError> {
        self.bond_weight(&super::site::canonical_bond(u, v)?)
    }

    pub fn num_bonds(&self) -> usize {
        self.weights.iter().filter(|w| w.is_finite()).count()
    }

    /// All in-box bonds in canonical order (by base site, then axis).
    pub fn bonds(&self) -> impl Iterator<Item = (Bond, f64)> + '_ {
        let d = self.dim();
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_finite())
            .map(move |(j, w)| (Bond::new(self.region.site(j / d), j % d), *w))
    }

    /// SHA-256 of the weight slots, truncated to 64 bits.
    pub fn checksum(&self) -> u64 {
        let mut h = Sha256::new();
        for w in &self.weights {
            h.update(w.to_bits().to_le_bytes());
        }
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
    }

    /// Negate every weight. Only used to check that the verification suites
    /// notice a broken configuration.
    #[doc(hidden)]
    pub fn inject_fault_negate_weights(&mut self) {
        for w in self.weights.iter_mut().filter(|w| w.is_finite()) {
            *w = -*w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::distribution::WeightTable;

    fn box2(nx: i32, ny: i32) -> BoxRegion {
        BoxRegion::new(Site::d2(0, 0), Site::d2(nx - 1, ny - 1)).unwrap()
    }

    #[test]
    fn two_by_two_table_has_four_bonds() {
        let c = sample_config(&box2(2, 2), &DistributionSpec::TestTable(WeightTable::constant(1.0)), 9).unwrap();
        let bonds: Vec<_> = c.bonds().collect();
        assert_eq!(bonds.len(), 4);
        assert!(bonds.iter().all(|(_, w)| *w == 1.0));
    }

    #[test]
    fn table_passthrough_and_out_of_box() {
        let spec = DistributionSpec::TestTable(WeightTable::constant(1.0).with(Site::d2(1, 1), 0, 0.3));
        let c = sample_config(&box2(4, 4), &spec, 0).unwrap();
        let b = Bond::new(Site::d2(1, 1), 0);
        assert_eq!(c.bond_weight(&b).unwrap(), 0.3);
        assert_eq!(c.bond_weight(&b).unwrap(), c.bond_weight(&b).unwrap());
        assert!(matches!(
            c.bond_weight(&Bond::new(Site::d2(3, 0), 0)),
            Err(LatticeError::OutOfBox(_))
        ));
        assert!(c.bond_weight(&Bond::new(Site::d2(-1, 0), 0)).is_err());
    }

    #[test]
    fn incomplete_table_is_invalid() {
        let spec = DistributionSpec::TestTable(WeightTable::default().with(Site::d2(0, 0), 0, 1.0));
        assert!(matches!(sample_config(&box2(2, 2), &spec, 0), Err(LatticeError::InvalidSpec(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let r = box2(100, 100);
        let e = sample_config_capped(&r, &DistributionSpec::default(), 1, 9_999).unwrap_err();
        assert!(matches!(e, LatticeError::BoxTooLarge { sites: 10_000, cap: 9_999 }));
    }

    #[test]
    fn invalid_spec_is_reported() {
        let e = sample_config(&box2(3, 3), &DistributionSpec::Exponential { rate: 0.0 }, 1).unwrap_err();
        assert!(matches!(e, LatticeError::InvalidSpec(_)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = box2(20, 17);
        let a = sample_config(&r, &DistributionSpec::default(), 7).unwrap();
        let b = sample_config(&r, &DistributionSpec::default(), 7).unwrap();
        assert_eq!(a, b);
        let c = sample_config(&r, &DistributionSpec::default(), 8).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn sub_box_regenerates_the_same_weights() {
        let big = sample_config(&box2(30, 30), &DistributionSpec::default(), 3).unwrap();
        let sub_region = BoxRegion::new(Site::d2(5, 7), Site::d2(12, 20)).unwrap();
        let sub = sample_config(&sub_region, &DistributionSpec::default(), 3).unwrap();
        for (bond, w) in sub.bonds() {
            assert_eq!(big.bond_weight(&bond).unwrap().to_bits(), w.to_bits());
        }
    }

    #[test]
    fn weights_nonnegative_and_finite_in_d3() {
        let r = BoxRegion::new(Site::new(&[0, 0, 0]).unwrap(), Site::new(&[6, 5, 4]).unwrap()).unwrap();
        for spec in [
            DistributionSpec::default(),
            DistributionSpec::Uniform { a: 0.5, b: 2.0 },
            DistributionSpec::Gamma { shape: 2.0, scale: 1.0 },
        ] {
            let c = sample_config(&r, &spec, 11).unwrap();
            // 3 * 7*6*5 - (6*5 + 7*5 + 7*6) bonds leave the box
            assert_eq!(c.num_bonds(), 3 * 210 - (30 + 35 + 42));
            assert!(c.bonds().all(|(_, w)| w.is_finite() && w >= 0.0));
        }
    }
}
