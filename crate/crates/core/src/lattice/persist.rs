//! Saved configurations: a small little-endian binary header from which the
//! weights are regenerated on load.
//!
//! ```text
//! "FPPC" | version u16 | d u8 | lo i32*d | hi i32*d | spec | seed u64 | checksum u64
//! spec := tag u8, then
//!   1 exponential: rate f64
//!   2 uniform:     a f64, b f64
//!   3 gamma:       shape f64, scale f64
//!   4 table:       has_default u8, default f64, n u32, n * (base i32*d, axis u8, weight f64)
//! ```

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use super::config::{sample_config, PassageConfig};
use super::distribution::{DistributionSpec, TableEntry, WeightTable};
use super::region::BoxRegion;
use super::site::Site;
use super::LatticeError;

const MAGIC: &[u8; 4] = b"FPPC";
const VERSION: u16 = 1;

pub fn save_config(config: &PassageConfig, path: &Path) -> Result<(), LatticeError> {
    let bytes = encode(config);
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_config(path: &Path) -> Result<PassageConfig, LatticeError> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

pub fn encode(config: &PassageConfig) -> Vec<u8> {
    let mut out = Vec::new();
    let region = config.region();
    let d = region.dim();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(d as u8);
    for s in [region.lo(), region.hi()] {
        for &c in s.coords() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    match config.spec() {
        DistributionSpec::Exponential { rate } => {
            out.push(1);
            out.extend_from_slice(&rate.to_le_bytes());
        }
        DistributionSpec::Uniform { a, b } => {
            out.push(2);
            out.extend_from_slice(&a.to_le_bytes());
            out.extend_from_slice(&b.to_le_bytes());
        }
        DistributionSpec::Gamma { shape, scale } => {
            out.push(3);
            out.extend_from_slice(&shape.to_le_bytes());
            out.extend_from_slice(&scale.to_le_bytes());
        }
        DistributionSpec::TestTable(t) => {
            out.push(4);
            out.push(u8::from(t.default.is_some()));
            out.extend_from_slice(&t.default.unwrap_or(0.0).to_le_bytes());
            out.extend_from_slice(&(t.entries.len() as u32).to_le_bytes());
            for e in &t.entries {
                for &c in e.base.coords() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                out.push(e.axis as u8);
                out.extend_from_slice(&e.weight.to_le_bytes());
            }
        }
    }
    out.extend_from_slice(&config.seed().to_le_bytes());
    out.extend_from_slice(&config.checksum().to_le_bytes());
    out
}

struct Reader<'a>(Cursor<&'a [u8]>);

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], LatticeError> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| LatticeError::BadFormat("truncated file".into()))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8, LatticeError> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16, LatticeError> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    fn u32(&mut self) -> Result<u32, LatticeError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn i32(&mut self) -> Result<i32, LatticeError> {
        Ok(i32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64, LatticeError> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64, LatticeError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn site(&mut self, d: usize) -> Result<Site, LatticeError> {
        let coords = (0..d).map(|_| self.i32()).collect::<Result<Vec<_>, _>>()?;
        Site::new(&coords)
    }
}

pub fn decode(bytes: &[u8]) -> Result<PassageConfig, LatticeError> {
    let mut r = Reader(Cursor::new(bytes));
    if &r.take::<4>()? != MAGIC {
        return Err(LatticeError::BadFormat("missing FPPC magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(LatticeError::BadFormat(format!("unsupported version {version}")));
    }
    let d = r.u8()? as usize;
    let lo = r.site(d)?;
    let hi = r.site(d)?;
    let region = BoxRegion::new(lo, hi)?;
    let spec = match r.u8()? {
        1 => DistributionSpec::Exponential { rate: r.f64()? },
        2 => DistributionSpec::Uniform { a: r.f64()?, b: r.f64()? },
        3 => DistributionSpec::Gamma {
            shape: r.f64()?,
            scale: r.f64()?,
        },
        4 => {
            let has_default = r.u8()? != 0;
            let default = r.f64()?;
            let n = r.u32()?;
            let mut entries = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let base = r.site(d)?;
                let axis = r.u8()? as usize;
                let weight = r.f64()?;
                entries.push(TableEntry { base, axis, weight });
            }
            DistributionSpec::TestTable(WeightTable {
                default: has_default.then_some(default),
                entries,
            })
        }
        t => return Err(LatticeError::BadFormat(format!("unknown distribution tag {t}"))),
    };
    let seed = r.u64()?;
    let stored = r.u64()?;
    let config = sample_config(&region, &spec, seed)?;
    let found = config.checksum();
    if found != stored {
        return Err(LatticeError::ChecksumMismatch { stored, found });
    }
    Ok(config)
}
