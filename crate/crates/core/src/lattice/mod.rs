//! Finite windows of Z^d and their sampled bond passage times.

mod config;
mod distribution;
mod persist;
mod region;
mod site;

use thiserror::Error;

pub use config::{bond_key, sample_config, sample_config_capped, PassageConfig};
pub use distribution::{DistributionSpec, TableEntry, WeightTable, WEIGHT_QUANTUM};
pub use persist::{decode, encode, load_config, save_config};
pub use region::{BoxRegion, DEFAULT_SITE_CAP};
pub use site::{canonical_bond, nearest_site, Bond, Site, MAX_DIM};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("box holds {sites} sites, over the cap of {cap}")]
    BoxTooLarge { sites: u64, cap: u64 },
    #[error("invalid distribution: {0}")]
    InvalidSpec(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("unsupported dimension {0} (need 2..=4)")]
    BadDimension(usize),
    #[error("{0} is outside the box")]
    OutOfBox(Site),
    #[error("{0} and {1} are not nearest neighbors")]
    NotAdjacent(Site, Site),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checksum mismatch: stored {stored:#018x}, regenerated {found:#018x}")]
    ChecksumMismatch { stored: u64, found: u64 },
    #[error("malformed config file: {0}")]
    BadFormat(String),
}
