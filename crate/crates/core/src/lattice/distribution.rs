use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::site::{Bond, Site};
use super::LatticeError;
use crate::seed::unit_open;

/// Grid onto which stochastic weights are rounded. Path sums below 2^21 are
/// then exact in binary64, so passage times do not depend on summation order.
pub const WEIGHT_QUANTUM: f64 = 1.0 / 4_294_967_296.0;

/// One explicit entry of a [`WeightTable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub base: Site,
    pub axis: usize,
    pub weight: f64,
}

/// Explicit bond -> weight assignment, for tests and hand-built examples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    /// Weight of every bond not listed in `entries`.
    #[serde(default)]
    pub default: Option<f64>,
    #[serde(default)]
    pub entries: Vec<TableEntry>,
}

impl WeightTable {
    pub fn constant(w: f64) -> Self {
        WeightTable {
            default: Some(w),
            entries: Vec::new(),
        }
    }

    pub fn with(mut self, base: Site, axis: usize, weight: f64) -> Self {
        self.entries.push(TableEntry { base, axis, weight });
        self
    }

    pub(crate) fn lookup_map(&self) -> BTreeMap<Bond, f64> {
        self.entries
            .iter()
            .map(|e| (Bond::new(e.base, e.axis), e.weight))
            .collect()
    }
}

/// Law of a single bond passage time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Deterministic weights; violates continuity, so experiments that rely on
    /// unique geodesics refuse it unless forced.
    TestTable(WeightTable),
}

impl Default for DistributionSpec {
    fn default() -> Self {
        DistributionSpec::Exponential { rate: 1.0 }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |m: String| Err(LatticeError::InvalidSpec(m));
        match self {
            DistributionSpec::Exponential { rate } if !positive(*rate) => {
                bad(format!("exponential rate must be positive, got {rate}"))
            }
            DistributionSpec::Uniform { a, b } if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) => {
                bad(format!("uniform bounds need 0 <= a < b, got a={a} b={b}"))
            }
            DistributionSpec::Gamma { shape, scale } if !(positive(*shape) && positive(*scale)) => {
                bad(format!("gamma needs shape, scale > 0, got {shape}, {scale}"))
            }
            DistributionSpec::TestTable(t) => {
                let all = t.default.iter().chain(t.entries.iter().map(|e| &e.weight));
                for w in all {
                    if !(w.is_finite() && *w >= 0.0) {
                        return bad(format!("table weight {w} is not a finite nonnegative number"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the law is continuous (geodesics unique almost surely).
    pub fn is_continuous(&self) -> bool {
        !matches!(self, DistributionSpec::TestTable(_))
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            DistributionSpec::Exponential { rate } => Some(1.0 / rate),
            DistributionSpec::Uniform { a, b } => Some(0.5 * (a + b)),
            DistributionSpec::Gamma { shape, scale } => Some(shape * scale),
            DistributionSpec::TestTable(_) => None,
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match self {
            DistributionSpec::Exponential { rate } => Some(1.0 / (rate * rate)),
            DistributionSpec::Uniform { a, b } => Some((b - a) * (b - a) / 12.0),
            DistributionSpec::Gamma { shape, scale } => Some(shape * scale * scale),
            DistributionSpec::TestTable(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DistributionSpec::Exponential { rate } => format!("exponential(rate={rate})"),
            DistributionSpec::Uniform { a, b } => format!("uniform({a},{b})"),
            DistributionSpec::Gamma { shape, scale } => format!("gamma(shape={shape},scale={scale})"),
            DistributionSpec::TestTable(_) => "test-table".to_string(),
        }
    }

    /// Draw for one stochastic bond from its 64-bit key. Panics on `TestTable`.
    pub(crate) fn draw(&self, key: u64) -> f64 {
        let raw = match self {
            DistributionSpec::Exponential { rate } => -unit_open(key).ln() / rate,
            DistributionSpec::Uniform { a, b } => a + (b - a) * unit_open(key),
            DistributionSpec::Gamma { shape, scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                Gamma::new(*shape, *scale)
                    .expect("validated gamma parameters")
                    .sample(&mut rng)
            }
            DistributionSpec::TestTable(_) => unreachable!("table weights are not drawn"),
        };
        quantize(raw)
    }
}

#[inline]
pub(crate) fn quantize(x: f64) -> f64 {
    (x / WEIGHT_QUANTUM).round() * WEIGHT_QUANTUM
}
