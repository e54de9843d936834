//! First-passage percolation on finite boxes of Z^d: sampled configurations,
//! exact geodesics and the measurements built on them.

// NaN must fail parameter checks, hence `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod coalescence;
pub mod geodesic;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod ray;
pub mod scaling;
pub mod seed;
pub mod stats;
