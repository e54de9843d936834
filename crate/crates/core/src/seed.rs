//! Stable 64-bit mixing used for counter-based weights and replica streams.
//!
//! Everything here is a pure function of its inputs, so a replica or a bond
//! weight can be regenerated on any machine without replaying a generator.

/// Finalizer of SplitMix64 (Stafford variant 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// FNV-1a over the tag bytes; only used to turn experiment tags into keys.
pub fn tag_hash(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed of replica `index` of the experiment `tag` under `master`.
pub fn replica_seed(master: u64, tag: &str, index: u64) -> u64 {
    let a = mix64(master.wrapping_add(GOLDEN));
    let b = mix64(a ^ tag_hash(tag));
    mix64(b.wrapping_add(index.wrapping_mul(GOLDEN)) ^ 0x5851_f42d_4c95_7f2d)
}

/// Uniform draw in the open interval (0, 1) built from the top 52 bits
/// (the half-step offset needs the 53rd bit of the mantissa).
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
