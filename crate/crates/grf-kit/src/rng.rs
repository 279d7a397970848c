//! Counter-based keyed random draws.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed
//! plus a short tuple of stream identifiers (purpose tag, vertex, walker,
//! step, ...). There is no mutable generator state to thread through
//! parallel code, so results are independent of execution schedule.

/// Weyl increment used to decorrelate absorption positions.
const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit avalanche finalizer (the SplitMix64 mixer).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One keyed draw: folds the id words into the seed with a full avalanche
/// per word. Identical `(seed, ids)` always yields identical output.
#[inline]
pub fn keyed(seed: u64, ids: &[u64]) -> u64 {
    let mut h = seed.wrapping_add(GAMMA);
    for (i, &w) in ids.iter().enumerate() {
        h = mix64(h ^ w.wrapping_add(GAMMA.wrapping_mul(i as u64 + 1)));
    }
    mix64(h)
}

/// Derives a child seed, e.g. per repeat or per generated graph.
#[inline]
pub fn substream(seed: u64, tag: u64, index: u64) -> u64 {
    keyed(seed, &[tag, index])
}

/// Maps 64 random bits onto the dyadic grid in `[0, 1)`.
#[inline]
pub fn u01(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Maps 64 random bits to an index in `0..n` (Lemire multiply-shift;
/// the residual bias of O(n / 2^64) is irrelevant at our sample sizes).
#[inline]
pub fn uniform_index(bits: u64, n: usize) -> usize {
    debug_assert!(n > 0);
    (((bits as u128) * (n as u128)) >> 64) as usize
}

/// Stream purpose tags. Distinct tags partition the draw space so that,
/// for example, termination draws never collide with neighbor-selection
/// draws for the same walker and step.
pub mod tag {
    /// Termination random variables.
    pub const TRV: u64 = 0x01;
    /// Neighbor selection during a walk.
    pub const STEP: u64 = 0x02;
    /// Erdős-Rényi edge inclusion.
    pub const ER_EDGE: u64 = 0x03;
    /// Barabási-Albert attachment target.
    pub const BA_TARGET: u64 = 0x04;
    /// Per-repeat seed derivation in the experiment harness.
    pub const REPEAT: u64 = 0x05;
    /// Per-graph seed derivation in win-rate studies.
    pub const GRAPH: u64 = 0x06;
}
