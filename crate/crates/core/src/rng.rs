//! Seed splitting. Every random choice derives from one experiment seed via
//! `subseed(seed, purpose, index)`, so two schemes run with the same seed see
//! the same graph.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the purpose tag.
fn tag_hash(purpose: &str) -> u64 {
    purpose
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn subseed(seed: u64, purpose: &str, index: u64) -> u64 {
    mix(mix(seed ^ tag_hash(purpose)) ^ index)
}
