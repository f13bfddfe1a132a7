//! Deterministic RNG stream derivation.
//!
//! Bootstrap replicates and simulation replications each get an independent
//! ChaCha stream derived from the master seed plus a stable key, so results
//! are bit-identical for any parallel schedule and any `--jobs` setting.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable 64-bit FNV-1a hash. Used to key RNG streams by study id rather
/// than by study position, so relabeling the input order does not change
/// the draws a study receives.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; decorrelates structured seed inputs.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one (seed, label) pair with a per-replicate stream.
pub fn stream_rng(seed: u64, label: &str, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ fnv1a(label.as_bytes())));
    rng.set_stream(stream);
    rng
}

/// RNG keyed by a numeric pair, e.g. (replicate, restart).
pub fn keyed_rng(seed: u64, key: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(key)));
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn fnv1a_matches_reference_vectors() {
        // Reference values for the 64-bit FNV-1a test suite.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let mut a = stream_rng(7, "glioma", 3);
        let mut b = stream_rng(7, "glioma", 3);
        let mut c = stream_rng(7, "glioma", 4);
        let xs: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.random()).collect();
        let zs: Vec<u64> = (0..4).map(|_| c.random()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn study_id_not_position_controls_the_stream() {
        let mut a = stream_rng(1, "stomach", 0);
        let mut b = stream_rng(1, "esophagus", 0);
        let x: u64 = a.random();
        let y: u64 = b.random();
        assert_ne!(x, y);
    }
}
