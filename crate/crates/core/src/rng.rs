//! Reproducible randomness.
//!
//! All sampling uses ChaCha8 (a counter-based stream cipher generator) keyed
//! by `seed_from_u64(seed)`. Monte-Carlo runs give each input its own stream
//! (`set_stream(input_id)`), and trial `t` of that input consumes the `t`-th
//! 64-bit word pair, so results do not depend on evaluation order or thread
//! count. Uniforms in `[0, 1)` take the top 53 bits of one `u64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for a single seeded draw.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for all trials of one input under a master seed.
pub fn input_stream(master_seed: u64, input: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(input as u64);
    rng
}

/// Generator positioned at trial `trial` of `input`'s stream.
pub fn trial_stream(master_seed: u64, input: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = input_stream(master_seed, input);
    rng.set_word_pos(2 * trial as u128);
    rng
}

/// Child seed for a labelled sub-computation (SplitMix64 finalizer on the
/// mixed pair).
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    let mut z = master_seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<f64> = (0..5).map(|_| uniform(&mut seeded(7))).collect();
        assert!(a.iter().all(|v| *v == a[0]));
        let mut s1 = input_stream(42, 3);
        let mut s2 = input_stream(42, 3);
        for _ in 0..100 {
            assert_eq!(uniform(&mut s1), uniform(&mut s2));
        }
    }

    #[test]
    fn trial_positioning_matches_sequential_draws() {
        let mut seq = input_stream(9, 5);
        for t in 0..50u64 {
            let expected = uniform(&mut seq);
            assert_eq!(uniform(&mut trial_stream(9, 5, t)), expected);
        }
    }

    #[test]
    fn inputs_get_distinct_streams() {
        assert_ne!(uniform(&mut input_stream(1, 0)), uniform(&mut input_stream(1, 1)));
    }
}
