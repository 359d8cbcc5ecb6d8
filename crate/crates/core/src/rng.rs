//! Counter-based random numbers keyed by (seed, lane, step).
//!
//! Stateless mixing means a draw depends only on its key, never on how many
//! draws happened before it or on which thread asked. Layout optimization and
//! fixture generation key their lanes by row/edge index so output is stable
//! under scheduling and code motion.

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A single u64 drawn for the key `(seed, lane, step)`.
#[inline]
pub fn keyed_u64(seed: u64, lane: u64, step: u64) -> u64 {
    // Feed the key through the mixer twice so correlated keys decohere.
    mix64(mix64(seed ^ 0xA076_1D64_78BD_642F).wrapping_add(mix64(lane)) ^ mix64(step.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Uniform f64 in [0, 1) for the key.
#[inline]
pub fn keyed_unit_f64(seed: u64, lane: u64, step: u64) -> f64 {
    (keyed_u64(seed, lane, step) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in [0, n) for the key. `n` must be non-zero.
#[inline]
pub fn keyed_index(seed: u64, lane: u64, step: u64, n: usize) -> usize {
    debug_assert!(n > 0);
    // Modulo bias is below 2^-50 for the n used here (n << 2^32).
    (keyed_u64(seed, lane, step) % n as u64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_draws_are_reproducible() {
        assert_eq!(keyed_u64(7, 3, 11), keyed_u64(7, 3, 11));
        assert_ne!(keyed_u64(7, 3, 11), keyed_u64(7, 3, 12));
        assert_ne!(keyed_u64(7, 3, 11), keyed_u64(8, 3, 11));
    }

    #[test]
    fn unit_draws_stay_in_range() {
        for lane in 0..50 {
            for step in 0..50 {
                let x = keyed_unit_f64(42, lane, step);
                assert!((0.0..1.0).contains(&x));
            }
        }
    }

    #[test]
    fn keyed_index_in_bounds() {
        for step in 0..100 {
            assert!(keyed_index(1, 2, step, 7) < 7);
        }
    }
}
