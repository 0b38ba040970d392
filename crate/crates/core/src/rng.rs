//! Seed handling. Every stochastic step draws from a [`SimRng`] seeded from
//! a master seed and a stream index, so that runs sharing a master seed see
//! the same randomness regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stable 64-bit mix of `(master, stream)` (SplitMix64 finalizer applied twice).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix(splitmix(master) ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Seed for a nested stream, e.g. `(trial, round, client)`.
pub fn derive_seed_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |acc, &s| derive_seed(acc, s))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        // frozen: changing the mix would silently change every experiment
        assert_eq!(derive_seed(0, 0), derive_seed(0, 0));
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(0, 1), derive_seed(1, 0));
        assert_eq!(derive_seed_path(7, &[1, 2]), derive_seed(derive_seed(7, 1), 2));
        assert_eq!(derive_seed(42, 3), 0x2040_edfd_2285_0ca1);
    }
}
