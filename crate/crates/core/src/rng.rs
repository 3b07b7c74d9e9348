//! Seed derivation and counter-addressed random streams.
//!
//! Every stochastic task draws from a generator addressed by
//! `(seed, index)`, never from a shared sequential stream, so results do not
//! depend on how work is scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `k`-th sub-task of a run seeded with `master`.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    mix64(mix64(master) ^ mix64(k.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Words of keystream reserved per step; a step may draw up to eight
/// uniforms.
const WORDS_PER_STEP: u128 = 16;

/// Gaussian draws addressed by step index: the normals of step `k` are a
/// pure function of `(seed, k)`.
pub struct StepNormals {
    rng: ChaCha8Rng,
}

impl StepNormals {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn uniform_open(&mut self) -> f64 {
        // 53 random bits mapped into (0, 1)
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Fills `out` (at most 8 entries) with independent standard normals for
    /// step `step`, via Box-Muller.
    pub fn fill(&mut self, step: u64, out: &mut [f64]) {
        assert!(out.len() <= 8);
        self.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        for pair in out.chunks_mut(2) {
            let u1 = self.uniform_open();
            let u2 = self.uniform_open();
            let rad = (-2.0 * u1.ln()).sqrt();
            let ang = std::f64::consts::TAU * u2;
            pair[0] = rad * ang.cos();
            if pair.len() > 1 {
                pair[1] = rad * ang.sin();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_draws_depend_only_on_index() {
        let mut a = StepNormals::new(7);
        let mut b = StepNormals::new(7);
        let mut x = [0.0; 4];
        let mut y = [0.0; 4];
        a.fill(3, &mut x);
        b.fill(0, &mut y);
        b.fill(9, &mut y);
        b.fill(3, &mut y);
        assert_eq!(x, y);
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut g = StepNormals::new(1);
        let mut buf = [0.0; 2];
        let (mut s, mut s2) = (0.0, 0.0);
        let n = 50_000;
        for k in 0..n {
            g.fill(k, &mut buf);
            s += buf[0] + buf[1];
            s2 += buf[0] * buf[0] + buf[1] * buf[1];
        }
        let m = s / (2 * n) as f64;
        let v = s2 / (2 * n) as f64 - m * m;
        assert!(m.abs() < 0.02 && (v - 1.0).abs() < 0.02, "{m} {v}");
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
