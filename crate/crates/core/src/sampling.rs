//! Seeded sample generation.
//!
//! Coordinates are dyadic rationals `k / 2^10`, exactly representable in both
//! arithmetic modes, so a seed yields the same inputs whether a check runs in
//! floating point or over the rationals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

pub type SampleRng = ChaCha8Rng;

const GRID: i64 = 1 << 10;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a named sub-task.
pub fn substream(seed: u64, label: &str) -> SampleRng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

pub fn random_real(rng: &mut SampleRng, radius: f64) -> f64 {
    let span = (radius * GRID as f64).floor().max(1.0) as i64;
    rng.random_range(-span..=span) as f64 / GRID as f64
}

/// Complex value with real and imaginary parts in `[-radius, radius]`.
pub fn random_scalar<S: Scalar>(rng: &mut SampleRng, radius: f64) -> S {
    let re = random_real(rng, radius);
    let im = random_real(rng, radius);
    S::from_f64(re, im)
}

/// Real value in `[-radius, radius]`.
pub fn random_real_scalar<S: Scalar>(rng: &mut SampleRng, radius: f64) -> S {
    S::from_real(random_real(rng, radius))
}

pub fn random_vec<S: Scalar>(rng: &mut SampleRng, len: usize, radius: f64) -> Vec<S> {
    (0..len).map(|_| random_scalar(rng, radius)).collect()
}

pub fn random_unit_interval(rng: &mut SampleRng) -> f64 {
    rng.random_range(0..=GRID) as f64 / GRID as f64
}

pub fn random_index(rng: &mut SampleRng, len: usize) -> usize {
    rng.random_range(0..len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{CRat, C64};

    #[test]
    fn same_seed_same_inputs_in_both_modes() {
        let a: Vec<C64> = random_vec(&mut rng(7), 5, 2.0);
        let b: Vec<CRat> = random_vec(&mut rng(7), 5, 2.0);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x, y.to_c64());
            assert!(x.re.abs() <= 2.0 && x.im.abs() <= 2.0);
        }
    }

    #[test]
    fn substreams_differ() {
        let x = random_real(&mut substream(1, "alpha"), 1.0);
        let y = random_real(&mut substream(1, "beta"), 1.0);
        let z = random_real(&mut substream(1, "alpha"), 1.0);
        assert_eq!(x, z);
        assert!(x != y || x == 0.0);
    }
}
