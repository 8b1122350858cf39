//! Counter-derived random streams.
//!
//! Every random draw in a run comes from a ChaCha stream keyed by
//! `(master seed, purpose, a, b)`, where `a`/`b` are typically an agent id and
//! an iteration index. Streams never depend on evaluation order, so agents of
//! one cluster can be evaluated on any number of threads and still reproduce
//! the sequential result bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha12Rng;

/// Purpose tag mixed into the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Noise = 1,
    Sphere = 2,
    Clustering = 3,
    Baseline = 4,
    Repeat = 5,
    Probe = 6,
    Diagnostics = 7,
}

pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Standard normal draw rejected outside `[-bound, bound]`, then scaled by `std`.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, std: f64, bound: f64) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= bound {
            return z * std;
        }
    }
}

/// Variance of a standard normal truncated symmetrically to `[-bound, bound]`.
pub fn truncated_normal_variance(bound: f64) -> f64 {
    use statrs::function::erf::erf;
    let pdf = (-0.5 * bound * bound).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = erf(bound / std::f64::consts::SQRT_2);
    1.0 - 2.0 * bound * pdf / mass
}
