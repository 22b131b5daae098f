//! Poisson variates with a fixed, documented algorithm choice.
//!
//! Means below [`INVERSION_LIMIT`] use sequential inversion of one uniform
//! draw; larger means use the transformed-rejection sampler of `rand_distr`.
//! The split is part of the reproducibility contract: changing either side
//! changes every simulated stream.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub const INVERSION_LIMIT: f64 = 30.0;

pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 && cdf < u {
                // u fell into the rounding gap below 1
                break;
            }
        }
        k
    } else {
        Poisson::new(mean)
            .expect("finite positive mean")
            .sample(rng) as u64
    }
}
