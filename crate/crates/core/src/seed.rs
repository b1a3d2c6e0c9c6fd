//! Deterministic seeding.
//!
//! Every replica draws from its own xoshiro256** stream. The stream for
//! replica `r` of a plan with base seed `b` is seeded with
//! `derive_seed(b, r)`, where `derive_seed` is the splitmix64 output
//! finalizer applied to `b ^ r`:
//!
//! ```text
//! z = b ^ r
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Each stage is a bijection on 64-bit words, so for a fixed base the map
//! `r -> derive_seed(b, r)` is injective. The 64-bit seed is expanded to the
//! 256-bit xoshiro state with SplitMix64 (`SeedableRng::seed_from_u64`).
//!
//! Bounded integers are drawn with Lemire's multiply-and-reject method on
//! `next_u64` (see [`uniform_below`]), so a trace depends only on the
//! generator and this file, never on a `rand` version's sampling internals.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

/// The generator used by every process.
pub type SimRng = Xoshiro256StarStar;

pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, replica: u64) -> u64 {
    splitmix64_mix(base ^ replica)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Uniform integer in `0..bound`. Panics on `bound == 0`.
#[inline]
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "uniform_below: empty range");
    let mut m = (rng.next_u64() as u128) * (bound as u128);
    let mut low = m as u64;
    if low < bound {
        let threshold = bound.wrapping_neg() % bound;
        while low < threshold {
            m = (rng.next_u64() as u128) * (bound as u128);
            low = m as u64;
        }
    }
    (m >> 64) as u64
}

#[inline]
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> usize {
    uniform_below(rng, len as u64) as usize
}

/// Base seed plus replica count; replica `r` runs on `derive_seed(base, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub base: u64,
    pub replicas: u64,
}

impl SeedPlan {
    pub fn new(base: u64, replicas: u64) -> Self {
        Self { base, replicas }
    }

    pub fn seed(&self, replica: u64) -> u64 {
        derive_seed(self.base, replica)
    }

    pub fn seeds(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        (0..self.replicas).map(move |r| (r, self.seed(r)))
    }
}
