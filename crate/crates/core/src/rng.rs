//! Seeded random streams.
//!
//! Every stream is a SplitMix64 generator (`state += 0x9E3779B97F4A7C15`,
//! followed by the xor-shift-multiply finalizer) seeded with
//! `seed ^ (stream * 0xD1B54A32D192ED03)`. SplitMix64 is fully specified by
//! integer arithmetic, so scenarios and controller initializations are
//! reproducible on every platform.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::model::Point;
use crate::scalar::Scalar;

pub type SeededRng = SplitMix64;

pub const STREAM_SCENARIO: u64 = 1;
pub const STREAM_CONTROLLERS: u64 = 2;
pub const STREAM_FRAME: u64 = 3;

pub fn stream(seed: u64, stream: u64) -> SeededRng {
    SplitMix64::seed_from_u64(seed ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Uniform sample from the cube `[-radius, radius]^d` added to `center`.
pub fn jitter<S: Scalar, R: Rng>(rng: &mut R, center: &[S], radius: S) -> Point<S> {
    Point::new(center.iter().map(|&c| c + radius * S::lit(rng.random_range(-1.0..1.0))).collect())
}
