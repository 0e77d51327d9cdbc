//! Multiplicative, seeded pseudo-random corruption of Cauchy data.
//!
//! Each sample `v` becomes `v * (1 + gamma * N)` with `N` uniform on the open
//! interval `(-1, 1)`. Draws come from SplitMix64:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z = z ^ (z >> 31)
//! ```
//!
//! and map to `N = 2 * ((z >> 11) + 0.5) / 2^53 - 1`. Every (segment,
//! function) pair draws from its own stream whose initial state is
//! `mix(seed ^ mix(stream_id + 1))`, where `mix` is the output function
//! above and `stream_id = 2 * segment_index + (0 for f, 1 for g)`.

use crate::cauchy::{BoundarySegment, CauchyData};
use crate::error::{QrmError, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent stream `stream_id` derived from `seed`.
    pub fn stream(seed: u64, stream_id: u64) -> Self {
        SplitMix64::new(mix64(seed ^ mix64(stream_id.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_open01() - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub gamma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(gamma: f64, seed: u64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(QrmError::InvalidArgument(format!(
                "noise level must be non-negative, got {gamma}"
            )));
        }
        Ok(NoiseSpec { gamma, seed })
    }
}

fn corrupt(values: &mut [f64], gamma: f64, rng: &mut SplitMix64) {
    for v in values {
        let n = rng.next_symmetric();
        *v *= 1.0 + gamma * n;
    }
}

/// Corrupt every stored sample of `data`. `gamma = 0` returns the input unchanged.
pub fn add_noise(data: &CauchyData, spec: NoiseSpec) -> CauchyData {
    let mut out = data.clone();
    if spec.gamma == 0.0 {
        return out;
    }
    for seg in BoundarySegment::ALL {
        let base = 2 * seg.index() as u64;
        let s = out.segment_mut(seg);
        corrupt(&mut s.f, spec.gamma, &mut SplitMix64::stream(spec.seed, base));
        corrupt(&mut s.g, spec.gamma, &mut SplitMix64::stream(spec.seed, base + 1));
    }
    out
}
