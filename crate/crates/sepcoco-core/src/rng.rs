//! SplitMix64: a 64-bit counter-based generator.
//!
//! The state is a counter advanced by the golden-ratio increment
//! `0x9E3779B97F4A7C15`; each output is the counter passed through the
//! finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Derived values:
//! - `next_f64`: top 53 bits scaled by 2^-53, uniform on [0, 1).
//! - `normal`: Box–Muller from two uniforms, `u1` mapped to (0, 1];
//!   one normal per pair, the sine branch is discarded.
//! - `below(n)`: `(next_u64 * n) >> 64` in 128-bit arithmetic.
//! - `stream(seed, k)`: independent sub-stream seeded by
//!   `mix(seed ^ mix(k + 1))`, where `mix` is the finalizer above.

use alloc::vec::Vec;

use crate::Vector;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn stream(seed: u64, k: u64) -> Self {
        SplitMix64::new(mix(seed ^ mix(k.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    pub fn gaussian_vector(&mut self, dim: usize) -> Vector {
        let coords: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
        Vector::new(coords).expect("Box-Muller output is finite")
    }

    /// Uniform direction on the unit sphere.
    pub fn unit_vector(&mut self, dim: usize) -> Vector {
        loop {
            let g = self.gaussian_vector(dim);
            let n = g.norm();
            if n > 1e-12 {
                return g.scaled(1.0 / n);
            }
        }
    }
}
