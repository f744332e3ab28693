//! Seeded counter-based generator used for all random data.
//!
//! Draw `i` (0-based) of stream `seed` is `mix(seed + (i + 1) * 0x9E3779B97F4A7C15)`
//! with the SplitMix64 finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! (all arithmetic wrapping mod 2^64). Uniform doubles take the top 53 bits:
//! `(z >> 11) * 2^-53`. Normals use Box-Muller on two consecutive uniforms,
//! `sqrt(-2 ln(1 - u1)) cos(2 pi u2)`. Any language with 64-bit unsigned
//! arithmetic reproduces the stream bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    /// Independent stream derived from this seed and a label.
    pub fn substream(seed: u64, label: u64) -> Self {
        CounterRng::new(mix(seed ^ mix(label.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal())
    }
}
