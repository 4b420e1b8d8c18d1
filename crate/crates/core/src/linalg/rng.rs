//! Deterministic, splittable random streams.
//!
//! The generator is SplitMix64. A stream is identified by `(seed, stream_id)`
//! and its initial state is
//!
//! ```text
//! state0 = mix64(seed ^ mix64(stream_id + GAMMA))
//! ```
//!
//! Each draw advances `state += GAMMA` and returns `mix64(state)`, where
//! `GAMMA = 0x9E3779B97F4A7C15` and `mix64` is the SplitMix64 finalizer
//! (shifts 30/27/31, multipliers `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`).
//! All additions wrap modulo 2^64.
//!
//! Derived values:
//! - uniform `f64` in `[0, 1)`: `(next_u64 >> 11) * 2^-53`
//! - integer below `n`: rejection sampling, discarding raw draws `x` with
//!   `x >= 2^64 - (2^64 mod n)`, then `x mod n`
//! - standard normal: Box–Muller on `u1 = 1 - uniform`, `u2 = uniform`,
//!   producing `r cos(2π u2)` first and caching `r sin(2π u2)` for the next
//!   call, `r = sqrt(-2 ln u1)`.
//!
//! `docs/rng.md` repeats this recipe together with a reference Python port.

use super::Vector;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    state: u64,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let state = mix64(seed ^ mix64(stream_id.wrapping_add(GAMMA)));
        Self { seed, stream_id, state, spare_normal: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent stream keyed by `index`, with the same seed.
    ///
    /// The child id is `mix64(stream_id ^ mix64(index + 1))`, so children of
    /// different parents do not collide in practice.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream::new(self.seed, mix64(self.stream_id ^ mix64(index.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below needs a positive bound");
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// `count` distinct indices from `0..n`, via a partial Fisher–Yates
    /// shuffle, returned sorted.
    pub fn choose_distinct(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut out = pool[..count].to_vec();
        out.sort_unstable();
        out
    }
}

/// `n` i.i.d. standard normal draws from `rng`.
pub fn sample_gaussian(rng: &mut RngStream, n: usize) -> Vector {
    Vector::from_raw((0..n).map(|_| rng.normal()).collect())
}
