//! Counter-based randomness.
//!
//! Every random draw in the crate comes from a [`Stream`] keyed by a master
//! seed plus a short list of integer tags (domain, trial, coordinates...).
//! The key schedule is fixed and documented below so runs replay bit-exactly
//! on any platform and under any thread count:
//!
//! ```text
//! h0     = mix64(seed ^ 0x6a09e667f3bcc909)
//! h_{i+1} = mix64(h_i ^ (tag_i * 0x9e3779b97f4a7c15))      (wrapping)
//! state  = h_last
//! next() : state += 0x9e3779b97f4a7c15; return mix64(state)
//! ```
//!
//! `mix64` is the SplitMix64 finalizer. Uniforms take the top 53 bits.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const SEED_SALT: u64 = 0x6a09_e667_f3bc_c909;

/// Domain tags, so that different consumers of the same seed never collide.
pub mod tag {
    pub const VERTEX: u64 = 1;
    pub const BOND: u64 = 2;
    pub const DIAGONAL: u64 = 3;
    pub const TRIAL: u64 = 4;
    pub const SYNTHETIC: u64 = 5;
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Signed coordinates enter the key through their two's-complement bits.
#[inline]
pub fn coord_tag(c: i32) -> u64 {
    c as i64 as u64
}

#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64, tags: &[u64]) -> Self {
        let mut h = mix64(seed ^ SEED_SALT);
        for &t in tags {
            h = mix64(h ^ t.wrapping_mul(GOLDEN));
        }
        Stream { state: h }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform on [0,1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply with rejection, so unbiased).
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

/// Seed of the `trial`-th independent replicate under a master seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    Stream::new(master, &[tag::TRIAL, trial]).next_u64()
}
