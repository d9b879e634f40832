//! Seed derivation and compensated summation helpers.

/// SplitMix64 finalizer; a cheap, high-avalanche 64-bit mixer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a master seed, a stream tag and an index.
///
/// Every randomized routine in this crate draws from its own stream derived
/// this way, so results are a pure function of the seeds handed in at the API
/// boundary, regardless of call order or iteration order.
#[inline]
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(mix64(master) ^ stream) ^ index)
}

/// Uniform draw on the open interval (0, 1); never returns 0 or 1, so
/// `-ln(u)` is always finite and positive.
#[inline]
pub(crate) fn uniform_open01(rng: &mut impl rand::RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Kahan compensated accumulator for long sums of mixed magnitude.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.sum
    }
}
