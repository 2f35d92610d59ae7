//! Seeded randomness shared by every randomized routine.
//!
//! All generators are `ChaCha8Rng` instances seeded from a 64-bit value, so
//! runs are reproducible across platforms. Independent streams are derived
//! by mixing a parent seed with stream tags through splitmix64.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a list of stream tags.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

pub fn rng_from(seed: u64, tags: &[u64]) -> SeededRng {
    ChaCha8Rng::seed_from_u64(derive(seed, tags))
}

/// Standard normal draws by the Marsaglia polar method. The second value of
/// each accepted pair is cached.
pub struct Gaussian<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> Gaussian<R> {
    pub fn new(rng: R) -> Self {
        Gaussian { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        loop {
            let u: f64 = 2.0 * self.rng.random::<f64>() - 1.0;
            let v: f64 = 2.0 * self.rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.sample();
        }
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

/// Fill `out` with independent uniform signs (+1 or -1).
pub fn fill_signs<R: RngCore>(rng: &mut R, out: &mut [f64]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (k, x) in chunk.iter_mut().enumerate() {
            *x = if (bits >> k) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}
