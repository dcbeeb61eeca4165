//! Deterministic, path-derived randomness.
//!
//! Every random draw in an experiment comes from a [`SeededRng`] built from
//! the run seed plus a derivation path such as `(repeat, fold, stage)`. The
//! stream for a path never depends on which thread created it or on how many
//! draws other paths consumed.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage tags used as the last path component.
pub mod stage {
    pub const FOLDS: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const TRAIN_ORDER: u64 = 3;
    pub const FEATURE_JITTER: u64 = 4;
    pub const DATAGEN: u64 = 5;
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    path: Vec<u64>,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(seed: u64, path: &[u64]) -> [u8; 32] {
    let mut state = splitmix64(seed);
    for &component in path {
        state = splitmix64(state ^ splitmix64(component.wrapping_add(0xA5A5_A5A5)));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        state = splitmix64(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::for_path(seed, &[])
    }

    pub fn for_path(seed: u64, path: &[u64]) -> Self {
        SeededRng {
            seed,
            path: path.to_vec(),
            inner: ChaCha8Rng::from_seed(derive_key(seed, path)),
        }
    }

    /// Child generator at `path ++ [component]`; does not advance `self`.
    pub fn derive(&self, component: u64) -> Self {
        let mut path = self.path.clone();
        path.push(component);
        Self::for_path(self.seed, &path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
