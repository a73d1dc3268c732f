//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, replica_id, counter)`. The seed keys a
//! ChaCha8 block function, the replica id selects the ChaCha stream, and the
//! counter is the 32-bit word position inside that stream. Any draw can be
//! reproduced from its address alone, so replicas can be sharded across
//! workers in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    replica_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, replica_id: u64) -> Self {
        Self::at(seed, replica_id, 0)
    }

    /// Positions the stream at an explicit word counter.
    pub fn at(seed: u64, replica_id: u64, counter: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(replica_id);
        inner.set_word_pos(counter as u128);
        Self { seed, replica_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica_id(&self) -> u64 {
        self.replica_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        self.inner.get_word_pos() as u64
    }

    /// Derives an independent stream for a sub-task of this replica
    /// (e.g. a pilot run), by mixing a salt into the seed.
    pub fn derive(seed: u64, salt: u64, replica_id: u64) -> Self {
        Self::new(derive_seed(seed, salt), replica_id)
    }
}

/// Seed of an independent sub-task family.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
