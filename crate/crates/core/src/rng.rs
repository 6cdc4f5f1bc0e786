//! Seeded, splittable random streams.
//!
//! A stream is identified by a `(seed, stream id)` pair and backed by
//! ChaCha8 with the seed as key and the stream id as nonce, so distinct ids
//! give independent sequences that can be consumed on different threads.
//! Child streams are derived by hashing a path of integers into a new id,
//! which lets callers name a stream after `(iteration, time step, purpose)`
//! without coupling draw order between them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into derived stream ids.
pub mod purpose {
    pub const POOL: u64 = 0x706f_6f6c;
    pub const SELECT: u64 = 0x7365_6c65;
    pub const METROPOLIS: u64 = 0x6d65_7472;
    pub const SIMULATE: u64 = 0x7369_6d75;
    pub const CHAIN: u64 = 0x6368_6169;
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// A fresh stream under the same seed whose id is a hash of this
    /// stream's id and `path`. Does not consume draws from `self`.
    pub fn derive(&self, path: &[u64]) -> RngStream {
        let mut id = splitmix64(self.stream);
        for &p in path {
            id = splitmix64(id ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019)));
        }
        RngStream::new(self.seed, id)
    }
}

impl RngCore for RngStream {
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
