//! Seed substreams.
//!
//! A [`Seed`] is a 64-bit master value. Child seeds are derived with a
//! splitmix64 finalizer so that the stream for `(master, i)` depends only on
//! those two numbers, never on how many other streams were drawn first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub u64);

impl Seed {
    pub const fn new(master: u64) -> Self {
        Seed(master)
    }

    pub fn master(self) -> u64 {
        self.0
    }

    /// Independent substream `index` of this seed.
    pub fn child(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15))))
    }

    /// Walks a path of child indices, e.g. `[n, m, trial]`.
    pub fn path(self, indices: &[u64]) -> Seed {
        indices.iter().fold(self, |s, &i| s.child(i))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
