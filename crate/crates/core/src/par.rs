//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in input order, so callers that fold the
//! results into shared state (the instance pool, reports) stay deterministic
//! no matter which mode ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How batch work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    /// Uses the rayon global pool; identical to `Sequential` when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Parallelism {
    pub fn from_flag(parallel: bool) -> Self {
        if parallel {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }

    /// True if this mode will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Maps `f` over `items` together with each index.
pub fn map_indexed<T, R, F>(mode: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Parallelism::Parallel {
            use rayon::prelude::*;
            return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
        }
    }
    let _ = mode;
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Maps `f` over `0..n`.
pub fn map_range<R, F>(mode: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Parallelism::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(&f).collect();
        }
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// splitmix64 finaliser; derives independent sub-seeds from a base seed.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic RNG for one stream of a seeded computation.
pub fn stream_rng(base: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(base, stream))
}
