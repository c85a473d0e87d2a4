//! Deterministic per-replica random streams.
//!
//! Every replica draws from its own ChaCha8 stream keyed by `(seed, replica)`,
//! so results do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn replica_rng(seed: u64, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Run `f` once per replica `0..n`, each with its own stream, in replica order.
#[cfg(feature = "parallel")]
pub fn map_replicas<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(|r| f(r, &mut replica_rng(seed, r))).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_replicas<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    F: Fn(u64, &mut SimRng) -> T,
{
    (0..n as u64).map(|r| f(r, &mut replica_rng(seed, r))).collect()
}
