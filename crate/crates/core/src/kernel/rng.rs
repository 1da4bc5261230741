use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic pseudo-random stream.
///
/// Trials derive their stream from `(seed, trial)` with [`Rng::for_trial`], so a
/// trial's draws do not depend on which thread runs it or in what order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent child stream number `trial` of `seed`.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(trial);
        Rng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        if n == 1 {
            return 0;
        }
        self.inner.random_range(0..n)
    }

    /// Index `i` with probability `weights[i] / sum(weights)`.
    pub fn weighted(&mut self, weights: &[u64]) -> usize {
        let total: u64 = weights.iter().sum();
        assert!(total > 0, "weights sum to zero");
        if weights.len() == 1 {
            return 0;
        }
        let mut x = self.inner.random_range(0..total);
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        unreachable!("draw below total weight")
    }
}
