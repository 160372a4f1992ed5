//! Seeded per-realization random streams and order-preserving parallel maps.

use crate::linalg::{c, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent stream `index` of the generator seeded by `seed`.
pub(crate) fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Circular complex Gaussian with `E|z|^2 = variance`.
pub(crate) fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> C64 {
    let scale = (0.5 * variance).sqrt();
    let re = normal(rng);
    let im = normal(rng);
    c(scale * re, scale * im)
}

/// `(0..n).map(f)` in index order, spread over the rayon pool when the
/// `parallel` feature is on.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}
