//! Shared statistical machinery: random streams, empirical distribution
//! distances, confidence intervals and path metrics.

pub mod interval;
pub mod isotonic;
pub mod ks;
pub mod path;
pub mod rng;

pub use interval::{normal_quantile, wilson_interval, Moments};
pub use isotonic::isotonic_nonincreasing;
pub use ks::{ks_one_sample, ks_two_sample, ks_vs_exponential};
pub use path::{path_distance, PathMetric, StepFunction, D_TAIL_BOUND, N_CUT};
pub use rng::{Purpose, StreamRng, Streams};

use rayon::prelude::*;

/// Evaluates `f` for every replica index in parallel and returns the results
/// in replica order, so downstream reductions do not depend on scheduling.
pub fn map_replicas<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Fallible variant of [`map_replicas`]; the error of the lowest failing
/// replica index is reported.
pub fn try_map_replicas<T, E, F>(count: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    map_replicas(count, f).into_iter().collect()
}
