pub mod algebra;
pub mod classify;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod runge;
pub mod sequence;
pub mod spaces;
pub mod witness;

pub use error::{Error, Result};

/// Worker cap from `HOLOSEQ_THREADS`, else the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("HOLOSEQ_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}
