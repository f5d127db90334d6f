//! Index-to-function families evaluated lazily.

use num_complex::Complex64;

use crate::error::Result;

pub trait Sequence: Send + Sync {
    fn label(&self) -> String;

    /// Values of the `n`-th member (n >= 1) at the given points.
    fn eval_many(&self, n: usize, zs: &[Complex64]) -> Result<Vec<Complex64>>;

    fn eval(&self, n: usize, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_many(n, &[z])?[0])
    }

    /// Fixed points at which the construction forces eventual vanishing.
    fn pointwise_points(&self) -> Vec<Complex64> {
        vec![]
    }

    /// Points of a fixed compact subset, moving with `n`, where the member
    /// is expected to be large.
    fn compact_probes(&self, _n: usize) -> Vec<Complex64> {
        vec![]
    }

    /// Points leaving every compact subset, used for the uniform test.
    fn escape_probes(&self, _n: usize) -> Vec<Complex64> {
        vec![]
    }
}

/// Closed-form sequence given by a function of `(n, z)`.
pub struct FnSequence<F> {
    pub name: String,
    pub f: F,
}

impl<F> Sequence for FnSequence<F>
where
    F: Fn(usize, Complex64) -> Complex64 + Send + Sync,
{
    fn label(&self) -> String {
        self.name.clone()
    }

    fn eval_many(&self, n: usize, zs: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(zs.iter().map(|z| (self.f)(n, *z)).collect())
    }
}
