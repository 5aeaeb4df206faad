//! Pluggable execution of independent work items.
//!
//! The sampler and the sensitivity driver hand batches of independent jobs
//! to an [`Executor`]. Results must come back in input order; the
//! sequential executor here is the reference, thread pools live in the
//! `neurocal` crate.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
