//! Multi-threaded driver for the photon transport.
//!
//! Batches are simulated in parallel, in fixed groups, and merged strictly in
//! batch order, so the result does not depend on the thread count.

use pbmsim_core::mc::{McAccumulator, McResult, McSimulation};
use rayon::prelude::*;

/// Batches simulated per parallel group; bounds memory held before merging.
const GROUP: u64 = 8;

pub fn run_mc_parallel(sim: &McSimulation) -> pbmsim_core::Result<McResult> {
    let n = sim.n_batches();
    let mut acc = McAccumulator::new(sim.grid().len());
    let mut start = 0;
    while start < n {
        let end = (start + GROUP).min(n);
        let batches: Vec<_> = (start..end).into_par_iter().map(|b| sim.run_batch(b)).collect();
        for b in batches {
            acc.push(&b?);
        }
        start = end;
    }
    Ok(sim.finish(acc))
}

/// Runs `f` on a pool of `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(f)
}
