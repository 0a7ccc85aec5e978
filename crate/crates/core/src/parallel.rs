//! Deterministic parallel helpers.
//!
//! Work is partitioned into fixed-size blocks whose boundaries depend only on
//! the input length. Blocks run in parallel, and their partial results are
//! merged sequentially in block order, so floating point reductions are
//! bit-identical for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Blocks merged per parallel wave; bounds the number of live partials.
const WAVE: usize = 64;

pub fn block_reduce<A, F, M>(len: usize, block: usize, map: F, mut merge: M) -> Option<A>
where
    A: Send,
    F: Fn(std::ops::Range<usize>) -> A + Sync,
    M: FnMut(&mut A, A),
{
    assert!(block > 0);
    let n_blocks = len.div_ceil(block);
    let mut acc: Option<A> = None;
    let mut start = 0;
    while start < n_blocks {
        let end = (start + WAVE).min(n_blocks);
        let partials: Vec<A> =
            (start..end).into_par_iter().map(|b| map(b * block..((b + 1) * block).min(len))).collect();
        for p in partials {
            match acc.as_mut() {
                None => acc = Some(p),
                Some(a) => merge(a, p),
            }
        }
        start = end;
    }
    acc
}

/// Runs `f` on a dedicated pool with `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
