//! Order-preserving bounded fan-out.
//!
//! With the `parallel` feature (default) work runs on rayon pools, one per
//! distinct parallelism bound, shared process-wide. Without it every map is a
//! plain sequential iterator, which is also what [`map_sequential`] does in
//! either build.

#[cfg(feature = "parallel")]
use std::collections::HashMap;
#[cfg(feature = "parallel")]
use std::sync::{Arc, Mutex, OnceLock};

/// Maps `f` over `items` with at most `parallelism` concurrent calls.
/// Output order always matches input order.
pub fn bounded_map<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallelism > 1 && items.len() > 1 {
            return map_parallel(items, parallelism, f);
        }
    }
    let _ = parallelism;
    map_sequential(items, f)
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    pool(parallelism).install(|| items.par_iter().map(f).collect())
}

#[cfg(feature = "parallel")]
fn pool(threads: usize) -> Arc<rayon::ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS.get_or_init(Default::default).lock().unwrap();
    pools
        .entry(threads.max(1))
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads.max(1))
                    .thread_name(move |i| format!("hifi-{threads}-{i}"))
                    .build()
                    .expect("thread pool builds"),
            )
        })
        .clone()
}
