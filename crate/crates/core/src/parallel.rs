//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! a rayon pool; without it every helper runs sequentially. Results are always
//! collected in index order, so reductions over them are bit-identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether parallel execution is compiled in.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `[f(0), f(1), ..., f(len - 1)]`.
pub fn map_range<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
        _ => (0..len).map(f).collect(),
    }
}

/// Run `f` on a pool of `workers` threads (`None` keeps the global pool).
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(w) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("failed to build worker pool");
        return pool.install(f);
    }
    let _ = workers;
    f()
}

/// Compensated (Neumaier) sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
