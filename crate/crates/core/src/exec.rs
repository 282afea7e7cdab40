//! Execution policy for the data-parallel loops.
//!
//! Every reduction collects per-item results first and then folds them in
//! index order, so parallel and sequential runs produce identical numbers.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Plain iterators on the calling thread.
    Sequential,
    /// Rayon work stealing. Equivalent to [`Execution::Sequential`] when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Sizes the global worker pool; must run before any parallel work.
    /// A no-op without the `parallel` feature.
    pub fn configure_workers(workers: usize) -> Result<(), String> {
        #[cfg(feature = "parallel")]
        {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global()
                .map_err(|e| e.to_string())
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Ok(())
        }
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Applies `f(chunk_index, chunk)` over consecutive mutable chunks.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                data.par_chunks_mut(chunk)
                    .enumerate()
                    .for_each(|(i, c)| f(i, c));
            }
            _ => data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
        }
    }

    /// Fallible variant of [`Execution::map`]; returns the first error in
    /// index order.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        assert_eq!(
            Execution::Parallel.map(1000, f),
            Execution::Sequential.map(1000, f)
        );
    }

    #[test]
    fn chunks_cover_the_slice() {
        let mut v = vec![0usize; 103];
        Execution::Parallel.for_each_chunk_mut(&mut v, 10, |ci, c| {
            for (k, x) in c.iter_mut().enumerate() {
                *x = ci * 10 + k;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }
}
