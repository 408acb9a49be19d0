//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) `Exec::Parallel` maps over rayon's
//! pool; without it every mode runs sequentially. Results are always returned
//! in index order so reductions are independent of scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn effective(self) -> Exec {
        if cfg!(feature = "parallel") { self } else { Exec::Sequential }
    }
}

/// Map `f` over `0..n`, preserving order.
pub fn map_indexed<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec.effective() {
        Exec::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Exec::Parallel => (0..n).map(f).collect(),
    }
}

/// Map over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], exec: Exec, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(items.len(), exec, |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let a = map_indexed(100, Exec::Sequential, |i| i * i);
        let b = map_indexed(100, Exec::Parallel, |i| i * i);
        assert_eq!(a, b);
    }
}
