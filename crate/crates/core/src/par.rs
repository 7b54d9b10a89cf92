//! Trial-level data parallelism. With the `parallel` feature disabled every
//! map runs sequentially and produces identical output.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// `(0..n).map(f)` collected in index order, fanned out over the rayon pool
/// when `exec` is `Parallel` and the feature is enabled.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i * i) as u64 % 7;
        assert_eq!(
            map_indexed(1000, Execution::Parallel, f),
            map_indexed(1000, Execution::Sequential, f)
        );
    }
}
