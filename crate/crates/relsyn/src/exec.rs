//! Sequential and data-parallel execution of independent work items.

/// How independent work items are processed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled and falls
    /// back to sequential execution otherwise.
    #[default]
    Parallel,
}

impl ExecMode {
    /// Smallest index in `0..n` satisfying `pred`.
    pub fn find_first<F>(self, n: usize, pred: F) -> Option<usize>
    where
        F: Fn(usize) -> bool + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            ExecMode::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().find_first(|&i| pred(i))
            }
            _ => (0..n).find(|&i| pred(i)),
        }
    }

    /// `f` applied to each index, in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            ExecMode::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            assert_eq!(mode.find_first(1000, |i| i % 97 == 5 && i > 100), Some(102));
            assert_eq!(mode.find_first(10, |_| false), None);
            assert_eq!(mode.map(5, |i| i * i), vec![0, 1, 4, 9, 16]);
        }
    }
}
