//! Data-parallel map helpers.
//!
//! Monte-Carlo trials and sweep cells are independent, so batch drivers map a
//! pure function over a list of inputs. [`maybe_par_map`] runs on the rayon
//! pool when the `parallel` feature is enabled and degrades to a plain
//! sequential loop otherwise. [`seq_map`] is always sequential; benches use it
//! as the baseline against the rayon path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items` in parallel when the `parallel` feature is on.
///
/// Output order matches input order in both builds.
#[cfg(feature = "parallel")]
pub fn maybe_par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn maybe_par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential map with the same shape as [`maybe_par_map`].
pub fn seq_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let items: Vec<u64> = (0..257).collect();
        let par = maybe_par_map(items.clone(), |x| x * x + 1);
        let seq = seq_map(items, |x| x * x + 1);
        assert_eq!(par, seq);
    }
}
