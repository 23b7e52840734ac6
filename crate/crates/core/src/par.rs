//! Order-preserving map that runs on rayon when the `parallel` feature is on.

pub fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Cap the number of worker threads used by [`map`]. Only the first call
/// takes effect; without the `parallel` feature this is a no-op.
pub fn set_workers(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Err(crate::Error::InvalidInput("workers must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::Error::InvalidInput(format!("cannot size the worker pool: {e}")))?;
    Ok(())
}
