//! Worker-count plumbing for the data-parallel cube operations.

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SPECFUSE_WORKERS";

/// `SPECFUSE_WORKERS` if set to a positive integer, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `f` on a rayon pool with exactly `workers` threads.
pub(crate) fn run<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
