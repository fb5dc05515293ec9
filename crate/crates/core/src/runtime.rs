//! Process-level knobs shared by the library and the CLI.

/// Maximum worker threads for batched evaluation.
///
/// Controlled by the `PATHGAUGE_THREADS` environment variable; `0` or an
/// unset/unparsable value means "auto" (the machine's available
/// parallelism). Results never depend on the thread count.
pub fn thread_cap() -> usize {
    let auto = || {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    };
    match std::env::var("PATHGAUGE_THREADS") {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(0) | Err(_) => auto(),
            Ok(n) => n,
        },
        Err(_) => auto(),
    }
}
