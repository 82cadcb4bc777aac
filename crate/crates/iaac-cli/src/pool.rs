//! Bounded worker pool for independent runs.
//!
//! Tasks write to disjoint files and derive their randomness from their own
//! seeds, so scheduling order cannot change any output byte. The pool size
//! comes from `IAAC_WORKERS` (default 1). Errors are reported for the
//! lowest-indexed failing task to keep failure messages deterministic too.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::CliError;

pub const WORKERS_VAR: &str = "IAAC_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

type Task<'a> = Box<dyn FnOnce() -> Result<(), CliError> + Send + 'a>;

pub fn run_tasks(tasks: Vec<Task<'_>>) -> Result<(), CliError> {
    let workers = worker_count().min(tasks.len().max(1));
    if workers <= 1 {
        for task in tasks {
            task()?;
        }
        return Ok(());
    }

    let queue: Vec<Mutex<Option<Task<'_>>>> =
        tasks.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<(usize, CliError)>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= queue.len() {
                    break;
                }
                let task = queue[idx].lock().expect("queue slot").take();
                if let Some(task) = task {
                    if let Err(e) = task() {
                        failures.lock().expect("failure list").push((idx, e));
                    }
                }
            });
        }
    });

    let mut failures = failures.into_inner().expect("failure list");
    failures.sort_by_key(|(idx, _)| *idx);
    match failures.into_iter().next() {
        None => Ok(()),
        Some((_, e)) => Err(e),
    }
}
