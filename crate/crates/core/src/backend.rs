//! Shared backend plumbing.

use std::sync::{Mutex, MutexGuard};

/// Failure reported by any model backend.
#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    /// The backend ran but reported a failure.
    #[error("backend failure: {0}")]
    Failed(String),
    /// The backend answered with data that violates the protocol or a type invariant.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Whether a backend may be called from several workers at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Concurrency {
    #[default]
    Parallel,
    /// Calls must be serialized; the pipeline guards them with a lock.
    Serial,
}

/// Lock used by callers to serialize access to `Serial` backends.
#[derive(Debug, Default)]
pub struct CallGuard {
    lock: Mutex<()>,
}

impl CallGuard {
    /// Takes the lock when `mode` is serial, otherwise returns `None` immediately.
    pub fn enter(&self, mode: Concurrency) -> Option<MutexGuard<'_, ()>> {
        match mode {
            Concurrency::Parallel => None,
            Concurrency::Serial => Some(self.lock.lock().unwrap_or_else(|e| e.into_inner())),
        }
    }
}
