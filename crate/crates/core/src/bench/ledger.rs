//! Ground-truth query accounting.
//!
//! The ledger is the only mutable state of a benchmark backend: an
//! atomic counter with an append-only log. Valid-split queries are the
//! budgeted ones; test-split queries are counted separately (they only
//! happen during final reporting).

use serde::Serialize;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug, Serialize)]
pub struct LedgerEntry {
    pub hash: String,
    pub accuracy: f64,
    pub at_millis: u128,
}

#[derive(Debug, Default)]
struct Inner {
    log: Vec<LedgerEntry>,
    test_queries: usize,
}

#[derive(Debug, Default)]
pub struct QueryLedger {
    inner: Mutex<Inner>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_valid(&self, hash: String, accuracy: f64) {
        let at_millis = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let mut inner = self.inner.lock().expect("ledger poisoned");
        inner.log.push(LedgerEntry {
            hash,
            accuracy,
            at_millis,
        });
    }

    pub fn record_test(&self) {
        self.inner.lock().expect("ledger poisoned").test_queries += 1;
    }

    /// Number of valid-split ground-truth queries so far. Equals the log
    /// length by construction and never decreases.
    pub fn count(&self) -> usize {
        self.inner.lock().expect("ledger poisoned").log.len()
    }

    pub fn test_count(&self) -> usize {
        self.inner.lock().expect("ledger poisoned").test_queries
    }

    pub fn snapshot(&self) -> Vec<LedgerEntry> {
        self.inner.lock().expect("ledger poisoned").log.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn count_tracks_log_exactly() {
        let ledger = QueryLedger::new();
        for i in 0..5 {
            ledger.record_valid(format!("h{i}"), 0.5);
            assert_eq!(ledger.count(), i + 1);
            assert_eq!(ledger.snapshot().len(), i + 1);
        }
        ledger.record_test();
        assert_eq!(ledger.count(), 5);
        assert_eq!(ledger.test_count(), 1);
    }

    #[test]
    fn concurrent_queries_never_lose_entries() {
        let ledger = Arc::new(QueryLedger::new());
        let mut handles = Vec::new();
        for t in 0..4 {
            let l = Arc::clone(&ledger);
            handles.push(std::thread::spawn(move || {
                for i in 0..250 {
                    l.record_valid(format!("{t}:{i}"), 0.1);
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(ledger.count(), 1000);
        assert_eq!(ledger.snapshot().len(), 1000);
    }
}
