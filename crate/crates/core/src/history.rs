//! Per-process page access history.
//!
//! Only faulting accesses are recorded, and only as the delta from the
//! process's previous fault. The buffer is a fixed-capacity ring: once full,
//! each new delta overwrites the oldest.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::{Delta, PageId, ProcessId};

/// Default ring capacity.
pub const DEFAULT_HISTORY_SIZE: usize = 32;

#[derive(Debug, Clone)]
pub struct AccessHistory {
    slots: Vec<Delta>,
    head: usize,
    count: usize,
    total_recorded: u64,
    last_page: Option<PageId>,
}

impl AccessHistory {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        Self {
            slots: vec![0; capacity],
            head: 0,
            count: 0,
            total_recorded: 0,
            last_page: None,
        }
    }

    /// Records a fault on `page` and returns its delta. The first fault of
    /// a process has delta 0.
    pub fn record(&mut self, page: PageId) -> Delta {
        let delta = match self.last_page {
            Some(prev) => (page as i128 - prev as i128) as Delta,
            None => 0,
        };
        if self.count > 0 {
            self.head = (self.head + 1) % self.slots.len();
        }
        self.slots[self.head] = delta;
        self.count = (self.count + 1).min(self.slots.len());
        self.total_recorded += 1;
        self.last_page = Some(page);
        delta
    }

    /// Up to `w` most recent deltas, newest first. Borrows the ring; no
    /// allocation.
    pub fn recent(&self, w: usize) -> Recent<'_> {
        self.recent_range(0, w)
    }

    /// Entries `skip..w` of the newest-first window of size `w`; the first
    /// `skip` entries are not touched.
    pub fn recent_range(&self, skip: usize, w: usize) -> Recent<'_> {
        let w = w.min(self.count);
        let skip = skip.min(w);
        let cap = self.slots.len();
        Recent {
            history: self,
            remaining: w - skip,
            pos: (self.head + cap - skip % cap) % cap,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn last_page(&self) -> Option<PageId> {
        self.last_page
    }

    /// Retained deltas, oldest first.
    pub fn to_vec_oldest_first(&self) -> Vec<Delta> {
        let mut v: Vec<Delta> = self.recent(self.count).collect();
        v.reverse();
        v
    }

    /// One `t<i>: <delta>` line per retained entry, oldest first, where `i`
    /// counts records since creation.
    pub fn dump(&self) -> String {
        let first = self.total_recorded - self.count as u64;
        let mut out = String::new();
        for (i, d) in self.to_vec_oldest_first().into_iter().enumerate() {
            let _ = writeln!(out, "t{}: {:+}", first + i as u64, d);
        }
        out
    }
}

impl Default for AccessHistory {
    fn default() -> Self {
        Self::new(DEFAULT_HISTORY_SIZE)
    }
}

/// Newest-first iterator over a history window.
#[derive(Clone)]
pub struct Recent<'a> {
    history: &'a AccessHistory,
    remaining: usize,
    pos: usize,
}

impl Iterator for Recent<'_> {
    type Item = Delta;

    fn next(&mut self) -> Option<Delta> {
        if self.remaining == 0 {
            return None;
        }
        let value = self.history.slots[self.pos];
        let cap = self.history.slots.len();
        self.pos = (self.pos + cap - 1) % cap;
        self.remaining -= 1;
        Some(value)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Recent<'_> {}

/// Keeps one [`AccessHistory`] per process.
#[derive(Debug, Clone)]
pub struct PageAccessTracker {
    capacity: usize,
    histories: HashMap<ProcessId, AccessHistory>,
}

impl PageAccessTracker {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        Self {
            capacity,
            histories: HashMap::new(),
        }
    }

    pub fn record(&mut self, pid: ProcessId, page: PageId) -> Delta {
        let capacity = self.capacity;
        self.histories
            .entry(pid)
            .or_insert_with(|| AccessHistory::new(capacity))
            .record(page)
    }

    pub fn history(&self, pid: ProcessId) -> Option<&AccessHistory> {
        self.histories.get(&pid)
    }
}
