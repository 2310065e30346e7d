use std::num::NonZeroUsize;

use lru::LruCache;
use serde::{Deserialize, Serialize};

use crate::{PageId, ProcessId, Tick};

/// How a page entered the resident set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidentTag {
    Demand,
    Promoted,
}

/// Resident set with LRU replacement.
#[derive(Debug)]
pub struct LocalMemory {
    pages: LruCache<PageId, ResidentTag>,
}

impl LocalMemory {
    pub fn new(capacity: NonZeroUsize) -> Self {
        Self {
            pages: LruCache::new(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.pages.cap().get()
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    pub fn contains(&self, page: PageId) -> bool {
        self.pages.contains(&page)
    }

    pub fn tag(&self, page: PageId) -> Option<ResidentTag> {
        self.pages.peek(&page).copied()
    }

    /// Marks `page` most recently used; false when it is not resident.
    pub fn touch(&mut self, page: PageId) -> bool {
        self.pages.get(&page).is_some()
    }

    /// Makes `page` resident and returns the evicted LRU victim, if any.
    pub fn insert(&mut self, page: PageId, tag: ResidentTag) -> Option<PageId> {
        match self.pages.push(page, tag) {
            Some((victim, _)) if victim != page => Some(victim),
            _ => None,
        }
    }

    /// Least recently used page, the next eviction victim.
    pub fn lru_page(&self) -> Option<PageId> {
        self.pages.peek_lru().map(|(&p, _)| p)
    }
}

/// What happens to a prefetch-cache entry once it is hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvictionMode {
    /// Free the slot as soon as the page is promoted.
    #[default]
    Eager,
    /// Keep the used entry until capacity pressure pushes it out.
    Lazy,
}

impl EvictionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvictionMode::Eager => "eager",
            EvictionMode::Lazy => "lazy",
        }
    }
}

impl std::fmt::Display for EvictionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EvictionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eager" => Ok(EvictionMode::Eager),
            "lazy" => Ok(EvictionMode::Lazy),
            _ => Err(format!(
                "invalid eviction mode `{s}` (expected eager or lazy)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefetchEntry {
    pub page: PageId,
    pub insert_tick: Tick,
    /// First tick at which the page has arrived.
    pub ready_tick: Tick,
    pub origin_process: ProcessId,
    pub used: bool,
}

/// Entry that left the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evicted {
    pub entry: PrefetchEntry,
}

impl Evicted {
    /// Evicted before anyone used it.
    pub fn polluted(&self) -> bool {
        !self.entry.used
    }
}

/// FIFO cache of prefetched pages, optionally bounded.
#[derive(Debug)]
pub struct PrefetchCache {
    // Used purely in insertion order: lookups go through `peek`, so the
    // LRU end is always the oldest insertion.
    entries: LruCache<PageId, PrefetchEntry>,
    capacity: Option<NonZeroUsize>,
}

impl PrefetchCache {
    pub fn new(capacity: Option<NonZeroUsize>) -> Self {
        Self {
            entries: LruCache::unbounded(),
            capacity,
        }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity.map(NonZeroUsize::get)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, page: PageId) -> bool {
        self.entries.contains(&page)
    }

    pub fn get(&self, page: PageId) -> Option<&PrefetchEntry> {
        self.entries.peek(&page)
    }

    /// Entries from oldest to newest insertion.
    pub fn iter(&self) -> impl Iterator<Item = &PrefetchEntry> {
        self.entries.iter().rev().map(|(_, e)| e)
    }

    pub fn used_entries(&self) -> usize {
        self.iter().filter(|e| e.used).count()
    }

    pub fn mark_used(&mut self, page: PageId) {
        if let Some(e) = self.entries.peek_mut(&page) {
            e.used = true;
        }
    }

    pub fn remove(&mut self, page: PageId) -> Option<PrefetchEntry> {
        self.entries.pop(&page)
    }

    /// Appends `entry` at the tail, evicting from the head while over
    /// capacity. The caller guarantees the page is not already present.
    pub fn push(&mut self, entry: PrefetchEntry, evicted: &mut Vec<Evicted>) {
        debug_assert!(!self.entries.contains(&entry.page));
        self.entries.push(entry.page, entry);
        if let Some(cap) = self.capacity {
            while self.entries.len() > cap.get() {
                if let Some((_, e)) = self.entries.pop_lru() {
                    evicted.push(Evicted { entry: e });
                }
            }
        }
    }

    /// Removes every entry, oldest first.
    pub fn drain(&mut self) -> Vec<PrefetchEntry> {
        let mut out = Vec::with_capacity(self.entries.len());
        while let Some((_, e)) = self.entries.pop_lru() {
            out.push(e);
        }
        out
    }
}
