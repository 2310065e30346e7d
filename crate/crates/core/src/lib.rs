//! Trace-driven simulation of remote-memory page prefetching.
//!
//! The crate replays page-fault traces against a two-tier memory model (a
//! resident LRU set plus a FIFO prefetch cache) and compares prefetchers:
//!
//! - [`prefetch::LeapPrefetcher`]: majority-trend detection over a per-process
//!   delta history ([`history`], [`trend`]) with an adaptive prefetch window.
//! - [`prefetch::NextNLine`], [`prefetch::StridePrefetcher`] and
//!   [`prefetch::ReadAhead`]: the classic baselines.
//!
//! [`memsim::simulate`] produces a [`memsim::SimReport`] with accuracy,
//! coverage, timeliness, pollution and latency percentiles, and
//! [`experiment::run_experiment`] replays one trace against several
//! prefetchers (in parallel when the `parallel` feature is enabled).

pub mod experiment;
pub mod history;
pub mod memsim;
pub mod prefetch;
pub mod trace;
pub mod trend;

/// Page number; one unit is one 4 KiB page.
pub type PageId = u64;
/// Signed difference between two consecutive faulted pages of one process.
pub type Delta = i64;
pub type ProcessId = u32;
/// Logical, unitless time.
pub type Tick = u64;

/// Largest valid page number. Keeping pages within 63 bits makes every
/// difference of two pages representable as a [`Delta`].
pub const MAX_PAGE: PageId = i64::MAX as u64;

/// `page + offset`, or `None` when the result leaves `0..=MAX_PAGE`.
pub fn offset_page(page: PageId, offset: i128) -> Option<PageId> {
    let target = page as i128 + offset;
    (0..=MAX_PAGE as i128)
        .contains(&target)
        .then_some(target as PageId)
}
