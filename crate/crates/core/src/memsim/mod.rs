//! Two-tier memory simulation.
//!
//! A resident set with LRU replacement sits in front of a FIFO prefetch
//! cache. Every access is classified as a resident hit, a prefetch hit or a
//! miss; only prefetch hits and misses are faults that reach the page access
//! tracker and the prefetcher.

mod latency;
mod memory;
mod report;
mod sim;

pub use latency::{DataPath, LatencyModel, Medium};
pub use memory::{Evicted, EvictionMode, LocalMemory, PrefetchCache, PrefetchEntry, ResidentTag};
pub use report::{
    write_csv, Counters, FlatReport, Histogram, ProcessReport, SimReport, CSV_COLUMNS,
};
pub use sim::{simulate, simulate_latency_aware, Outcome, SimConfig, SimError, Simulator, Step};
