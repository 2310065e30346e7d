//! Prefetchers behind one interface.
//!
//! The simulator calls [`Prefetcher::on_prefetch_hit`] when a fault is
//! served from the prefetch cache, then [`Prefetcher::on_fault`] for every
//! fault (prefetch hit or miss). All prefetcher state is kept per process.

mod leap;
mod nextn;
mod readahead;
mod stride;

pub use leap::{LeapPrefetcher, LeapState};
pub use nextn::NextNLine;
pub use readahead::{ReadAhead, READAHEAD_BLOCK, READAHEAD_MAX_WINDOW};
pub use stride::StridePrefetcher;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::history::AccessHistory;
use crate::{offset_page, Delta, PageId, ProcessId, Tick};

pub const DEFAULT_PW_MAX: usize = 8;
pub const DEFAULT_N_SPLIT: usize = 2;
pub const DEFAULT_NEXT_N: usize = 8;

/// How a fault was served.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    Miss,
    PrefetchHit,
}

/// Everything a prefetcher sees about one fault.
#[derive(Debug, Clone, Copy)]
pub struct Fault<'a> {
    pub pid: ProcessId,
    pub page: PageId,
    pub tick: Tick,
    /// Delta already recorded into `history` for this fault.
    pub delta: Delta,
    pub history: &'a AccessHistory,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefetchDecision {
    pub demand_page: PageId,
    pub candidates: Vec<PageId>,
    pub window_size_used: usize,
}

impl PrefetchDecision {
    pub fn none(demand_page: PageId) -> Self {
        Self {
            demand_page,
            candidates: Vec::new(),
            window_size_used: 0,
        }
    }

    /// `page + i*step` for `i in 1..=count`, dropping out-of-range pages,
    /// duplicates and the demand page itself.
    pub fn strided(page: PageId, step: Delta, count: usize) -> Self {
        let mut candidates = Vec::with_capacity(count);
        if step != 0 {
            for i in 1..=count {
                if let Some(p) = offset_page(page, i as i128 * step as i128) {
                    candidates.push(p);
                }
            }
        }
        Self {
            demand_page: page,
            candidates,
            window_size_used: count,
        }
    }
}

pub trait Prefetcher: Send {
    fn name(&self) -> &'static str;

    fn on_fault(&mut self, fault: &Fault<'_>) -> PrefetchDecision;

    /// A page prefetched on behalf of `pid` was hit.
    fn on_prefetch_hit(&mut self, pid: ProcessId, page: PageId);

    /// Largest number of history reads a single trend detection needed,
    /// for prefetchers that detect trends.
    fn max_trend_scan(&self) -> Option<usize> {
        None
    }
}

/// Never prefetches.
#[derive(Debug, Default, Clone)]
pub struct NoPrefetch;

impl Prefetcher for NoPrefetch {
    fn name(&self) -> &'static str {
        "none"
    }

    fn on_fault(&mut self, fault: &Fault<'_>) -> PrefetchDecision {
        PrefetchDecision::none(fault.page)
    }

    fn on_prefetch_hit(&mut self, _pid: ProcessId, _page: PageId) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefetcherKind {
    Leap,
    ReadAhead,
    NextN,
    Stride,
    None,
}

impl PrefetcherKind {
    pub const ALL: [PrefetcherKind; 5] = [
        PrefetcherKind::Leap,
        PrefetcherKind::ReadAhead,
        PrefetcherKind::NextN,
        PrefetcherKind::Stride,
        PrefetcherKind::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PrefetcherKind::Leap => "leap",
            PrefetcherKind::ReadAhead => "readahead",
            PrefetcherKind::NextN => "nextn",
            PrefetcherKind::Stride => "stride",
            PrefetcherKind::None => "none",
        }
    }
}

impl fmt::Display for PrefetcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown prefetcher `{0}` (expected leap, readahead, nextn, stride or none)")]
pub struct UnknownPrefetcher(pub String);

impl FromStr for PrefetcherKind {
    type Err = UnknownPrefetcher;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PrefetcherKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownPrefetcher(s.to_string()))
    }
}

/// Tunables shared by the prefetchers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefetchParams {
    pub n_split: usize,
    pub pw_max: usize,
    pub next_n: usize,
}

impl Default for PrefetchParams {
    fn default() -> Self {
        Self {
            n_split: DEFAULT_N_SPLIT,
            pw_max: DEFAULT_PW_MAX,
            next_n: DEFAULT_NEXT_N,
        }
    }
}

pub fn build_prefetcher(kind: PrefetcherKind, params: &PrefetchParams) -> Box<dyn Prefetcher> {
    match kind {
        PrefetcherKind::Leap => Box::new(LeapPrefetcher::new(params.n_split, params.pw_max)),
        PrefetcherKind::ReadAhead => Box::new(ReadAhead::new()),
        PrefetcherKind::NextN => Box::new(NextNLine::new(params.next_n)),
        PrefetcherKind::Stride => Box::new(StridePrefetcher::new(params.pw_max)),
        PrefetcherKind::None => Box::new(NoPrefetch),
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::history::PageAccessTracker;

    /// Feeds faults to a prefetcher the way the simulator does, with a
    /// caller-chosen outcome per fault.
    pub struct Driver {
        pub tracker: PageAccessTracker,
        tick: Tick,
    }

    impl Driver {
        pub fn new(h_size: usize) -> Self {
            Self {
                tracker: PageAccessTracker::new(h_size),
                tick: 0,
            }
        }

        pub fn fault(
            &mut self,
            p: &mut dyn Prefetcher,
            pid: ProcessId,
            page: PageId,
            kind: FaultKind,
        ) -> PrefetchDecision {
            if kind == FaultKind::PrefetchHit {
                p.on_prefetch_hit(pid, page);
            }
            let delta = self.tracker.record(pid, page);
            let fault = Fault {
                pid,
                page,
                tick: self.tick,
                delta,
                history: self.tracker.history(pid).unwrap(),
                kind,
            };
            self.tick += 1;
            p.on_fault(&fault)
        }

        pub fn miss(&mut self, p: &mut dyn Prefetcher, page: PageId) -> PrefetchDecision {
            self.fault(p, 1, page, FaultKind::Miss)
        }
    }
}
