//! Majority-trend prefetcher with an adaptive prefetch window.

use std::collections::HashMap;

use super::{Fault, PrefetchDecision, Prefetcher, DEFAULT_PW_MAX};
use crate::trend::find_trend;
use crate::{Delta, PageId, ProcessId};

/// Per-process window state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeapState {
    /// Window size chosen at the previous decision.
    pub pw_prev: usize,
    /// Prefetch hits since the previous decision.
    pub c_hit: usize,
    /// Most recent non-zero majority delta.
    pub last_trend: Option<Delta>,
    pub pw_max: usize,
}

impl LeapState {
    pub fn new(pw_max: usize) -> Self {
        Self {
            pw_prev: 0,
            c_hit: 0,
            last_trend: None,
            pw_max,
        }
    }

    /// Picks the window for this decision and resets the hit counter.
    ///
    /// Without hits the window is 1 if the fault follows the trend and 0
    /// otherwise; with hits it is `c_hit + 1` rounded up to a power of two.
    /// The result is capped at `pw_max` and never drops below half of the
    /// previous window.
    pub fn window_size(&mut self, follows_trend: bool) -> usize {
        let mut size = if self.c_hit == 0 {
            usize::from(follows_trend)
        } else {
            (self.c_hit + 1).next_power_of_two()
        };
        size = size.min(self.pw_max);
        if size < self.pw_prev / 2 {
            size = self.pw_prev / 2;
        }
        self.c_hit = 0;
        self.pw_prev = size;
        size
    }

    pub fn on_prefetch_hit(&mut self) {
        self.c_hit += 1;
    }
}

impl Default for LeapState {
    fn default() -> Self {
        Self::new(DEFAULT_PW_MAX)
    }
}

/// One decision for a fault whose delta is already in `fault.history`.
///
/// Trend detection runs on every fault, including suspended ones, so that
/// `last_trend` can pick up a new trend and restart prefetching.
pub fn leap_on_fault(
    state: &mut LeapState,
    fault: &Fault<'_>,
    n_split: usize,
) -> (PrefetchDecision, usize) {
    let follows_trend = state.last_trend == Some(fault.delta);
    let size = state.window_size(follows_trend);
    let detected = find_trend(fault.history, n_split);
    let majority = detected.trend.filter(|&d| d != 0);
    if let Some(d) = majority {
        state.last_trend = Some(d);
    }
    let decision = if size == 0 {
        PrefetchDecision::none(fault.page)
    } else {
        // Without a current majority, speculate along the last known trend.
        let step = majority.or(state.last_trend).unwrap_or(1);
        PrefetchDecision::strided(fault.page, step, size)
    };
    (decision, detected.elements_scanned)
}

#[derive(Debug, Clone)]
pub struct LeapPrefetcher {
    n_split: usize,
    pw_max: usize,
    states: HashMap<ProcessId, LeapState>,
    max_scan: usize,
}

impl LeapPrefetcher {
    pub fn new(n_split: usize, pw_max: usize) -> Self {
        Self {
            n_split: n_split.max(1),
            pw_max,
            states: HashMap::new(),
            max_scan: 0,
        }
    }

    pub fn state(&self, pid: ProcessId) -> Option<&LeapState> {
        self.states.get(&pid)
    }

    fn state_mut(&mut self, pid: ProcessId) -> &mut LeapState {
        let pw_max = self.pw_max;
        self.states
            .entry(pid)
            .or_insert_with(|| LeapState::new(pw_max))
    }
}

impl Prefetcher for LeapPrefetcher {
    fn name(&self) -> &'static str {
        "leap"
    }

    fn on_fault(&mut self, fault: &Fault<'_>) -> PrefetchDecision {
        let n_split = self.n_split;
        let (decision, scanned) = leap_on_fault(self.state_mut(fault.pid), fault, n_split);
        self.max_scan = self.max_scan.max(scanned);
        decision
    }

    fn on_prefetch_hit(&mut self, pid: ProcessId, _page: PageId) {
        self.state_mut(pid).on_prefetch_hit();
    }

    fn max_trend_scan(&self) -> Option<usize> {
        Some(self.max_scan)
    }
}
