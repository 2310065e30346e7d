//! Linux-style swap read-ahead model.

use std::collections::HashMap;

use super::{Fault, FaultKind, PrefetchDecision, Prefetcher};
use crate::{offset_page, PageId, ProcessId};

/// Pages are read ahead within aligned blocks of this many pages.
pub const READAHEAD_BLOCK: u64 = 8;
pub const READAHEAD_MAX_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, Default)]
struct RaState {
    prev_page: Option<PageId>,
    window: usize,
}

/// Keys on the last two faults of a process. When a miss directly follows
/// the previous fault's page, the window grows (2, 4, 8) and the rest of the
/// aligned block is read, extended forward to at least `window` pages.
/// Any other miss resets the window and reads nothing extra. Hits on
/// read-ahead pages only advance the two-fault history.
#[derive(Debug, Clone, Default)]
pub struct ReadAhead {
    states: HashMap<ProcessId, RaState>,
}

impl ReadAhead {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn window(&self, pid: ProcessId) -> usize {
        self.states.get(&pid).map_or(0, |s| s.window)
    }
}

impl Prefetcher for ReadAhead {
    fn name(&self) -> &'static str {
        "readahead"
    }

    fn on_fault(&mut self, fault: &Fault<'_>) -> PrefetchDecision {
        let st = self.states.entry(fault.pid).or_default();
        let consecutive = st
            .prev_page
            .is_some_and(|p| p.checked_add(1) == Some(fault.page));
        st.prev_page = Some(fault.page);
        if fault.kind == FaultKind::PrefetchHit {
            return PrefetchDecision::none(fault.page);
        }
        if !consecutive {
            st.window = 0;
            return PrefetchDecision::none(fault.page);
        }
        st.window = (st.window * 2).clamp(2, READAHEAD_MAX_WINDOW);
        let rest_of_block = (READAHEAD_BLOCK - 1 - fault.page % READAHEAD_BLOCK) as usize;
        let count = rest_of_block.max(st.window);
        let candidates = (1..=count as i128)
            .filter_map(|i| offset_page(fault.page, i))
            .collect();
        PrefetchDecision {
            demand_page: fault.page,
            candidates,
            window_size_used: st.window,
        }
    }

    fn on_prefetch_hit(&mut self, _pid: ProcessId, _page: PageId) {}
}
