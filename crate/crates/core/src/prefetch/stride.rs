use std::collections::HashMap;

use super::{Fault, FaultKind, PrefetchDecision, Prefetcher};
use crate::{Delta, PageId, ProcessId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct StrideState {
    last_page: Option<PageId>,
    last_stride: Option<Delta>,
    depth: usize,
}

/// Classic stride prefetcher. On a miss, a stride that repeats the previous
/// one doubles the prefetch depth (up to `max_depth`); any other stride
/// halves it.
#[derive(Debug, Clone)]
pub struct StridePrefetcher {
    max_depth: usize,
    states: HashMap<ProcessId, StrideState>,
}

impl StridePrefetcher {
    pub fn new(max_depth: usize) -> Self {
        Self {
            max_depth: max_depth.max(1),
            states: HashMap::new(),
        }
    }

    pub fn depth(&self, pid: ProcessId) -> usize {
        self.states.get(&pid).map_or(0, |s| s.depth)
    }
}

impl Prefetcher for StridePrefetcher {
    fn name(&self) -> &'static str {
        "stride"
    }

    fn on_fault(&mut self, fault: &Fault<'_>) -> PrefetchDecision {
        let max_depth = self.max_depth;
        let st = self.states.entry(fault.pid).or_default();
        let stride = st
            .last_page
            .map(|prev| (fault.page as i128 - prev as i128) as Delta);
        st.last_page = Some(fault.page);
        if fault.kind == FaultKind::PrefetchHit {
            st.last_stride = stride;
            return PrefetchDecision::none(fault.page);
        }
        let Some(stride) = stride else {
            return PrefetchDecision::none(fault.page);
        };
        if st.last_stride == Some(stride) {
            st.depth = if st.depth == 0 {
                1
            } else {
                (st.depth * 2).min(max_depth)
            };
        } else {
            st.depth /= 2;
        }
        st.last_stride = Some(stride);
        if stride == 0 || st.depth == 0 {
            return PrefetchDecision::none(fault.page);
        }
        PrefetchDecision::strided(fault.page, stride, st.depth)
    }

    fn on_prefetch_hit(&mut self, _pid: ProcessId, _page: PageId) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefetch::testutil::Driver;

    #[test]
    fn confirmed_stride_prefetches() {
        let mut p = StridePrefetcher::new(8);
        let mut drv = Driver::new(8);
        assert!(drv.miss(&mut p, 0).candidates.is_empty());
        assert!(drv.miss(&mut p, 10).candidates.is_empty());
        let d = drv.miss(&mut p, 20);
        assert!(d.candidates.contains(&30));
        assert!(p.depth(1) >= 1);
    }

    #[test]
    fn alternating_strides_decay_to_nothing() {
        let mut p = StridePrefetcher::new(8);
        let mut drv = Driver::new(8);
        let mut page = 0;
        for _ in 0..4 {
            drv.miss(&mut p, page);
            page += 3;
            drv.miss(&mut p, page);
            page += 3;
        }
        assert_eq!(p.depth(1), 8);
        let mut last = None;
        for i in 0..8 {
            page += if i % 2 == 0 { 2 } else { 5 };
            last = Some(drv.miss(&mut p, page));
        }
        assert_eq!(p.depth(1), 0);
        assert!(last.unwrap().candidates.is_empty());
    }

    #[test]
    fn depth_caps_at_max() {
        let mut p = StridePrefetcher::new(4);
        let mut drv = Driver::new(8);
        for i in 0..10 {
            drv.miss(&mut p, i * 7);
        }
        assert_eq!(p.depth(1), 4);
    }
}
