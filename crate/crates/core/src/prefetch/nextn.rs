use super::{Fault, FaultKind, PrefetchDecision, Prefetcher};
use crate::{PageId, ProcessId};

/// Brings the `n` pages following a missed page. Prefetch hits do not
/// trigger it.
#[derive(Debug, Clone)]
pub struct NextNLine {
    n: usize,
}

impl NextNLine {
    pub fn new(n: usize) -> Self {
        Self { n: n.max(1) }
    }

    pub fn decide(&self, page: PageId) -> PrefetchDecision {
        PrefetchDecision::strided(page, 1, self.n)
    }
}

impl Prefetcher for NextNLine {
    fn name(&self) -> &'static str {
        "nextn"
    }

    fn on_fault(&mut self, fault: &Fault<'_>) -> PrefetchDecision {
        match fault.kind {
            FaultKind::Miss => self.decide(fault.page),
            FaultKind::PrefetchHit => PrefetchDecision::none(fault.page),
        }
    }

    fn on_prefetch_hit(&mut self, _pid: ProcessId, _page: PageId) {}
}
