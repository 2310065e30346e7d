use std::collections::BTreeMap;
use std::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

use super::latency::LatencyModel;
use super::memory::{
    Evicted, EvictionMode, LocalMemory, PrefetchCache, PrefetchEntry, ResidentTag,
};
use super::report::{Counters, Histogram, ProcessReport, SimReport};
use crate::history::{PageAccessTracker, DEFAULT_HISTORY_SIZE};
use crate::prefetch::{Fault, FaultKind, PrefetchDecision, Prefetcher};
use crate::trace::{PageAccessEvent, Trace};
use crate::{PageId, ProcessId, Tick};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("resident capacity must be at least 1 page")]
    ZeroResidentCapacity,
    #[error("prefetch cache capacity must be at least 1 page when bounded")]
    ZeroPrefetchCapacity,
    #[error("history size must be at least 1")]
    ZeroHistorySize,
    #[error("prefetch arrival delay {0} requires the latency-aware simulation")]
    ArrivalDelayNotAllowed(u64),
    #[error("warm-up of {warmup} events exceeds the trace length {len}")]
    WarmupTooLong { warmup: usize, len: usize },
}

/// Everything except the prefetcher that determines a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub resident_capacity: usize,
    /// `None` leaves the prefetch cache unbounded.
    pub prefetch_capacity: Option<usize>,
    pub eviction: EvictionMode,
    pub latency: LatencyModel,
    pub history_size: usize,
    /// Ticks between a prefetch decision and the page arriving.
    pub arrival_delay: Tick,
    /// Leading events replayed to warm state but left out of the report.
    pub warmup_events: usize,
}

impl SimConfig {
    pub fn new(resident_capacity: usize) -> Self {
        Self {
            resident_capacity,
            prefetch_capacity: None,
            eviction: EvictionMode::Eager,
            latency: LatencyModel::default(),
            history_size: DEFAULT_HISTORY_SIZE,
            arrival_delay: 0,
            warmup_events: 0,
        }
    }

    /// Resident set sized to half of the trace's distinct pages.
    pub fn for_trace(trace: &Trace) -> Self {
        Self::new((trace.working_set() / 2).max(1))
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.resident_capacity == 0 {
            return Err(SimError::ZeroResidentCapacity);
        }
        if self.prefetch_capacity == Some(0) {
            return Err(SimError::ZeroPrefetchCapacity);
        }
        if self.history_size == 0 {
            return Err(SimError::ZeroHistorySize);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    ResidentHit,
    PrefetchHit,
    /// Hit on a prefetch that had not arrived yet.
    LatePrefetchHit,
    Miss,
}

/// Result of replaying one event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub outcome: Outcome,
    pub latency_ns: u64,
    /// Prefetcher decision; `None` for resident hits.
    pub decision: Option<PrefetchDecision>,
    /// Candidates actually added to the prefetch cache.
    pub inserted: usize,
}

/// Replays accesses one at a time.
pub struct Simulator {
    config: SimConfig,
    prefetcher: Box<dyn Prefetcher>,
    tracker: PageAccessTracker,
    memory: LocalMemory,
    cache: PrefetchCache,
    counters: Counters,
    per_process: BTreeMap<ProcessId, Counters>,
    timeliness: Histogram,
    latency: Histogram,
    evicted: Vec<Evicted>,
}

impl Simulator {
    pub fn new(prefetcher: Box<dyn Prefetcher>, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let resident = NonZeroUsize::new(config.resident_capacity).expect("validated");
        let prefetch = config.prefetch_capacity.and_then(NonZeroUsize::new);
        Ok(Self {
            tracker: PageAccessTracker::new(config.history_size),
            memory: LocalMemory::new(resident),
            cache: PrefetchCache::new(prefetch),
            prefetcher,
            config,
            counters: Counters::default(),
            per_process: BTreeMap::new(),
            timeliness: Histogram::default(),
            latency: Histogram::default(),
            evicted: Vec::new(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn prefetcher(&self) -> &dyn Prefetcher {
        self.prefetcher.as_ref()
    }

    pub fn memory(&self) -> &LocalMemory {
        &self.memory
    }

    pub fn prefetch_cache(&self) -> &PrefetchCache {
        &self.cache
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn step(&mut self, event: &PageAccessEvent) -> Step {
        let (page, pid, tick) = (event.page_id, event.process_id, event.tick);
        let lat = self.config.latency;
        self.count(pid, |c| c.total_requests += 1);

        if self.memory.touch(page) {
            self.count(pid, |c| c.resident_hits += 1);
            self.latency.record(lat.t_resident_hit);
            return Step {
                outcome: Outcome::ResidentHit,
                latency_ns: lat.t_resident_hit,
                decision: None,
                inserted: 0,
            };
        }

        let hit = self.cache.get(page).filter(|e| !e.used).copied();
        let (outcome, latency_ns) = match hit {
            Some(e) if e.ready_tick > tick => (
                Outcome::LatePrefetchHit,
                lat.late_prefetch_hit(e.ready_tick - tick),
            ),
            Some(_) => (Outcome::PrefetchHit, lat.t_prefetch_hit),
            None => (Outcome::Miss, lat.miss()),
        };
        let kind = match hit {
            Some(e) => {
                self.prefetcher.on_prefetch_hit(e.origin_process, page);
                self.timeliness.record(tick.saturating_sub(e.insert_tick));
                let late = outcome == Outcome::LatePrefetchHit;
                self.count(pid, |c| {
                    c.prefetch_hits += 1;
                    c.late_prefetch_hits += u64::from(late);
                });
                FaultKind::PrefetchHit
            }
            None => {
                self.count(pid, |c| c.misses += 1);
                FaultKind::Miss
            }
        };
        self.latency.record(latency_ns);

        let delta = self.tracker.record(pid, page);
        let fault = Fault {
            pid,
            page,
            tick,
            delta,
            history: self.tracker.history(pid).expect("just recorded"),
            kind,
        };
        let decision = self.prefetcher.on_fault(&fault);

        match kind {
            FaultKind::PrefetchHit => {
                match self.config.eviction {
                    EvictionMode::Eager => {
                        self.cache.remove(page);
                    }
                    EvictionMode::Lazy => self.cache.mark_used(page),
                }
                self.memory.insert(page, ResidentTag::Promoted);
            }
            FaultKind::Miss => {
                // A used entry left behind in lazy mode is a stale copy.
                self.cache.remove(page);
                self.memory.insert(page, ResidentTag::Demand);
            }
        }

        let inserted = self.insert_prefetch(&decision.candidates, tick, pid);
        Step {
            outcome,
            latency_ns,
            decision: Some(decision),
            inserted,
        }
    }

    /// Adds `pages` at the tail of the prefetch cache, skipping pages that
    /// are resident or already cached. Returns the number inserted.
    pub fn insert_prefetch(&mut self, pages: &[PageId], tick: Tick, origin: ProcessId) -> usize {
        let mut inserted = 0;
        for &page in pages {
            if self.memory.contains(page) {
                continue;
            }
            if let Some(e) = self.cache.get(page) {
                if !e.used {
                    continue;
                }
                self.cache.remove(page);
            }
            let entry = PrefetchEntry {
                page,
                insert_tick: tick,
                ready_tick: tick.saturating_add(self.config.arrival_delay),
                origin_process: origin,
                used: false,
            };
            self.cache.push(entry, &mut self.evicted);
            inserted += 1;
        }
        self.count(origin, |c| c.pages_prefetched += inserted as u64);
        for ev in std::mem::take(&mut self.evicted) {
            if ev.polluted() {
                self.count(ev.entry.origin_process, |c| c.pollution += 1);
            }
        }
        inserted
    }

    /// Zeroes all statistics while keeping memory and prefetcher state.
    /// Unused prefetches still cached are re-counted as fresh insertions so
    /// that every later hit or pollution has a matching insertion.
    pub fn reset_stats(&mut self) {
        self.counters = Counters::default();
        self.per_process.clear();
        self.timeliness = Histogram::default();
        self.latency = Histogram::default();
        let carried: Vec<ProcessId> = self
            .cache
            .iter()
            .filter(|e| !e.used)
            .map(|e| e.origin_process)
            .collect();
        for origin in carried {
            self.count(origin, |c| c.pages_prefetched += 1);
        }
    }

    pub fn finish(mut self) -> SimReport {
        for e in self.cache.drain() {
            if !e.used {
                self.counters.pollution += 1;
                self.per_process
                    .entry(e.origin_process)
                    .or_default()
                    .pollution += 1;
            }
        }
        let per_process = self
            .per_process
            .iter()
            .map(|(&process_id, c)| ProcessReport {
                process_id,
                counters: *c,
                accuracy: c.accuracy(),
                coverage: c.coverage(),
            })
            .collect();
        SimReport {
            prefetcher: self.prefetcher.name().to_string(),
            counters: self.counters,
            timeliness: self.timeliness,
            latency: self.latency,
            per_process,
            max_trend_scan: self.prefetcher.max_trend_scan(),
        }
    }

    fn count(&mut self, pid: ProcessId, f: impl Fn(&mut Counters)) {
        f(&mut self.counters);
        f(self.per_process.entry(pid).or_default());
    }
}

/// Replays `trace` with instantaneous prefetch arrival.
pub fn simulate(
    trace: &Trace,
    prefetcher: Box<dyn Prefetcher>,
    config: &SimConfig,
) -> Result<SimReport, SimError> {
    if config.arrival_delay > 0 {
        return Err(SimError::ArrivalDelayNotAllowed(config.arrival_delay));
    }
    replay(trace, prefetcher, config.clone())
}

/// Replays `trace` with prefetched pages arriving `arrival_delay` ticks
/// after the decision. Accesses to pages still in flight are late hits.
pub fn simulate_latency_aware(
    trace: &Trace,
    prefetcher: Box<dyn Prefetcher>,
    config: &SimConfig,
    arrival_delay: Tick,
) -> Result<SimReport, SimError> {
    let config = SimConfig {
        arrival_delay,
        ..config.clone()
    };
    replay(trace, prefetcher, config)
}

fn replay(
    trace: &Trace,
    prefetcher: Box<dyn Prefetcher>,
    config: SimConfig,
) -> Result<SimReport, SimError> {
    let warmup = config.warmup_events;
    if warmup > trace.len() {
        return Err(SimError::WarmupTooLong {
            warmup,
            len: trace.len(),
        });
    }
    let mut sim = Simulator::new(prefetcher, config)?;
    let (head, tail) = trace.events().split_at(warmup);
    for e in head {
        sim.step(e);
    }
    if warmup > 0 {
        sim.reset_stats();
    }
    for e in tail {
        sim.step(e);
    }
    Ok(sim.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefetch::{build_prefetcher, NoPrefetch, PrefetchParams, PrefetcherKind};
    use crate::trace::{gen_sequential, gen_stride, TraceMeta};

    fn trace(pages: &[(Tick, PageId)]) -> Trace {
        let events = pages
            .iter()
            .map(|&(t, p)| PageAccessEvent::read(t, 1, p))
            .collect();
        Trace::new(events, TraceMeta::default()).unwrap()
    }

    fn leap() -> Box<dyn Prefetcher> {
        build_prefetcher(PrefetcherKind::Leap, &PrefetchParams::default())
    }

    /// Prefetches a fixed list on the first fault only.
    struct Scripted(Vec<PageId>);

    impl Prefetcher for Scripted {
        fn name(&self) -> &'static str {
            "scripted"
        }
        fn on_fault(&mut self, fault: &Fault<'_>) -> PrefetchDecision {
            PrefetchDecision {
                demand_page: fault.page,
                candidates: std::mem::take(&mut self.0),
                window_size_used: 0,
            }
        }
        fn on_prefetch_hit(&mut self, _: ProcessId, _: PageId) {}
    }

    #[test]
    fn resident_hit_changes_only_hit_counters() {
        let mut sim = Simulator::new(Box::new(NoPrefetch), SimConfig::new(4)).unwrap();
        sim.step(&PageAccessEvent::read(0, 1, 9));
        let before = *sim.counters();
        let s = sim.step(&PageAccessEvent::read(1, 1, 9));
        assert_eq!(s.outcome, Outcome::ResidentHit);
        assert_eq!(s.latency_ns, 100);
        assert_eq!(sim.counters().resident_hits, before.resident_hits + 1);
        assert_eq!(sim.counters().misses, before.misses);
    }

    #[test]
    fn timeliness_is_ticks_since_insertion() {
        let t = trace(&[(10, 100), (17, 101)]);
        let r = simulate(&t, Box::new(Scripted(vec![101])), &SimConfig::new(4)).unwrap();
        assert_eq!(r.counters.prefetch_hits, 1);
        assert_eq!(r.timeliness.iter().collect::<Vec<_>>(), vec![(7, 1)]);
    }

    #[test]
    fn eager_hit_frees_the_slot_in_the_same_tick() {
        let mut sim =
            Simulator::new(Box::new(Scripted(vec![101, 102])), SimConfig::new(4)).unwrap();
        sim.step(&PageAccessEvent::read(0, 1, 100));
        assert_eq!(sim.prefetch_cache().len(), 2);
        let s = sim.step(&PageAccessEvent::read(1, 1, 101));
        assert_eq!(s.outcome, Outcome::PrefetchHit);
        assert_eq!(sim.prefetch_cache().len(), 1);
        assert!(sim.memory().contains(101));
        assert_eq!(sim.memory().tag(101), Some(ResidentTag::Promoted));
    }

    #[test]
    fn lazy_hit_keeps_the_used_entry() {
        let mut cfg = SimConfig::new(4);
        cfg.eviction = EvictionMode::Lazy;
        let mut sim = Simulator::new(Box::new(Scripted(vec![101, 102])), cfg).unwrap();
        sim.step(&PageAccessEvent::read(0, 1, 100));
        sim.step(&PageAccessEvent::read(1, 1, 101));
        assert_eq!(sim.prefetch_cache().len(), 2);
        assert_eq!(sim.prefetch_cache().used_entries(), 1);
    }

    #[test]
    fn insert_skips_resident_and_cached_pages() {
        let mut sim = Simulator::new(Box::new(NoPrefetch), SimConfig::new(4)).unwrap();
        sim.step(&PageAccessEvent::read(0, 1, 102));
        assert_eq!(sim.insert_prefetch(&[101, 102], 1, 1), 1);
        assert_eq!(sim.insert_prefetch(&[101, 103], 2, 1), 1);
    }

    #[test]
    fn bounded_insert_evicts_oldest_as_pollution() {
        let mut cfg = SimConfig::new(4);
        cfg.prefetch_capacity = Some(2);
        let mut sim = Simulator::new(Box::new(NoPrefetch), cfg).unwrap();
        assert_eq!(sim.insert_prefetch(&[1, 2, 3], 0, 1), 3);
        assert_eq!(sim.counters().pollution, 1);
        assert!(!sim.prefetch_cache().contains(1));
    }

    #[test]
    fn empty_trace_reports_zeros() {
        let t = trace(&[]);
        let r = simulate(&t, leap(), &SimConfig::new(1)).unwrap();
        assert_eq!(r.counters, Counters::default());
        assert_eq!(r.flat().latency_p999_ns, 0);
    }

    #[test]
    fn arrival_delay_needs_latency_aware_mode() {
        let t = trace(&[(0, 1)]);
        let mut cfg = SimConfig::new(1);
        cfg.arrival_delay = 2;
        assert_eq!(
            simulate(&t, leap(), &cfg).unwrap_err(),
            SimError::ArrivalDelayNotAllowed(2)
        );
        assert!(simulate_latency_aware(&t, leap(), &cfg, 2).is_ok());
    }

    #[test]
    fn invalid_capacities_are_rejected() {
        assert!(Simulator::new(leap(), SimConfig::new(0)).is_err());
        let mut cfg = SimConfig::new(1);
        cfg.prefetch_capacity = Some(0);
        assert!(Simulator::new(leap(), cfg).is_err());
    }

    #[test]
    fn zero_delay_matches_plain_simulation() {
        let t = gen_stride(2_000, 0, 10, 1).unwrap();
        let cfg = SimConfig::for_trace(&t);
        let a = simulate(&t, leap(), &cfg).unwrap();
        let b = simulate_latency_aware(&t, leap(), &cfg, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn long_delay_turns_stride_hits_late() {
        let t = gen_stride(2_000, 0, 10, 1).unwrap();
        let cfg = SimConfig::for_trace(&t);
        let r = simulate_latency_aware(&t, leap(), &cfg, 100).unwrap();
        assert!(r.counters.prefetch_hits > 0);
        assert_eq!(r.counters.late_prefetch_hits, r.counters.prefetch_hits);
        assert!(r.latency.iter().all(|(v, _)| v <= cfg.latency.miss()));
    }

    #[test]
    fn warmup_excludes_leading_events() {
        let t = gen_sequential(1_000, 0, 1).unwrap();
        let mut cfg = SimConfig::for_trace(&t);
        cfg.warmup_events = 100;
        let r = simulate(&t, leap(), &cfg).unwrap();
        assert_eq!(r.counters.total_requests, 900);
        assert!(r.counters.prefetch_hits <= r.counters.pages_prefetched);
        cfg.warmup_events = 2_000;
        assert!(simulate(&t, leap(), &cfg).is_err());
    }

    #[test]
    fn mean_latency_is_outcome_weighted() {
        let t = gen_stride(3_000, 0, 10, 1).unwrap();
        let cfg = SimConfig::for_trace(&t);
        let r = simulate(&t, leap(), &cfg).unwrap();
        let c = r.counters;
        let l = cfg.latency;
        let expected = c.resident_hits as u128 * l.t_resident_hit as u128
            + c.prefetch_hits as u128 * l.t_prefetch_hit as u128
            + c.misses as u128 * l.miss() as u128;
        assert_eq!(r.latency.sum(), expected);
    }
}
