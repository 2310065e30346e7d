//! Page-fault traces: data model, text format, synthetic generators and the
//! window-X access-pattern classifier.

mod classify;
mod gen;
mod io;

pub use classify::{classify_patterns, PatternBreakdown};
pub use gen::{
    gen_interleaved, gen_mixed, gen_random, gen_sequential, gen_stride, GenSpec, StreamSpec,
    RNG_NAME,
};
pub use io::{parse_trace, read_trace_file, write_trace};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{PageId, ProcessId, Tick, MAX_PAGE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: malformed event `{content}`: {reason}")]
    Malformed {
        line: usize,
        content: String,
        reason: String,
    },
    #[error("line {line}: tick regression ({tick} after {previous})")]
    TickRegression {
        line: usize,
        tick: Tick,
        previous: Tick,
    },
    #[error("line {line}: page id {page} exceeds the 63-bit page range")]
    PageOutOfRange { line: usize, page: u128 },
    #[error("invalid generator: {0}")]
    Generator(String),
    #[error("insufficient events: no process has at least {window} faults")]
    InsufficientEvents { window: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    #[default]
    Read,
    Write,
}

/// One page fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageAccessEvent {
    pub tick: Tick,
    pub process_id: ProcessId,
    pub page_id: PageId,
    pub kind: AccessKind,
}

impl PageAccessEvent {
    pub fn read(tick: Tick, process_id: ProcessId, page_id: PageId) -> Self {
        debug_assert!(page_id <= MAX_PAGE);
        Self {
            tick,
            process_id,
            page_id,
            kind: AccessKind::Read,
        }
    }
}

/// Provenance carried in the trace file header.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub name: String,
    /// Canonical generator spec; re-parsing and generating it reproduces
    /// the trace exactly.
    pub generator: Option<String>,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    /// Event offsets where mixed-trace segments start (excluding 0).
    pub segments: Vec<usize>,
}

/// An immutable, tick-ordered sequence of page faults.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    events: Vec<PageAccessEvent>,
    meta: TraceMeta,
}

impl Trace {
    /// Builds a trace, rejecting tick regressions and out-of-range pages.
    /// Line numbers in errors are 1-based event positions.
    pub fn new(events: Vec<PageAccessEvent>, meta: TraceMeta) -> Result<Self, TraceError> {
        let mut previous = None;
        for (i, ev) in events.iter().enumerate() {
            if ev.page_id > MAX_PAGE {
                return Err(TraceError::PageOutOfRange {
                    line: i + 1,
                    page: ev.page_id as u128,
                });
            }
            if let Some(prev) = previous {
                if ev.tick < prev {
                    return Err(TraceError::TickRegression {
                        line: i + 1,
                        tick: ev.tick,
                        previous: prev,
                    });
                }
            }
            previous = Some(ev.tick);
        }
        Ok(Self { events, meta })
    }

    pub fn events(&self) -> &[PageAccessEvent] {
        &self.events
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of distinct pages touched.
    pub fn working_set(&self) -> usize {
        let mut pages: Vec<PageId> = self.events.iter().map(|e| e.page_id).collect();
        pages.sort_unstable();
        pages.dedup();
        pages.len()
    }

    /// Page sequences per process, in trace order.
    pub fn per_process(&self) -> BTreeMap<ProcessId, Vec<PageId>> {
        let mut out: BTreeMap<ProcessId, Vec<PageId>> = BTreeMap::new();
        for ev in &self.events {
            out.entry(ev.process_id).or_default().push(ev.page_id);
        }
        out
    }

    pub fn pages(&self) -> impl Iterator<Item = PageId> + '_ {
        self.events.iter().map(|e| e.page_id)
    }
}
