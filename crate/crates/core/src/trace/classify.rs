use serde::Serialize;

use super::{Trace, TraceError};
use crate::PageId;

/// Share of length-X fault windows that are sequential, constant-stride or
/// neither.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternBreakdown {
    pub window: usize,
    pub windows_counted: u64,
    pub sequential_frac: f64,
    pub stride_frac: f64,
    pub other_frac: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pattern {
    Sequential,
    Stride,
    Other,
}

/// Classifies every sliding window of `window` consecutive faults within
/// each process's page sequence and aggregates over all processes.
///
/// A window is sequential when every consecutive difference is `+1`, stride
/// when every consecutive difference equals one constant other than `+1`,
/// and other otherwise.
pub fn classify_patterns(trace: &Trace, window: usize) -> Result<PatternBreakdown, TraceError> {
    if window < 2 {
        return Err(TraceError::Generator(format!(
            "classification window must be at least 2, got {window}"
        )));
    }
    let mut counts = [0u64; 3];
    for pages in trace.per_process().values() {
        for w in pages.windows(window) {
            let slot = match classify_window(w) {
                Pattern::Sequential => 0,
                Pattern::Stride => 1,
                Pattern::Other => 2,
            };
            counts[slot] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(TraceError::InsufficientEvents { window });
    }
    let frac = |c: u64| c as f64 / total as f64;
    Ok(PatternBreakdown {
        window,
        windows_counted: total,
        sequential_frac: frac(counts[0]),
        stride_frac: frac(counts[1]),
        other_frac: frac(counts[2]),
    })
}

fn classify_window(pages: &[PageId]) -> Pattern {
    let diff = |pair: &[PageId]| pair[1] as i128 - pair[0] as i128;
    let first = diff(&pages[..2]);
    if pages.windows(2).any(|p| diff(p) != first) {
        Pattern::Other
    } else if first == 1 {
        Pattern::Sequential
    } else {
        Pattern::Stride
    }
}
