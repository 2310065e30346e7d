//! Majority-vote trend detection over an [`AccessHistory`].
//!
//! A delta is the trend of a window of size `w` when it fills at least
//! `w/2 + 1` slots. Detection starts from a small window anchored at the
//! newest entry and doubles it until a majority is found or the window
//! covers everything stored.

use crate::history::AccessHistory;
use crate::Delta;

/// Boyer-Moore voting state. Two words, independent of window length.
#[derive(Debug, Clone, Copy)]
struct Vote<T> {
    candidate: Option<T>,
    weight: usize,
}

impl<T: PartialEq + Copy> Vote<T> {
    fn new() -> Self {
        Self {
            candidate: None,
            weight: 0,
        }
    }

    fn push(&mut self, item: T) {
        match self.candidate {
            _ if self.weight == 0 => {
                self.candidate = Some(item);
                self.weight = 1;
            }
            Some(c) if c == item => self.weight += 1,
            _ => self.weight -= 1,
        }
    }
}

/// Returns the element occupying at least `len/2 + 1` positions of
/// `window`, if any. Two passes (vote, then verify); constant extra memory.
pub fn majority<I>(window: I) -> Option<I::Item>
where
    I: IntoIterator + Clone,
    I::Item: PartialEq + Copy,
{
    majority_counted(window).0
}

/// [`majority`] plus the number of element reads it performed (at most
/// twice the window length).
pub fn majority_counted<I>(window: I) -> (Option<I::Item>, usize)
where
    I: IntoIterator + Clone,
    I::Item: PartialEq + Copy,
{
    let mut vote = Vote::new();
    let mut len = 0;
    for item in window.clone() {
        vote.push(item);
        len += 1;
    }
    let Some(candidate) = vote.candidate else {
        return (None, len);
    };
    let hits = window.into_iter().filter(|&x| x == candidate).count();
    let found = (hits > len / 2).then_some(candidate);
    (found, 2 * len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrendResult {
    pub trend: Option<Delta>,
    /// Size of the window the trend was found in; 0 when none was found.
    pub window_used: usize,
    pub elements_scanned: usize,
}

/// Looks for a majority delta in windows of `capacity / n_split`,
/// doubling each time, all anchored at the newest entry and clamped to the
/// number of stored deltas.
///
/// The vote over a larger window continues from the vote over the smaller
/// one (windows are nested), so candidate selection reads each entry once;
/// each window is verified with a fresh count. Total reads stay below
/// `4 * capacity`.
pub fn find_trend(history: &AccessHistory, n_split: usize) -> TrendResult {
    let stored = history.len();
    let mut result = TrendResult::default();
    if stored == 0 {
        return result;
    }
    let mut w = (history.capacity() / n_split.max(1)).max(1);
    let mut vote = Vote::new();
    let mut voted = 0;
    loop {
        let size = w.min(stored);
        for d in history.recent_range(voted, size) {
            vote.push(d);
            result.elements_scanned += 1;
        }
        voted = size;
        if let Some(candidate) = vote.candidate {
            let hits = history.recent(size).filter(|&d| d == candidate).count();
            result.elements_scanned += size;
            if hits > size / 2 {
                result.trend = Some(candidate);
                result.window_used = size;
                return result;
            }
        }
        if size >= stored {
            return result;
        }
        w = w.saturating_mul(2);
    }
}
