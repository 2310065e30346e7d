use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ProcessId;

/// Exact histogram of non-negative samples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: BTreeMap<u64, u64>,
    n: u64,
    sum: u128,
}

impl Histogram {
    pub fn record(&mut self, value: u64) {
        *self.counts.entry(value).or_default() += 1;
        self.n += 1;
        self.sum += u128::from(value);
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sum(&self) -> u128 {
        self.sum
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum as f64 / self.n as f64
        }
    }

    /// Nearest-rank percentile with the rank given in per-mille
    /// (500 = median). Zero for an empty histogram.
    pub fn percentile_permille(&self, permille: u64) -> u64 {
        if self.n == 0 {
            return 0;
        }
        let rank = (self.n * permille.min(1000)).div_ceil(1000).max(1);
        let mut seen = 0;
        for (&value, &count) in &self.counts {
            seen += count;
            if seen >= rank {
                return value;
            }
        }
        unreachable!("rank never exceeds the sample count")
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&v, &c)| (v, c))
    }
}

/// Raw event counts, kept for the whole run and for each process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub total_requests: u64,
    pub resident_hits: u64,
    /// Includes late hits.
    pub prefetch_hits: u64,
    pub late_prefetch_hits: u64,
    pub misses: u64,
    /// Prefetch-cache insertions.
    pub pages_prefetched: u64,
    /// Prefetched entries evicted or left over without ever being used.
    pub pollution: u64,
}

impl Counters {
    pub fn accuracy(&self) -> f64 {
        ratio(self.prefetch_hits, self.pages_prefetched)
    }

    pub fn coverage(&self) -> f64 {
        ratio(self.prefetch_hits, self.total_requests)
    }

    /// Whether every request was classified exactly once.
    pub fn is_conserved(&self) -> bool {
        self.resident_hits + self.prefetch_hits + self.misses == self.total_requests
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessReport {
    pub process_id: ProcessId,
    #[serde(flatten)]
    pub counters: Counters,
    pub accuracy: f64,
    pub coverage: f64,
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub prefetcher: String,
    pub counters: Counters,
    /// Ticks from insertion to first hit, one sample per prefetch hit.
    pub timeliness: Histogram,
    /// Per-access latency in nanoseconds.
    pub latency: Histogram,
    pub per_process: Vec<ProcessReport>,
    /// Largest number of history reads of one trend detection, when the
    /// prefetcher detects trends.
    pub max_trend_scan: Option<usize>,
}

/// Column order of [`FlatReport`] in CSV output. Stable across releases.
pub const CSV_COLUMNS: [&str; 17] = [
    "prefetcher",
    "total_requests",
    "resident_hits",
    "prefetch_hits",
    "late_prefetch_hits",
    "misses",
    "pages_prefetched",
    "pollution",
    "accuracy",
    "coverage",
    "timeliness_p50",
    "timeliness_p99",
    "latency_mean_ns",
    "latency_p50_ns",
    "latency_p90_ns",
    "latency_p99_ns",
    "latency_p999_ns",
];

/// One-row summary of a [`SimReport`]; field order is [`CSV_COLUMNS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatReport {
    pub prefetcher: String,
    pub total_requests: u64,
    pub resident_hits: u64,
    pub prefetch_hits: u64,
    pub late_prefetch_hits: u64,
    pub misses: u64,
    pub pages_prefetched: u64,
    pub pollution: u64,
    pub accuracy: f64,
    pub coverage: f64,
    pub timeliness_p50: u64,
    pub timeliness_p99: u64,
    pub latency_mean_ns: f64,
    pub latency_p50_ns: u64,
    pub latency_p90_ns: u64,
    pub latency_p99_ns: u64,
    pub latency_p999_ns: u64,
}

impl SimReport {
    pub fn accuracy(&self) -> f64 {
        self.counters.accuracy()
    }

    pub fn coverage(&self) -> f64 {
        self.counters.coverage()
    }

    pub fn latency_p50(&self) -> u64 {
        self.latency.percentile_permille(500)
    }

    pub fn flat(&self) -> FlatReport {
        let c = &self.counters;
        FlatReport {
            prefetcher: self.prefetcher.clone(),
            total_requests: c.total_requests,
            resident_hits: c.resident_hits,
            prefetch_hits: c.prefetch_hits,
            late_prefetch_hits: c.late_prefetch_hits,
            misses: c.misses,
            pages_prefetched: c.pages_prefetched,
            pollution: c.pollution,
            accuracy: c.accuracy(),
            coverage: c.coverage(),
            timeliness_p50: self.timeliness.percentile_permille(500),
            timeliness_p99: self.timeliness.percentile_permille(990),
            latency_mean_ns: self.latency.mean(),
            latency_p50_ns: self.latency.percentile_permille(500),
            latency_p90_ns: self.latency.percentile_permille(900),
            latency_p99_ns: self.latency.percentile_permille(990),
            latency_p999_ns: self.latency.percentile_permille(999),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.flat()).expect("flat report serializes")
    }

    /// Header line plus one data row.
    pub fn to_csv(&self) -> String {
        write_csv(std::slice::from_ref(self))
    }
}

/// Header plus one row per report, in the given order.
pub fn write_csv(reports: &[SimReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if reports.is_empty() {
        w.write_record(CSV_COLUMNS).expect("in-memory write");
    }
    for r in reports {
        w.serialize(r.flat()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sorted-vector oracle for nearest-rank percentiles.
    fn oracle(samples: &[u64], permille: u64) -> u64 {
        let mut v = samples.to_vec();
        v.sort_unstable();
        let rank = ((v.len() as f64) * permille as f64 / 1000.0)
            .ceil()
            .max(1.0) as usize;
        v[rank - 1]
    }

    #[test]
    fn percentiles_match_sorted_oracle() {
        let samples: Vec<u64> = (0..1013u64).map(|i| (i * 7919) % 401).collect();
        let mut h = Histogram::default();
        samples.iter().for_each(|&s| h.record(s));
        for pm in [1, 500, 900, 990, 999, 1000] {
            assert_eq!(h.percentile_permille(pm), oracle(&samples, pm), "{pm}");
        }
        assert_eq!(h.len(), 1013);
    }

    #[test]
    fn empty_histogram_is_zero() {
        let h = Histogram::default();
        assert_eq!(h.percentile_permille(500), 0);
        assert_eq!(h.mean(), 0.0);
    }

    #[test]
    fn ratios_guard_against_zero() {
        let c = Counters::default();
        assert_eq!((c.accuracy(), c.coverage()), (0.0, 0.0));
        assert!(c.is_conserved());
    }

    #[test]
    fn csv_header_is_frozen() {
        let report = SimReport {
            prefetcher: "none".into(),
            counters: Counters::default(),
            timeliness: Histogram::default(),
            latency: Histogram::default(),
            per_process: Vec::new(),
            max_trend_scan: None,
        };
        let csv = report.to_csv();
        assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(write_csv(&[]).trim_end(), CSV_COLUMNS.join(","));
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        let mut expected: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
        expected.sort();
        let mut keys_sorted = keys.clone();
        keys_sorted.sort();
        assert_eq!(keys_sorted, expected);
    }
}
