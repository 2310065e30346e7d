//! Replays one trace against several prefetchers and renders the results.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::history::DEFAULT_HISTORY_SIZE;
use crate::memsim::{
    simulate, simulate_latency_aware, EvictionMode, FlatReport, LatencyModel, SimConfig, SimError,
    SimReport, CSV_COLUMNS,
};
use crate::prefetch::{build_prefetcher, PrefetchParams, PrefetcherKind};
use crate::trace::{
    classify_patterns, read_trace_file, GenSpec, PatternBreakdown, Trace, TraceError,
};
use crate::Tick;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("simulation of `{prefetcher}` failed")]
    Simulation {
        prefetcher: PrefetcherKind,
        #[source]
        source: SimError,
    },
}

impl ExperimentError {
    /// Bad input or configuration, as opposed to a failed simulation.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ExperimentError::Simulation { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSource {
    File(PathBuf),
    Gen(String),
}

impl TraceSource {
    /// Loads or generates the trace. `seed` fills in random generators
    /// that do not name their own.
    pub fn load(&self, seed: u64) -> Result<Trace, TraceError> {
        match self {
            TraceSource::File(path) => read_trace_file(path),
            TraceSource::Gen(spec) => GenSpec::parse(spec, seed)?.generate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            _ => Err(format!(
                "invalid format `{s}` (expected json, csv or table)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: TraceSource,
    pub prefetchers: Vec<PrefetcherKind>,
    /// Defaults to half the working set.
    pub resident_capacity: Option<usize>,
    /// `None` leaves the prefetch cache unbounded.
    pub prefetch_capacity: Option<usize>,
    pub history_size: usize,
    pub params: PrefetchParams,
    /// Defaults to eager for leap and lazy for the baselines.
    pub eviction: Option<EvictionMode>,
    pub latency: LatencyModel,
    pub arrival_delay: Tick,
    pub warmup_events: usize,
    pub format: OutputFormat,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(source: TraceSource, prefetchers: Vec<PrefetcherKind>) -> Self {
        Self {
            source,
            prefetchers,
            resident_capacity: None,
            prefetch_capacity: None,
            history_size: DEFAULT_HISTORY_SIZE,
            params: PrefetchParams::default(),
            eviction: None,
            latency: LatencyModel::default(),
            arrival_delay: 0,
            warmup_events: 0,
            format: OutputFormat::Json,
            seed: 0,
        }
    }

    pub fn eviction_for(&self, kind: PrefetcherKind) -> EvictionMode {
        self.eviction.unwrap_or(match kind {
            PrefetcherKind::Leap => EvictionMode::Eager,
            _ => EvictionMode::Lazy,
        })
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: &str| Err(ExperimentError::InvalidConfig(msg.to_string()));
        if self.prefetchers.is_empty() {
            return bad("at least one prefetcher is required");
        }
        if self.resident_capacity == Some(0) {
            return bad("resident capacity must be at least 1 page");
        }
        if self.prefetch_capacity == Some(0) {
            return bad("prefetch capacity must be at least 1 page");
        }
        if self.history_size == 0 {
            return bad("history size must be at least 1");
        }
        if self.params.n_split == 0 {
            return bad("n_split must be at least 1");
        }
        if self.params.pw_max == 0 {
            return bad("maximum prefetch window must be at least 1");
        }
        if self.params.next_n == 0 {
            return bad("next-n-line N must be at least 1");
        }
        Ok(())
    }
}

/// Trace facts recorded alongside the reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub name: String,
    pub generator: Option<String>,
    pub events: usize,
    pub working_set: usize,
}

/// Configuration after defaults have been filled in from the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub source: TraceSource,
    pub trace: TraceSummary,
    pub prefetchers: Vec<PrefetcherKind>,
    pub eviction: Vec<EvictionMode>,
    pub resident_capacity: usize,
    pub prefetch_capacity: Option<usize>,
    pub history_size: usize,
    pub n_split: usize,
    pub pw_max: usize,
    pub next_n: usize,
    pub latency: LatencyModel,
    pub arrival_delay: Tick,
    pub warmup_events: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ResolvedConfig,
    /// One report per prefetcher, in configuration order.
    pub reports: Vec<SimReport>,
}

/// How sweep entries are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// One simulation per worker thread; falls back to sequential when the
    /// `parallel` feature is disabled.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    config.validate()?;
    let trace = config.source.load(config.seed)?;
    run_on_trace(config, &trace, Execution::default())
}

/// Runs every configured prefetcher over an already loaded trace.
pub fn run_on_trace(
    config: &ExperimentConfig,
    trace: &Trace,
    execution: Execution,
) -> Result<ExperimentResult, ExperimentError> {
    config.validate()?;
    let resolved = resolve(config, trace);
    let run = |&kind: &PrefetcherKind| run_one(config, &resolved, trace, kind);
    let results: Vec<Result<SimReport, ExperimentError>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            config.prefetchers.par_iter().map(run).collect()
        }
        _ => config.prefetchers.iter().map(run).collect(),
    };
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResult {
        config: resolved,
        reports,
    })
}

fn resolve(config: &ExperimentConfig, trace: &Trace) -> ResolvedConfig {
    let meta = trace.meta();
    ResolvedConfig {
        source: config.source.clone(),
        trace: TraceSummary {
            name: meta.name.clone(),
            generator: meta.generator.clone(),
            events: trace.len(),
            working_set: trace.working_set(),
        },
        prefetchers: config.prefetchers.clone(),
        eviction: config
            .prefetchers
            .iter()
            .map(|&k| config.eviction_for(k))
            .collect(),
        resident_capacity: config
            .resident_capacity
            .unwrap_or_else(|| SimConfig::for_trace(trace).resident_capacity),
        prefetch_capacity: config.prefetch_capacity,
        history_size: config.history_size,
        n_split: config.params.n_split,
        pw_max: config.params.pw_max,
        next_n: config.params.next_n,
        latency: config.latency,
        arrival_delay: config.arrival_delay,
        warmup_events: config.warmup_events,
        seed: config.seed,
    }
}

fn run_one(
    config: &ExperimentConfig,
    resolved: &ResolvedConfig,
    trace: &Trace,
    kind: PrefetcherKind,
) -> Result<SimReport, ExperimentError> {
    let sim_config = SimConfig {
        resident_capacity: resolved.resident_capacity,
        prefetch_capacity: resolved.prefetch_capacity,
        eviction: config.eviction_for(kind),
        latency: resolved.latency,
        history_size: resolved.history_size,
        arrival_delay: 0,
        warmup_events: resolved.warmup_events,
    };
    let prefetcher = build_prefetcher(kind, &config.params);
    let result = if resolved.arrival_delay > 0 {
        simulate_latency_aware(trace, prefetcher, &sim_config, resolved.arrival_delay)
    } else {
        simulate(trace, prefetcher, &sim_config)
    };
    result.map_err(|source| ExperimentError::Simulation {
        prefetcher: kind,
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessRow {
    pub prefetcher: String,
    pub process_id: u32,
    pub total_requests: u64,
    pub resident_hits: u64,
    pub prefetch_hits: u64,
    pub misses: u64,
    pub pages_prefetched: u64,
    pub pollution: u64,
    pub accuracy: f64,
    pub coverage: f64,
}

/// Serialized experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ResolvedConfig,
    pub reports: Vec<FlatReport>,
    pub per_process: Vec<ProcessRow>,
}

impl ExperimentResult {
    pub fn output(&self) -> ExperimentOutput {
        let per_process = self
            .reports
            .iter()
            .flat_map(|r| {
                r.per_process.iter().map(|p| ProcessRow {
                    prefetcher: r.prefetcher.clone(),
                    process_id: p.process_id,
                    total_requests: p.counters.total_requests,
                    resident_hits: p.counters.resident_hits,
                    prefetch_hits: p.counters.prefetch_hits,
                    misses: p.counters.misses,
                    pages_prefetched: p.counters.pages_prefetched,
                    pollution: p.counters.pollution,
                    accuracy: p.accuracy,
                    coverage: p.coverage,
                })
            })
            .collect();
        ExperimentOutput {
            config: self.config.clone(),
            reports: self.reports.iter().map(SimReport::flat).collect(),
            per_process,
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        let out = self.output();
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&out).expect("output serializes");
                s.push('\n');
                s
            }
            OutputFormat::Csv => {
                let mut s = config_header(&out.config);
                s.push_str(&crate::memsim::write_csv(&self.reports));
                s
            }
            OutputFormat::Table => {
                let mut s = config_header(&out.config);
                s.push_str(&compare(&out.reports));
                s
            }
        }
    }
}

/// `# key: value` lines, one per resolved setting, in key order.
fn config_header(config: &ResolvedConfig) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let mut s = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let _ = writeln!(s, "# {k}: {v}");
        }
    }
    s
}

/// Aligned comparison table, one row per report in the given order.
pub fn compare(reports: &[FlatReport]) -> String {
    const HEADER: [&str; 10] = [
        "prefetcher",
        "accuracy",
        "coverage",
        "pollution",
        "cache_adds",
        "misses",
        "p50_ns",
        "p99_ns",
        "timely_p50",
        "timely_p99",
    ];
    let rows: Vec<[String; 10]> = reports
        .iter()
        .map(|r| {
            [
                r.prefetcher.clone(),
                format!("{:.4}", r.accuracy),
                format!("{:.4}", r.coverage),
                r.pollution.to_string(),
                r.pages_prefetched.to_string(),
                r.misses.to_string(),
                r.latency_p50_ns.to_string(),
                r.latency_p99_ns.to_string(),
                r.timeliness_p50.to_string(),
                r.timeliness_p99.to_string(),
            ]
        })
        .collect();
    table(&HEADER, &rows)
}

/// Runs the pattern classifier for each window length.
pub fn classify(trace: &Trace, windows: &[usize]) -> Result<Vec<PatternBreakdown>, TraceError> {
    windows
        .iter()
        .map(|&x| classify_patterns(trace, x))
        .collect()
}

/// Default classification window lengths.
pub const DEFAULT_CLASSIFY_WINDOWS: [usize; 3] = [2, 4, 8];

pub fn render_classification(rows: &[PatternBreakdown], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        OutputFormat::Table => {
            const HEADER: [&str; 5] = ["window", "windows", "sequential", "stride", "other"];
            let body: Vec<[String; 5]> = rows
                .iter()
                .map(|r| {
                    [
                        r.window.to_string(),
                        r.windows_counted.to_string(),
                        format!("{:.4}", r.sequential_frac),
                        format!("{:.4}", r.stride_frac),
                        format!("{:.4}", r.other_frac),
                    ]
                })
                .collect();
            table(&HEADER, &body)
        }
    }
}

fn table<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths = header.map(str::len);
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut s = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    s
}

/// CSV header of [`ExperimentResult::render`] in CSV mode.
pub fn csv_columns() -> &'static [&'static str] {
    &CSV_COLUMNS
}
