use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trendfetch_core::experiment::{run_on_trace, Execution, ExperimentConfig, TraceSource};
use trendfetch_core::history::AccessHistory;
use trendfetch_core::prefetch::PrefetcherKind;
use trendfetch_core::trace::GenSpec;
use trendfetch_core::trend::find_trend;

const MIXED: &str =
    "seq:n=27500+stride:n=10000,start=100000000,k=10+random:n=12500,range=16777216,seed=1";

fn sweep(c: &mut Criterion) {
    let trace = GenSpec::parse(MIXED, 1).unwrap().generate().unwrap();
    let config =
        ExperimentConfig::new(TraceSource::Gen(MIXED.into()), PrefetcherKind::ALL.to_vec());
    let mut group = c.benchmark_group("sweep_all_prefetchers");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| run_on_trace(black_box(&config), &trace, exec).unwrap())
        });
    }
    group.finish();
}

fn trend(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_trend");
    for h_size in [8usize, 32, 128] {
        // Alternating deltas defeat every window, forcing the longest scan.
        let mut h = AccessHistory::new(h_size);
        let mut page = 1u64 << 40;
        for i in 0..h_size as u64 {
            page += if i % 2 == 0 { 3 } else { 7 };
            h.record(page);
        }
        group.bench_with_input(BenchmarkId::from_parameter(h_size), &h, |b, h| {
            b.iter(|| find_trend(black_box(h), 2))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, trend);
criterion_main!(benches);
