//! Synthetic workload generators.
//!
//! Every generator records a canonical [`GenSpec`] string in the trace
//! metadata, so `GenSpec::from_str(meta.generator)?.generate()` rebuilds the
//! same trace bit for bit.
//!
//! Spec syntax: `kind:key=value,...`, with mixed traces written as segments
//! joined by `+`:
//!
//! ```text
//! seq:n=100,start=0,pid=1
//! stride:n=100,start=0,k=10,pid=1
//! interleaved:n=400,streams=0/2/1|1000/5/1
//! random:n=100,range=16777216,seed=7,pid=1
//! seq:n=550+stride:n=200,start=100000,k=10+random:n=250,range=16777216,seed=1
//! ```

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PageAccessEvent, Trace, TraceError, TraceMeta};
use crate::{offset_page, PageId, ProcessId, Tick};

/// Name of the pseudo-random generator recorded in trace metadata.
pub const RNG_NAME: &str = "chacha8";

/// One stride stream of an interleaved trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSpec {
    pub start: PageId,
    pub stride: i64,
    pub pid: ProcessId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenSpec {
    Sequential {
        n: usize,
        start: PageId,
        pid: ProcessId,
    },
    Stride {
        n: usize,
        start: PageId,
        stride: i64,
        pid: ProcessId,
    },
    Interleaved {
        n: usize,
        streams: Vec<StreamSpec>,
    },
    Random {
        n: usize,
        range: u64,
        seed: u64,
        pid: ProcessId,
    },
    Mixed(Vec<GenSpec>),
}

impl GenSpec {
    pub fn generate(&self) -> Result<Trace, TraceError> {
        match self {
            GenSpec::Sequential { n, start, pid } => gen_sequential(*n, *start, *pid),
            GenSpec::Stride {
                n,
                start,
                stride,
                pid,
            } => gen_stride(*n, *start, *stride, *pid),
            GenSpec::Interleaved { n, streams } => gen_interleaved(streams, *n),
            GenSpec::Random {
                n,
                range,
                seed,
                pid,
            } => gen_random_for(*n, *range, *seed, *pid),
            GenSpec::Mixed(segments) => gen_mixed(segments),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            GenSpec::Sequential { .. } => "sequential",
            GenSpec::Stride { .. } => "stride",
            GenSpec::Interleaved { .. } => "interleaved",
            GenSpec::Random { .. } => "random",
            GenSpec::Mixed(_) => "mixed",
        }
    }

    /// Parses a spec, filling a missing random `seed` with `default_seed`.
    pub fn parse(text: &str, default_seed: u64) -> Result<Self, TraceError> {
        let segments: Vec<&str> = text.split('+').map(str::trim).collect();
        if segments.len() > 1 {
            let parsed = segments
                .iter()
                .map(|s| parse_single(s, default_seed))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(GenSpec::Mixed(parsed));
        }
        parse_single(segments[0], default_seed)
    }
}

impl FromStr for GenSpec {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GenSpec::parse(s, 0)
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenSpec::Sequential { n, start, pid } => write!(f, "seq:n={n},start={start},pid={pid}"),
            GenSpec::Stride {
                n,
                start,
                stride,
                pid,
            } => write!(f, "stride:n={n},start={start},k={stride},pid={pid}"),
            GenSpec::Interleaved { n, streams } => {
                let list: Vec<String> = streams
                    .iter()
                    .map(|s| format!("{}/{}/{}", s.start, s.stride, s.pid))
                    .collect();
                write!(f, "interleaved:n={n},streams={}", list.join("|"))
            }
            GenSpec::Random {
                n,
                range,
                seed,
                pid,
            } => write!(f, "random:n={n},range={range},seed={seed},pid={pid}"),
            GenSpec::Mixed(segments) => {
                for (i, seg) in segments.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{seg}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_single(text: &str, default_seed: u64) -> Result<GenSpec, TraceError> {
    let bad = |msg: String| TraceError::Generator(format!("`{text}`: {msg}"));
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut params: Vec<(&str, &str)> = Vec::new();
    for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got `{pair}`")))?;
        params.push((k.trim(), v.trim()));
    }
    let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    fn num<T: FromStr>(v: &str) -> Option<T> {
        match v.strip_prefix("0x") {
            Some(hex) => u64::from_str_radix(hex, 16)
                .ok()
                .and_then(|x| x.to_string().parse().ok()),
            None => v.parse().ok(),
        }
    }
    let required = |key: &str| -> Result<&str, TraceError> {
        get(key).ok_or_else(|| bad(format!("missing `{key}`")))
    };
    let field = |key: &str, v: &str| bad(format!("invalid `{key}` value `{v}`"));
    let n: usize = {
        let v = required("n")?;
        num(v).ok_or_else(|| field("n", v))?
    };
    let start: PageId = match get("start") {
        Some(v) => num(v).ok_or_else(|| field("start", v))?,
        None => 0,
    };
    let pid: ProcessId = match get("pid") {
        Some(v) => num(v).ok_or_else(|| field("pid", v))?,
        None => 1,
    };
    let allowed: &[&str] = match kind {
        "seq" | "sequential" => &["n", "start", "pid"],
        "stride" => &["n", "start", "k", "pid"],
        "interleaved" => &["n", "streams"],
        "random" | "rand" => &["n", "range", "seed", "pid"],
        other => return Err(bad(format!("unknown generator `{other}`"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(bad(format!("unknown parameter `{k}`")));
    }
    Ok(match kind {
        "seq" | "sequential" => GenSpec::Sequential { n, start, pid },
        "stride" => {
            let v = required("k")?;
            GenSpec::Stride {
                n,
                start,
                stride: v.parse().map_err(|_| field("k", v))?,
                pid,
            }
        }
        "interleaved" => {
            let v = required("streams")?;
            let streams = v
                .split('|')
                .map(|s| {
                    let parts: Vec<&str> = s.split('/').map(str::trim).collect();
                    match parts.as_slice() {
                        [start, stride, pid] => Some(StreamSpec {
                            start: num(start)?,
                            stride: stride.parse().ok()?,
                            pid: num(pid)?,
                        }),
                        _ => None,
                    }
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| field("streams", v))?;
            GenSpec::Interleaved { n, streams }
        }
        _ => {
            let v = required("range")?;
            let range = num(v).ok_or_else(|| field("range", v))?;
            let seed = match get("seed") {
                Some(v) => num(v).ok_or_else(|| field("seed", v))?,
                None => default_seed,
            };
            GenSpec::Random {
                n,
                range,
                seed,
                pid,
            }
        }
    })
}

fn meta_for(spec: &GenSpec) -> TraceMeta {
    TraceMeta {
        name: spec.name().to_string(),
        generator: Some(spec.to_string()),
        ..TraceMeta::default()
    }
}

fn events_from_pages(
    pid: ProcessId,
    pages: impl IntoIterator<Item = PageId>,
) -> Vec<PageAccessEvent> {
    pages
        .into_iter()
        .enumerate()
        .map(|(i, page)| PageAccessEvent::read(i as Tick, pid, page))
        .collect()
}

fn require_nonempty(n: usize) -> Result<(), TraceError> {
    if n == 0 {
        return Err(TraceError::Generator(
            "event count must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Pages `start, start+1, ..., start+n-1` at ticks `0..n`.
pub fn gen_sequential(n: usize, start: PageId, pid: ProcessId) -> Result<Trace, TraceError> {
    let spec = GenSpec::Sequential { n, start, pid };
    require_nonempty(n)?;
    let pages = stride_pages(n, start, 1)?;
    Trace::new(events_from_pages(pid, pages), meta_for(&spec))
}

/// Pages `start + i*stride` for `i in 0..n`.
pub fn gen_stride(
    n: usize,
    start: PageId,
    stride: i64,
    pid: ProcessId,
) -> Result<Trace, TraceError> {
    let spec = GenSpec::Stride {
        n,
        start,
        stride,
        pid,
    };
    require_nonempty(n)?;
    if stride == 0 {
        return Err(TraceError::Generator("stride must be non-zero".into()));
    }
    let pages = stride_pages(n, start, stride)?;
    Trace::new(events_from_pages(pid, pages), meta_for(&spec))
}

fn stride_pages(n: usize, start: PageId, stride: i64) -> Result<Vec<PageId>, TraceError> {
    (0..n)
        .map(|i| {
            offset_page(start, i as i128 * stride as i128).ok_or_else(|| {
                TraceError::Generator(format!(
                    "page {start} + {i}*{stride} leaves the valid page range"
                ))
            })
        })
        .collect()
}

/// Round-robin interleaving of stride streams, `n_total` events overall.
pub fn gen_interleaved(streams: &[StreamSpec], n_total: usize) -> Result<Trace, TraceError> {
    if streams.is_empty() {
        return Err(TraceError::Generator("empty stream list".into()));
    }
    if streams.len() < 2 {
        return Err(TraceError::Generator(
            "interleaving needs at least two streams".into(),
        ));
    }
    require_nonempty(n_total)?;
    let spec = GenSpec::Interleaved {
        n: n_total,
        streams: streams.to_vec(),
    };
    let mut events = Vec::with_capacity(n_total);
    for tick in 0..n_total {
        let s = &streams[tick % streams.len()];
        let step = (tick / streams.len()) as i128;
        let page = offset_page(s.start, step * s.stride as i128).ok_or_else(|| {
            TraceError::Generator(format!(
                "stream starting at {} leaves the page range",
                s.start
            ))
        })?;
        events.push(PageAccessEvent::read(tick as Tick, s.pid, page));
    }
    Trace::new(events, meta_for(&spec))
}

/// `n` uniform pages in `[0, range)` for process 1.
pub fn gen_random(n: usize, range: u64, seed: u64) -> Result<Trace, TraceError> {
    gen_random_for(n, range, seed, 1)
}

fn gen_random_for(n: usize, range: u64, seed: u64, pid: ProcessId) -> Result<Trace, TraceError> {
    if range == 0 {
        return Err(TraceError::Generator("page range must be non-zero".into()));
    }
    require_nonempty(n)?;
    let range = range.min(crate::MAX_PAGE + 1);
    let spec = GenSpec::Random {
        n,
        range,
        seed,
        pid,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pages: Vec<PageId> = (0..n).map(|_| rng.random_range(0..range)).collect();
    let mut meta = meta_for(&spec);
    meta.seed = Some(seed);
    meta.rng = Some(RNG_NAME.to_string());
    Trace::new(events_from_pages(pid, pages), meta)
}

/// Concatenates generator outputs with continuous ticks; segment start
/// offsets are recorded in the metadata.
pub fn gen_mixed(segments: &[GenSpec]) -> Result<Trace, TraceError> {
    if segments.is_empty() {
        return Err(TraceError::Generator(
            "mixed trace needs at least one segment".into(),
        ));
    }
    if segments.len() == 1 {
        return segments[0].generate();
    }
    if segments.iter().any(|s| matches!(s, GenSpec::Mixed(_))) {
        return Err(TraceError::Generator("mixed segments cannot nest".into()));
    }
    let spec = GenSpec::Mixed(segments.to_vec());
    let mut events = Vec::new();
    let mut boundaries = Vec::new();
    let mut seeds = Vec::new();
    for seg in segments {
        if !events.is_empty() {
            boundaries.push(events.len());
        }
        let part = seg.generate()?;
        if let Some(seed) = part.meta().seed {
            seeds.push(seed);
        }
        let offset = events.len() as Tick;
        events.extend(part.events().iter().map(|e| PageAccessEvent {
            tick: e.tick + offset,
            ..*e
        }));
    }
    let mut meta = meta_for(&spec);
    meta.segments = boundaries;
    if let Some(&first) = seeds.first() {
        meta.seed = Some(first);
        meta.rng = Some(RNG_NAME.to_string());
    }
    Trace::new(events, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, write_trace};

    fn pages(t: &Trace) -> Vec<PageId> {
        t.pages().collect()
    }

    #[test]
    fn sequential_pages() {
        assert_eq!(
            pages(&gen_sequential(4, 10, 1).unwrap()),
            vec![10, 11, 12, 13]
        );
        assert_eq!(pages(&gen_sequential(1, 0, 1).unwrap()), vec![0]);
        let ticks: Vec<Tick> = gen_sequential(4, 10, 1)
            .unwrap()
            .events()
            .iter()
            .map(|e| e.tick)
            .collect();
        assert_eq!(ticks, vec![0, 1, 2, 3]);
    }

    #[test]
    fn stride_pages_including_negative() {
        assert_eq!(pages(&gen_stride(3, 0, 10, 1).unwrap()), vec![0, 10, 20]);
        assert_eq!(pages(&gen_stride(3, 20, -3, 1).unwrap()), vec![20, 17, 14]);
        assert_eq!(
            pages(&gen_stride(2, 5, 1, 1).unwrap()),
            pages(&gen_sequential(2, 5, 1).unwrap())
        );
    }

    #[test]
    fn stride_below_zero_is_an_error() {
        assert!(gen_stride(5, 2, -1, 1).is_err());
        assert!(gen_stride(3, crate::MAX_PAGE - 1, 1, 1).is_err());
        assert!(gen_stride(3, 0, 0, 1).is_err());
    }

    #[test]
    fn interleaving_is_round_robin() {
        let streams = [
            StreamSpec {
                start: 0,
                stride: 2,
                pid: 1,
            },
            StreamSpec {
                start: 1000,
                stride: 5,
                pid: 1,
            },
        ];
        let t = gen_interleaved(&streams, 4).unwrap();
        assert_eq!(pages(&t), vec![0, 1000, 2, 1005]);

        let split = [
            StreamSpec {
                start: 0,
                stride: 2,
                pid: 1,
            },
            StreamSpec {
                start: 1000,
                stride: 5,
                pid: 2,
            },
        ];
        let per = gen_interleaved(&split, 8).unwrap().per_process();
        assert_eq!(per[&1], vec![0, 2, 4, 6]);
        assert_eq!(per[&2], vec![1000, 1005, 1010, 1015]);
        assert!(gen_interleaved(&[], 4).is_err());
    }

    #[test]
    fn random_is_deterministic() {
        let a = gen_random(10, 1 << 20, 7).unwrap();
        let b = gen_random(10, 1 << 20, 7).unwrap();
        let mut wa = Vec::new();
        let mut wb = Vec::new();
        write_trace(&a, &mut wa).unwrap();
        write_trace(&b, &mut wb).unwrap();
        assert_eq!(wa, wb);
        assert_eq!(a.meta().rng.as_deref(), Some(RNG_NAME));
        assert_eq!(pages(&gen_random(1, 1, 0).unwrap()), vec![0]);
        assert!(gen_random(1, 0, 0).is_err());
        assert!(pages(&a).iter().all(|&p| p < 1 << 20));
    }

    #[test]
    fn mixed_concatenates_with_boundaries() {
        let segs = vec![
            GenSpec::Sequential {
                n: 100,
                start: 0,
                pid: 1,
            },
            GenSpec::Stride {
                n: 100,
                start: 5000,
                stride: 10,
                pid: 1,
            },
            GenSpec::Random {
                n: 100,
                range: 1 << 24,
                seed: 3,
                pid: 1,
            },
        ];
        let t = gen_mixed(&segs).unwrap();
        assert_eq!(t.len(), 300);
        assert_eq!(t.meta().segments, vec![100, 200]);
        assert!(t.events().windows(2).all(|w| w[1].tick == w[0].tick + 1));

        let single = gen_mixed(&segs[..1]).unwrap();
        assert_eq!(single, gen_sequential(100, 0, 1).unwrap());
    }

    #[test]
    fn spec_strings_round_trip_and_regenerate() {
        let text = "seq:n=5,start=3,pid=2+stride:n=4,start=100,k=-3,pid=2+random:n=6,range=64,seed=11,pid=2";
        let spec: GenSpec = text.parse().unwrap();
        assert_eq!(spec.to_string(), text);
        let t = spec.generate().unwrap();
        let again: GenSpec = t.meta().generator.as_deref().unwrap().parse().unwrap();
        assert_eq!(again.generate().unwrap(), t);

        let inter: GenSpec = "interleaved:n=6,streams=0/2/1|1000/5/1".parse().unwrap();
        assert_eq!(inter.to_string(), "interleaved:n=6,streams=0/2/1|1000/5/1");
        assert_eq!(
            GenSpec::parse("random:n=3,range=8", 42)
                .unwrap()
                .to_string(),
            "random:n=3,range=8,seed=42,pid=1"
        );
    }

    #[test]
    fn bad_specs_are_rejected() {
        for bad in [
            "",
            "seq",
            "seq:n=x",
            "zigzag:n=3",
            "stride:n=3",
            "random:n=3",
            "seq:n=3,bogus=1",
        ] {
            assert!(bad.parse::<GenSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn write_then_parse_preserves_generated_traces() {
        let spec: GenSpec = "seq:n=20+stride:n=20,start=900,k=7+random:n=20,range=4096,seed=5"
            .parse()
            .unwrap();
        let t = spec.generate().unwrap();
        let mut buf = Vec::new();
        write_trace(&t, &mut buf).unwrap();
        assert_eq!(parse_trace(buf.as_slice()).unwrap(), t);
    }
}
