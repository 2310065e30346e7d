//! Line-oriented trace format.
//!
//! ```text
//! # trace: stride-10
//! # generator: stride:n=3,start=0,k=10,pid=1
//! 0,1,0,r
//! 1,1,10,r
//! 2,1,0x14,w
//! ```
//!
//! Each event line is `tick,process_id,page_id[,kind]`; numbers are decimal
//! or `0x`-prefixed hex and `kind` is `r`/`read`/`w`/`write` (default read).
//! `#` lines are comments, except `# key: value` headers for the known
//! metadata keys (`trace`, `generator`, `seed`, `rng`, `segments`).

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{AccessKind, PageAccessEvent, Trace, TraceError, TraceMeta};
use crate::MAX_PAGE;

pub fn parse_trace<R: Read>(reader: R) -> Result<Trace, TraceError> {
    let reader = BufReader::new(reader);
    let mut events = Vec::new();
    let mut meta = TraceMeta::default();
    let mut previous_tick = None;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| TraceError::Io(e.to_string()))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            apply_header(&mut meta, comment, lineno)?;
            continue;
        }
        let ev = parse_event(text, lineno)?;
        if let Some(prev) = previous_tick {
            if ev.tick < prev {
                return Err(TraceError::TickRegression {
                    line: lineno,
                    tick: ev.tick,
                    previous: prev,
                });
            }
        }
        previous_tick = Some(ev.tick);
        events.push(ev);
    }
    Trace::new(events, meta)
}

pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| TraceError::Io(format!("{}: {e}", path.display())))?;
    parse_trace(file)
}

/// Writes the trace with its metadata header; [`parse_trace`] reads it back
/// to an identical [`Trace`].
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    let meta = trace.meta();
    writeln!(out, "# trace: {}", meta.name)?;
    if let Some(generator) = &meta.generator {
        writeln!(out, "# generator: {generator}")?;
    }
    if let Some(seed) = meta.seed {
        writeln!(out, "# seed: {seed}")?;
    }
    if let Some(rng) = &meta.rng {
        writeln!(out, "# rng: {rng}")?;
    }
    if !meta.segments.is_empty() {
        let joined: Vec<String> = meta.segments.iter().map(|s| s.to_string()).collect();
        writeln!(out, "# segments: {}", joined.join(","))?;
    }
    for ev in trace.events() {
        let kind = match ev.kind {
            AccessKind::Read => 'r',
            AccessKind::Write => 'w',
        };
        writeln!(out, "{},{},{},{}", ev.tick, ev.process_id, ev.page_id, kind)?;
    }
    Ok(())
}

fn apply_header(meta: &mut TraceMeta, comment: &str, line: usize) -> Result<(), TraceError> {
    let Some((key, value)) = comment.trim_start().split_once(':') else {
        return Ok(());
    };
    let value = value.trim();
    let bad = |reason: &str| TraceError::Malformed {
        line,
        content: format!("#{comment}"),
        reason: reason.to_string(),
    };
    match key.trim() {
        "trace" => meta.name = value.to_string(),
        "generator" => meta.generator = Some(value.to_string()),
        "seed" => meta.seed = Some(value.parse().map_err(|_| bad("bad seed"))?),
        "rng" => meta.rng = Some(value.to_string()),
        "segments" => {
            meta.segments = value
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|_| bad("bad segment offset")))
                .collect::<Result<_, _>>()?;
        }
        _ => {}
    }
    Ok(())
}

fn parse_event(text: &str, line: usize) -> Result<PageAccessEvent, TraceError> {
    let malformed = |reason: &str| TraceError::Malformed {
        line,
        content: text.to_string(),
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(malformed("expected tick,process_id,page_id[,kind]"));
    }
    let tick = parse_number(fields[0]).ok_or_else(|| malformed("bad tick"))?;
    let pid = parse_number(fields[1]).ok_or_else(|| malformed("bad process id"))?;
    let page = parse_number(fields[2]).ok_or_else(|| malformed("bad page id"))?;
    let kind = match fields.get(3).map(|k| k.to_ascii_lowercase()) {
        None => AccessKind::Read,
        Some(k) if k == "r" || k == "read" => AccessKind::Read,
        Some(k) if k == "w" || k == "write" => AccessKind::Write,
        Some(_) => return Err(malformed("kind must be r|read|w|write")),
    };
    let tick = u64::try_from(tick).map_err(|_| malformed("tick exceeds 64 bits"))?;
    let process_id = u32::try_from(pid).map_err(|_| malformed("process id exceeds 32 bits"))?;
    if page > MAX_PAGE as u128 {
        return Err(TraceError::PageOutOfRange { line, page });
    }
    Ok(PageAccessEvent {
        tick,
        process_id,
        page_id: page as u64,
        kind,
    })
}

fn parse_number(field: &str) -> Option<u128> {
    match field
        .strip_prefix("0x")
        .or_else(|| field.strip_prefix("0X"))
    {
        Some(hex) => u128::from_str_radix(hex, 16).ok(),
        None => field.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_events() {
        let t = parse_trace("0,1,100\n1,1,101".as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.per_process().keys().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(t.events()[1].page_id, 101);
    }

    #[test]
    fn skips_comments_and_blank_lines_and_reads_hex() {
        let t = parse_trace("# c\n\n5,2,0x48".as_bytes()).unwrap();
        assert_eq!(t.events(), &[PageAccessEvent::read(5, 2, 72)]);
    }

    #[test]
    fn rejects_tick_regression_with_line_number() {
        let err = parse_trace("3,1,9\n2,1,10".as_bytes()).unwrap_err();
        assert_eq!(
            err,
            TraceError::TickRegression {
                line: 2,
                tick: 2,
                previous: 3
            }
        );
    }

    #[test]
    fn reports_malformed_line_content() {
        let err = parse_trace("0,1,5\n1,x,6\n".as_bytes()).unwrap_err();
        match err {
            TraceError::Malformed { line, content, .. } => {
                assert_eq!(line, 2);
                assert_eq!(content, "1,x,6");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_trace("1,2".as_bytes()),
            Err(TraceError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("1,2,3,q".as_bytes()),
            Err(TraceError::Malformed { .. })
        ));
    }

    #[test]
    fn rejects_pages_beyond_63_bits() {
        let err = parse_trace("0,1,0x8000000000000000".as_bytes()).unwrap_err();
        assert!(matches!(err, TraceError::PageOutOfRange { line: 1, .. }));
        assert!(parse_trace("0,1,0x7fffffffffffffff".as_bytes()).is_ok());
    }

    #[test]
    fn header_round_trip() {
        let meta = TraceMeta {
            name: "mix".into(),
            generator: Some("seq:n=2,start=0,pid=1".into()),
            seed: Some(9),
            rng: Some("chacha8".into()),
            segments: vec![1],
        };
        let t = Trace::new(
            vec![
                PageAccessEvent::read(0, 1, 0),
                PageAccessEvent {
                    tick: 1,
                    process_id: 1,
                    page_id: 1,
                    kind: AccessKind::Write,
                },
            ],
            meta,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trace(&t, &mut buf).unwrap();
        assert_eq!(parse_trace(buf.as_slice()).unwrap(), t);
    }

    mod props {
        use super::*;
        use crate::trace::{classify_patterns, GenSpec, StreamSpec};
        use proptest::prelude::*;

        fn arb_segment() -> impl Strategy<Value = GenSpec> {
            prop_oneof![
                (1usize..200, 0u64..1 << 40, 1u32..4)
                    .prop_map(|(n, start, pid)| GenSpec::Sequential { n, start, pid }),
                (1usize..200, 1u64 << 20..1 << 40, -500i64..500, 1u32..4)
                    .prop_filter("non-zero stride", |s| s.2 != 0)
                    .prop_map(|(n, start, stride, pid)| GenSpec::Stride {
                        n,
                        start,
                        stride,
                        pid
                    }),
                (
                    2usize..200,
                    0u64..1 << 30,
                    1u64..1 << 30,
                    any::<u64>(),
                    1u32..4
                )
                    .prop_map(|(n, _, range, seed, pid)| GenSpec::Random {
                        n,
                        range,
                        seed,
                        pid
                    }),
                (2usize..200, 1i64..50, 1i64..50).prop_map(|(n, a, b)| GenSpec::Interleaved {
                    n,
                    streams: vec![
                        StreamSpec {
                            start: 1 << 30,
                            stride: a,
                            pid: 1
                        },
                        StreamSpec {
                            start: 1 << 31,
                            stride: b,
                            pid: 2
                        },
                    ],
                }),
            ]
        }

        fn arb_spec() -> impl Strategy<Value = GenSpec> {
            proptest::collection::vec(arb_segment(), 1..4).prop_map(|mut segs| {
                if segs.len() == 1 {
                    segs.pop().unwrap()
                } else {
                    GenSpec::Mixed(segs)
                }
            })
        }

        proptest! {
            #[test]
            fn written_traces_parse_back(spec in arb_spec()) {
                let t = spec.generate().unwrap();
                let mut buf = Vec::new();
                write_trace(&t, &mut buf).unwrap();
                prop_assert_eq!(parse_trace(buf.as_slice()).unwrap(), t);
            }

            #[test]
            fn metadata_regenerates_the_trace(spec in arb_spec()) {
                let t = spec.generate().unwrap();
                let recorded = t.meta().generator.clone().unwrap();
                let again = GenSpec::parse(&recorded, 0).unwrap().generate().unwrap();
                prop_assert_eq!(again, t);
            }

            #[test]
            fn classification_fractions_sum_to_one(spec in arb_spec(), x in 2usize..10) {
                let t = spec.generate().unwrap();
                if let Ok(b) = classify_patterns(&t, x) {
                    let sum = b.sequential_frac + b.stride_frac + b.other_frac;
                    prop_assert!((sum - 1.0).abs() <= 1e-9);
                }
            }
        }
    }
}
