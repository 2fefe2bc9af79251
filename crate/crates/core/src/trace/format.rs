//! Line-delimited text trace format.
//!
//! ```text
//! #tierlens-trace v1
//! # event_id rank node function category interface file start end bytes offset
//! 0  0  0  open  metadata  POSIX  /data/out.0  0.000000000  0.000100000  -  -
//! 1  0  0  pwrite  write  POSIX  /data/out.0  0.000100000  0.002000000  4096  0
//! ```
//!
//! Fields are tab-separated (shown with spaces above) and `-` marks an absent value. `category` and
//! `interface` may be `-` on input, in which case they are derived from the
//! function name. Timestamps are written with exactly nine fractional digits.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use super::{classify_function, Category, Interface, Timestamp, TraceError, TraceEvent};

pub const TRACE_HEADER: &str = "#tierlens-trace v1";

const FIELD_COUNT: usize = 11;

fn absent(field: &str) -> bool {
    field == "-"
}

fn parse_opt_u64(field: &str, name: &str) -> Result<Option<u64>, String> {
    if absent(field) {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| format!("invalid {name} `{field}`"))
}

fn parse_line(line: &str) -> Result<TraceEvent, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != FIELD_COUNT {
        return Err(format!("expected {FIELD_COUNT} fields, found {}", fields.len()));
    }
    let event_id = fields[0]
        .parse()
        .map_err(|_| format!("invalid event_id `{}`", fields[0]))?;
    let rank = fields[1].parse().map_err(|_| format!("invalid rank `{}`", fields[1]))?;
    let node = fields[2].parse().map_err(|_| format!("invalid node `{}`", fields[2]))?;
    let function = fields[3];
    if function.is_empty() || absent(function) {
        return Err("missing function name".into());
    }
    let (derived_cat, derived_iface) = classify_function(function);
    let category = if absent(fields[4]) {
        derived_cat
    } else {
        fields[4].parse::<Category>()?
    };
    let interface = if absent(fields[5]) {
        derived_iface
    } else {
        fields[5].parse::<Interface>()?
    };
    let file = (!absent(fields[6])).then(|| fields[6].to_owned());
    let start: Timestamp = fields[7].parse()?;
    let end: Timestamp = fields[8].parse()?;
    let bytes = parse_opt_u64(fields[9], "bytes")?;
    let offset = parse_opt_u64(fields[10], "offset")?;
    Ok(TraceEvent {
        event_id,
        rank,
        node,
        function: function.to_owned(),
        category,
        interface,
        file,
        start,
        end,
        bytes,
        offset,
    })
}

/// Parses a trace, returning events in file order.
///
/// An empty stream is an empty trace. Any non-empty stream must start with
/// [`TRACE_HEADER`].
pub fn parse_trace<R: BufRead>(input: R) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events = Vec::new();
    let mut seen = HashSet::new();
    let mut header_seen = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| TraceError::Malformed {
            line: line_no,
            reason: e.to_string(),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if !header_seen {
            if line.trim().is_empty() {
                continue;
            }
            if line != TRACE_HEADER {
                return Err(TraceError::MissingHeader);
            }
            header_seen = true;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let event = parse_line(line).map_err(|reason| TraceError::Malformed { line: line_no, reason })?;
        if event.end < event.start {
            return Err(TraceError::NegativeDuration { line: line_no });
        }
        if let Err(reason) = event.validate() {
            return Err(TraceError::Malformed { line: line_no, reason });
        }
        if !seen.insert(event.event_id) {
            return Err(TraceError::DuplicateEventId {
                event_id: event.event_id,
                line: line_no,
            });
        }
        events.push(event);
    }
    Ok(events)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_owned(), T::to_string)
}

/// Writes events in the canonical format, header included.
pub fn write_trace<'a, W, I>(mut out: W, events: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TraceEvent>,
{
    writeln!(out, "{TRACE_HEADER}")?;
    for e in events {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.event_id,
            e.rank,
            e.node,
            e.function,
            e.category,
            e.interface,
            e.file.as_deref().unwrap_or("-"),
            e.start,
            e.end,
            opt(&e.bytes),
            opt(&e.offset),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<TraceEvent>, TraceError> {
        parse_trace(s.as_bytes())
    }

    #[test]
    fn empty_stream() {
        assert_eq!(parse("").unwrap(), vec![]);
        assert_eq!(parse("#tierlens-trace v1\n").unwrap(), vec![]);
    }

    #[test]
    fn single_write_record() {
        let s = "#tierlens-trace v1\n0\t0\t0\tpwrite\twrite\tPOSIX\t/a\t0.0\t0.5\t100\t0\n";
        let ev = parse(s).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].category, Category::Write);
        assert_eq!(ev[0].bytes, Some(100));
    }

    #[test]
    fn derives_category_when_absent() {
        let s = "#tierlens-trace v1\n0\t0\t0\tMPI_File_read_at\t-\t-\t/a\t0\t1\t8\t0\n";
        let ev = parse(s).unwrap();
        assert_eq!(ev[0].category, Category::Read);
        assert_eq!(ev[0].interface, Interface::MpiIo);
    }

    #[test]
    fn negative_duration() {
        let s = "#tierlens-trace v1\n# comment\n0\t0\t0\topen\t-\t-\t/a\t2.0\t1.0\t-\t-\n";
        let err = parse(s).unwrap_err();
        assert_eq!(err, TraceError::NegativeDuration { line: 3 });
        assert_eq!(err.to_string(), "negative duration at line 3");
    }

    #[test]
    fn duplicate_ids() {
        let s = "#tierlens-trace v1\n0\t0\t0\topen\t-\t-\t/a\t0\t1\t-\t-\n0\t0\t0\tclose\t-\t-\t/a\t1\t2\t-\t-\n";
        assert_eq!(
            parse(s).unwrap_err(),
            TraceError::DuplicateEventId { event_id: 0, line: 3 }
        );
    }

    #[test]
    fn malformed_lines() {
        let s = "#tierlens-trace v1\n0\t0\t0\topen\n";
        assert!(matches!(parse(s), Err(TraceError::Malformed { line: 2, .. })));
        let s = "#tierlens-trace v1\n0\t0\t0\twrite\t-\t-\t/a\t0\t1\t-\t0\n";
        assert!(matches!(parse(s), Err(TraceError::Malformed { line: 2, .. })));
        let s = "#tierlens-trace v1\nx\t0\t0\topen\t-\t-\t/a\t0\t1\t-\t-\n";
        assert!(matches!(parse(s), Err(TraceError::Malformed { line: 2, .. })));
        assert_eq!(parse("0\t0\n").unwrap_err(), TraceError::MissingHeader);
    }

    #[test]
    fn canonical_round_trip() {
        let s = "#tierlens-trace v1\n\
                 0\t3\t1\topen\tmetadata\tPOSIX\t/d/f\t0.000000000\t0.000100000\t-\t-\n\
                 1\t3\t1\tpwrite\twrite\tPOSIX\t/d/f\t0.000100000\t0.250000000\t1048576\t0\n\
                 2\t3\t1\tbarrier\tother\tOTHER\t-\t0.300000000\t0.300000001\t-\t-\n";
        let ev = parse(s).unwrap();
        let mut out = Vec::new();
        write_trace(&mut out, &ev).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), s);
    }
}
