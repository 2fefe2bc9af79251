use super::{Category, Family, IOFrame, Timestamp};

/// Activity on one `(file, rank)` pair from an open to its matching close.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenCloseSession {
    pub file: String,
    pub rank: u32,
    /// Absent for a synthetic session that starts at the trace epoch because
    /// I/O or a close was seen without a preceding open.
    pub open_event: Option<u64>,
    /// Absent when the trace ends (or the file is reopened) before a close.
    pub close_event: Option<u64>,
    pub start: Timestamp,
    pub reads: u64,
    pub writes: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl OpenCloseSession {
    fn new(file: &str, rank: u32, open_event: Option<u64>, start: Timestamp) -> Self {
        OpenCloseSession {
            file: file.to_owned(),
            rank,
            open_event,
            close_event: None,
            start,
            reads: 0,
            writes: 0,
            bytes_read: 0,
            bytes_written: 0,
        }
    }

    pub fn is_synthetic(&self) -> bool {
        self.open_event.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionReport {
    pub sessions: Vec<OpenCloseSession>,
    pub warnings: Vec<String>,
}

impl IOFrame {
    /// Reconstructs open-to-close sessions for `(file, rank)`.
    ///
    /// Every read and write on the pair lands in exactly one session. Anomalies
    /// (I/O or close without open, reopen without close) produce warnings and
    /// synthetic or unterminated sessions instead of errors.
    pub fn sessions(&self, file: &str, rank: u32) -> SessionReport {
        let trace_start = self.epoch_span().map_or(Timestamp::ZERO, |(s, _)| s);
        let mut report = SessionReport::default();
        let mut current: Option<OpenCloseSession> = None;

        for e in self.file_events(file).filter(|e| e.rank == rank) {
            match e.family() {
                Family::Open => {
                    if let Some(prev) = current.take() {
                        report.warnings.push(format!(
                            "{file} rank {rank}: event {} reopens before a close",
                            e.event_id
                        ));
                        report.sessions.push(prev);
                    }
                    current = Some(OpenCloseSession::new(file, rank, Some(e.event_id), e.start));
                }
                Family::Close => {
                    let mut s = current.take().unwrap_or_else(|| {
                        report
                            .warnings
                            .push(format!("{file} rank {rank}: close event {} without open", e.event_id));
                        OpenCloseSession::new(file, rank, None, trace_start)
                    });
                    s.close_event = Some(e.event_id);
                    report.sessions.push(s);
                }
                _ if e.category.is_data() => {
                    let s = current.get_or_insert_with(|| {
                        report.warnings.push(format!(
                            "{file} rank {rank}: {} event {} outside an open session",
                            e.category, e.event_id
                        ));
                        OpenCloseSession::new(file, rank, None, trace_start)
                    });
                    let bytes = e.bytes.unwrap_or(0);
                    if e.category == Category::Read {
                        s.reads += 1;
                        s.bytes_read += bytes;
                    } else {
                        s.writes += 1;
                        s.bytes_written += bytes;
                    }
                }
                _ => {}
            }
        }
        report.sessions.extend(current);
        report
    }
}

#[cfg(test)]
mod tests {
    use crate::trace::{IOFrame, Timestamp, TraceEvent};

    fn frame(calls: &[&str]) -> IOFrame {
        let events = calls
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let e = TraceEvent::new(
                    i as u64,
                    0,
                    *f,
                    Some("/f"),
                    Timestamp::from_nanos(10 * i as u64 + 5),
                    Timestamp::from_nanos(10 * i as u64 + 6),
                );
                if e.category.is_data() {
                    e.with_io(0, 10)
                } else {
                    e
                }
            })
            .collect();
        IOFrame::build(events).unwrap()
    }

    #[test]
    fn single_session() {
        let r = frame(&["open", "write", "write", "close"]).sessions("/f", 0);
        assert_eq!(r.sessions.len(), 1);
        let s = &r.sessions[0];
        assert_eq!((s.writes, s.bytes_written), (2, 20));
        assert_eq!((s.open_event, s.close_event), (Some(0), Some(3)));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn sequential_sessions() {
        let r = frame(&["open", "write", "close", "open", "read", "close"]).sessions("/f", 0);
        assert_eq!(r.sessions.len(), 2);
        assert_eq!(r.sessions[0].writes, 1);
        assert_eq!(r.sessions[1].reads, 1);
        assert_eq!(r.sessions[1].open_event, Some(3));
    }

    #[test]
    fn unterminated() {
        let r = frame(&["open", "write"]).sessions("/f", 0);
        assert_eq!(r.sessions.len(), 1);
        assert_eq!(r.sessions[0].close_event, None);
    }

    #[test]
    fn close_without_open_is_synthetic() {
        let r = frame(&["write", "close", "open", "read", "close"]).sessions("/f", 0);
        assert_eq!(r.sessions.len(), 2);
        assert!(r.sessions[0].is_synthetic());
        assert_eq!(r.sessions[0].start, Timestamp::from_nanos(5));
        assert_eq!(r.sessions[0].writes, 1);
        assert_eq!(r.warnings.len(), 1);
        let r = frame(&["open", "close", "close"]).sessions("/f", 0);
        assert_eq!(r.sessions.len(), 2);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn reopen_keeps_sessions_disjoint() {
        let r = frame(&["open", "read", "open", "read", "close"]).sessions("/f", 0);
        assert_eq!(r.sessions.len(), 2);
        assert_eq!(r.sessions[0].close_event, None);
        assert_eq!(r.sessions[1].reads, 1);
    }

    #[test]
    fn other_rank_is_ignored() {
        let r = frame(&["open", "write", "close"]).sessions("/f", 1);
        assert!(r.sessions.is_empty());
    }
}
