use crate::trace::{IOFrame, TraceEvent};

/// Transition counts between successive accesses of a file by the same rank.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccessPatternCounts {
    /// Next access starts exactly where the previous one ended.
    pub consecutive: u64,
    /// Next access jumps forward past the previous end.
    pub sequential: u64,
    /// Next access moves backward or overlaps the previous access.
    pub random: u64,
    /// Read/write events without an offset; they are left out of the streams.
    pub skipped: u64,
}

impl AccessPatternCounts {
    pub fn classified(&self) -> u64 {
        self.consecutive + self.sequential + self.random
    }

    /// Random transitions over classified transitions, 0 when there are none.
    pub fn random_fraction(&self) -> f64 {
        match self.classified() {
            0 => 0.0,
            n => self.random as f64 / n as f64,
        }
    }

    fn record(&mut self, prev_offset: u64, prev_bytes: u64, cur_offset: u64) {
        let prev_end = prev_offset.saturating_add(prev_bytes);
        if cur_offset == prev_end {
            self.consecutive += 1;
        } else if cur_offset > prev_end {
            self.sequential += 1;
        } else {
            self.random += 1;
        }
    }
}

/// Classifies one ordered stream of `(offset, bytes)` accesses.
pub fn classify_stream(accesses: impl IntoIterator<Item = (u64, u64)>) -> AccessPatternCounts {
    let mut counts = AccessPatternCounts::default();
    let mut prev: Option<(u64, u64)> = None;
    for (offset, bytes) in accesses {
        if let Some((po, pb)) = prev {
            counts.record(po, pb, offset);
        }
        prev = Some((offset, bytes));
    }
    counts
}

/// Access-pattern counts for `file`, summed over each rank's stream in start
/// order.
pub fn access_pattern(frame: &IOFrame, file: &str) -> AccessPatternCounts {
    let mut total = AccessPatternCounts::default();
    let mut prev: Option<&TraceEvent> = None;
    // File positions are in frame order, i.e. grouped by rank then start.
    for e in frame.file_events(file).filter(|e| e.category.is_data()) {
        let Some(offset) = e.offset else {
            total.skipped += 1;
            continue;
        };
        if let Some(p) = prev.filter(|p| p.rank == e.rank) {
            total.record(p.offset.unwrap_or(0), p.bytes.unwrap_or(0), offset);
        }
        prev = Some(e);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Timestamp, TraceEvent};

    fn frame(accesses: &[(u32, u64, u64)]) -> IOFrame {
        let events = accesses
            .iter()
            .enumerate()
            .map(|(i, &(rank, off, len))| {
                TraceEvent::new(
                    i as u64,
                    rank,
                    "pread",
                    Some("/f"),
                    Timestamp::from_nanos(i as u64 * 10),
                    Timestamp::from_nanos(i as u64 * 10 + 5),
                )
                .with_io(off, len)
            })
            .collect();
        IOFrame::build(events).unwrap()
    }

    #[test]
    fn consecutive_run() {
        let c = access_pattern(&frame(&[(0, 0, 100), (0, 100, 100), (0, 200, 100)]), "/f");
        assert_eq!(c.consecutive, 2);
        assert_eq!(c.classified(), 2);
    }

    #[test]
    fn forward_gap_then_backward() {
        let c = access_pattern(&frame(&[(0, 0, 100), (0, 300, 50), (0, 150, 10)]), "/f");
        assert_eq!((c.consecutive, c.sequential, c.random), (0, 1, 1));
    }

    #[test]
    fn single_access() {
        let c = access_pattern(&frame(&[(0, 0, 100)]), "/f");
        assert_eq!(c, AccessPatternCounts::default());
    }

    #[test]
    fn streams_are_per_rank() {
        // interleaved ranks each append to their own region
        let c = access_pattern(&frame(&[(0, 0, 10), (1, 1000, 10), (0, 10, 10), (1, 1010, 10)]), "/f");
        assert_eq!(c.consecutive, 2);
        assert_eq!(c.classified(), 2);
    }

    #[test]
    fn missing_offsets_are_skipped() {
        let mut f = frame(&[(0, 0, 10), (0, 10, 10)]).events().to_vec();
        f[1].offset = None;
        let c = access_pattern(&IOFrame::build(f).unwrap(), "/f");
        assert_eq!(c.skipped, 1);
        assert_eq!(c.classified(), 0);
    }

    #[test]
    fn overlap_counts_as_random() {
        let c = classify_stream([(0, 100), (50, 100)]);
        assert_eq!(c.random, 1);
    }
}
