//! Aggregated views over an [`IOFrame`]: bandwidth, I/O time, file sharing and
//! timeline segments.
//!
//! I/O time is the sum of event durations inside a group, not the wall-clock
//! span, unless [`TimeBasis::WallClock`] is requested explicitly.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use crate::trace::{Category, EventFilter, IOFrame, Timestamp};

pub use report::{write_csv_bandwidth, write_csv_sharing, write_csv_time, Pretty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    FileRank,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeBasis {
    /// Sum of read/write event durations.
    #[default]
    Summed,
    /// Span from the first read/write start to the last read/write end.
    WallClock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthRow {
    pub file: String,
    /// Absent when grouped by file only.
    pub rank: Option<u32>,
    pub bytes: u64,
    pub io_time_nanos: u64,
    pub io_time: f64,
    /// Bytes per second; absent when the group's I/O time is zero.
    pub bandwidth: Option<f64>,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BandwidthTable {
    pub group_by: GroupBy,
    pub basis: TimeBasis,
    pub rows: Vec<BandwidthRow>,
}

impl BandwidthTable {
    pub fn row(&self, file: &str, rank: Option<u32>) -> Option<&BandwidthRow> {
        self.rows.iter().find(|r| r.file == file && r.rank == rank)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeRow {
    pub file: String,
    pub rank: u32,
    pub read_time: f64,
    pub write_time: f64,
    pub metadata_time: f64,
    pub total_io_time: f64,
    /// `metadata_time / total_io_time`, or 0 when nothing was timed.
    pub metadata_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeTable {
    pub rows: Vec<TimeRow>,
}

impl TimeTable {
    pub fn row(&self, file: &str, rank: u32) -> Option<&TimeRow> {
        self.rows.iter().find(|r| r.file == file && r.rank == rank)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharingRow {
    pub file: String,
    pub num_ranks: usize,
    pub ranks: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SharingReport {
    pub rows: Vec<SharingRow>,
}

impl SharingReport {
    pub fn row(&self, file: &str) -> Option<&SharingRow> {
        self.rows.iter().find(|r| r.file == file)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineSegment {
    pub rank: u32,
    pub function: String,
    pub category: Category,
    pub start: Timestamp,
    pub end: Timestamp,
    /// Stacking row within the rank; overlapping calls get distinct lanes.
    pub lane: usize,
}

const RATE_UNITS: [&str; 5] = ["B/s", "KiB/s", "MiB/s", "GiB/s", "TiB/s"];

/// Formats a byte rate with the largest binary unit whose mantissa is at least
/// one, using two fractional digits.
pub fn humanize_rate(rate: f64) -> String {
    let mut value = rate.max(0.0);
    let mut unit = 0;
    while value >= 1024.0 && unit + 1 < RATE_UNITS.len() {
        value /= 1024.0;
        unit += 1;
    }
    format!("{value:.2} {}", RATE_UNITS[unit])
}

fn rate(bytes: u64, nanos: u64) -> Option<f64> {
    (nanos > 0).then(|| bytes as f64 / (nanos as f64 / 1e9))
}

#[derive(Default)]
struct Acc {
    bytes: u64,
    nanos: u64,
    first: Option<Timestamp>,
    last: Option<Timestamp>,
}

/// Per-group bandwidth over read and write events.
pub fn io_bandwidth(frame: &IOFrame, group_by: GroupBy, filter: &EventFilter) -> BandwidthTable {
    io_bandwidth_with(frame, group_by, filter, TimeBasis::Summed)
}

pub fn io_bandwidth_with(frame: &IOFrame, group_by: GroupBy, filter: &EventFilter, basis: TimeBasis) -> BandwidthTable {
    let mut groups: BTreeMap<(&str, Option<u32>), Acc> = BTreeMap::new();
    for e in frame.events() {
        if !e.category.is_data() || !filter.matches(e) {
            continue;
        }
        let Some(file) = e.file.as_deref() else { continue };
        let rank = match group_by {
            GroupBy::FileRank => Some(e.rank),
            GroupBy::File => None,
        };
        let acc = groups.entry((file, rank)).or_default();
        acc.bytes += e.bytes.unwrap_or(0);
        acc.nanos += e.duration_nanos();
        acc.first = Some(acc.first.map_or(e.start, |t| t.min(e.start)));
        acc.last = Some(acc.last.map_or(e.end, |t| t.max(e.end)));
    }
    let rows = groups
        .into_iter()
        .map(|((file, rank), acc)| {
            let nanos = match basis {
                TimeBasis::Summed => acc.nanos,
                TimeBasis::WallClock => match (acc.first, acc.last) {
                    (Some(a), Some(b)) => b.nanos_since(a),
                    _ => 0,
                },
            };
            let bandwidth = rate(acc.bytes, nanos);
            BandwidthRow {
                file: file.to_owned(),
                rank,
                bytes: acc.bytes,
                io_time_nanos: nanos,
                io_time: nanos as f64 / 1e9,
                bandwidth,
                display: bandwidth.map_or_else(|| "-".to_owned(), humanize_rate),
            }
        })
        .collect();
    BandwidthTable { group_by, basis, rows }
}

/// Per `(file, rank)` time split into read, write and metadata.
pub fn io_time(frame: &IOFrame, filter: &EventFilter) -> TimeTable {
    let mut groups: BTreeMap<(&str, u32), [u64; 3]> = BTreeMap::new();
    for e in frame.events() {
        let slot = match e.category {
            Category::Read => 0,
            Category::Write => 1,
            Category::Metadata => 2,
            Category::Other => continue,
        };
        if !filter.matches(e) {
            continue;
        }
        let Some(file) = e.file.as_deref() else { continue };
        groups.entry((file, e.rank)).or_default()[slot] += e.duration_nanos();
    }
    let rows = groups
        .into_iter()
        .map(|((file, rank), [r, w, m])| {
            let total = r + w + m;
            let secs = |n: u64| n as f64 / 1e9;
            TimeRow {
                file: file.to_owned(),
                rank,
                read_time: secs(r),
                write_time: secs(w),
                metadata_time: secs(m),
                total_io_time: secs(total),
                metadata_fraction: if total > 0 { m as f64 / total as f64 } else { 0.0 },
            }
        })
        .collect();
    TimeTable { rows }
}

/// Which ranks touch each file, through any call.
pub fn shared_files(frame: &IOFrame) -> SharingReport {
    let rows = frame
        .files()
        .map(|file| {
            let ranks: BTreeSet<u32> = frame.file_events(file).map(|e| e.rank).collect();
            SharingRow {
                file: file.to_owned(),
                num_ranks: ranks.len(),
                ranks: ranks.into_iter().collect(),
            }
        })
        .collect();
    SharingReport { rows }
}

/// One segment per passing event, with greedy first-fit lanes per rank.
pub fn timeline_segments(frame: &IOFrame, filter: &EventFilter) -> Vec<TimelineSegment> {
    let mut out = Vec::new();
    for rank in frame.ranks() {
        // Frame order within a rank is ascending start, so first-fit only needs
        // each lane's latest end.
        let mut lane_ends: Vec<Timestamp> = Vec::new();
        for e in frame.rank_events(rank).filter(|e| filter.matches(e)) {
            let lane = match lane_ends.iter().position(|&end| end <= e.start) {
                Some(l) => {
                    lane_ends[l] = e.end;
                    l
                }
                None => {
                    lane_ends.push(e.end);
                    lane_ends.len() - 1
                }
            };
            out.push(TimelineSegment {
                rank,
                function: e.function.clone(),
                category: e.category,
                start: e.start,
                end: e.end,
                lane,
            });
        }
    }
    out
}
