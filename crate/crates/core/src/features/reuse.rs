use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::trace::{Category, IOFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IoType {
    RO,
    WO,
    RAR,
    RAW,
    WAR,
    WAW,
    MIXED,
}

impl IoType {
    pub const ALL: [IoType; 7] = [
        IoType::RO,
        IoType::WO,
        IoType::RAR,
        IoType::RAW,
        IoType::WAR,
        IoType::WAW,
        IoType::MIXED,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IoType::RO => "RO",
            IoType::WO => "WO",
            IoType::RAR => "RAR",
            IoType::RAW => "RAW",
            IoType::WAR => "WAR",
            IoType::WAW => "WAW",
            IoType::MIXED => "MIXED",
        }
    }
}

impl fmt::Display for IoType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IoType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IoType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown io type `{s}`"))
    }
}

/// Byte volumes of a file classified by the most recent prior access to each
/// byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReuseVolumes {
    pub rar: u64,
    pub raw: u64,
    pub war: u64,
    pub waw: u64,
    pub first_read: u64,
    pub first_write: u64,
    pub read_bytes: u64,
    pub written_bytes: u64,
    pub reads: u64,
    pub writes: u64,
    pub io_type: IoType,
}

/// The six reuse and first-touch classes of one access.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReuseTally {
    pub rar: u64,
    pub raw: u64,
    pub war: u64,
    pub waw: u64,
    pub first_read: u64,
    pub first_write: u64,
}

/// IO type rule: RO/WO when only one direction exists, otherwise the largest
/// reuse volume (ties resolved in RAR, RAW, WAR, WAW order), MIXED when no
/// byte was reused.
pub fn io_type_of(reads: u64, writes: u64, tally: &ReuseTally) -> IoType {
    match (reads > 0, writes > 0) {
        (true, false) => IoType::RO,
        (false, true) => IoType::WO,
        _ => {
            let candidates = [
                (tally.rar, IoType::RAR),
                (tally.raw, IoType::RAW),
                (tally.war, IoType::WAR),
                (tally.waw, IoType::WAW),
            ];
            let mut best = (0, IoType::MIXED);
            for (v, t) in candidates {
                if v > best.0 {
                    best = (v, t);
                }
            }
            best.1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Last {
    Read,
    Write,
}

/// Disjoint extents keyed by start, each remembering its latest accessor.
#[derive(Debug, Default)]
struct ExtentMap {
    extents: BTreeMap<u64, (u64, Last)>,
}

impl ExtentMap {
    /// Marks `[start, end)` as accessed by `kind` and returns the byte counts
    /// previously owned by reads, by writes, and untouched.
    fn access(&mut self, start: u64, end: u64, kind: Last) -> (u64, u64, u64) {
        let mut prior_read = 0;
        let mut prior_write = 0;
        let mut overlapping = Vec::new();
        if let Some((&s, &(e, k))) = self.extents.range(..=start).next_back() {
            if e > start {
                overlapping.push((s, e, k));
            }
        }
        for (&s, &(e, k)) in self.extents.range(start..end) {
            if s != start || overlapping.is_empty() {
                overlapping.push((s, e, k));
            }
        }
        for &(s, e, k) in &overlapping {
            let covered = e.min(end) - s.max(start);
            match k {
                Last::Read => prior_read += covered,
                Last::Write => prior_write += covered,
            }
            self.extents.remove(&s);
            if s < start {
                self.extents.insert(s, (start, k));
            }
            if e > end {
                self.extents.insert(end, (e, k));
            }
        }
        self.extents.insert(start, (end, kind));
        let fresh = (end - start) - prior_read - prior_write;
        (prior_read, prior_write, fresh)
    }
}

/// Classifies every accessed byte of a sequence of `(is_write, offset, bytes)`
/// accesses already in time order.
pub fn classify_reuse(accesses: impl IntoIterator<Item = (bool, u64, u64)>) -> ReuseTally {
    let mut map = ExtentMap::default();
    let mut t = ReuseTally::default();
    for (is_write, offset, bytes) in accesses {
        if bytes == 0 {
            continue;
        }
        let end = offset.saturating_add(bytes);
        let kind = if is_write { Last::Write } else { Last::Read };
        let (after_read, after_write, fresh) = map.access(offset, end, kind);
        if is_write {
            t.war += after_read;
            t.waw += after_write;
            t.first_write += fresh;
        } else {
            t.rar += after_read;
            t.raw += after_write;
            t.first_read += fresh;
        }
    }
    t
}

/// Reuse volumes of `file` over all ranks in global `(start, event_id)` order.
pub fn readwrite_pattern(frame: &IOFrame, file: &str) -> Result<ReuseVolumes, FeatureError> {
    let mut events: Vec<_> = frame.file_events(file).filter(|e| e.category.is_data()).collect();
    events.sort_by_key(|e| (e.start, e.event_id));
    let mut accesses = Vec::with_capacity(events.len());
    let (mut reads, mut writes, mut read_bytes, mut written_bytes) = (0, 0, 0, 0);
    for e in events {
        let offset = e.offset.ok_or(FeatureError::MissingOffset {
            file: file.to_owned(),
            event_id: e.event_id,
        })?;
        let bytes = e.bytes.unwrap_or(0);
        let is_write = e.category == Category::Write;
        if is_write {
            writes += 1;
            written_bytes += bytes;
        } else {
            reads += 1;
            read_bytes += bytes;
        }
        accesses.push((is_write, offset, bytes));
    }
    let t = classify_reuse(accesses);
    Ok(ReuseVolumes {
        rar: t.rar,
        raw: t.raw,
        war: t.war,
        waw: t.waw,
        first_read: t.first_read,
        first_write: t.first_write,
        read_bytes,
        written_bytes,
        reads,
        writes,
        io_type: io_type_of(reads, writes, &t),
    })
}
