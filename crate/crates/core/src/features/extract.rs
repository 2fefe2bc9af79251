use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{access_pattern, readwrite_pattern, FeatureError, IoType};
use crate::trace::{is_collective, Category, Family, IOFrame, Interface, Timestamp};

/// Thresholds used when turning trace witnesses into boolean features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    /// `random_access` is set when random transitions exceed this fraction.
    pub random_threshold: f64,
    /// `fsync_per_write` is set when at least this fraction of writes is
    /// followed by a sync before the next write.
    pub fsync_follow_rate: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            random_threshold: 0.5,
            fsync_follow_rate: 0.9,
        }
    }
}

/// Per-file I/O characteristics, one field per model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileFeatures {
    pub file: String,
    pub interface: Interface,
    pub collective: bool,
    pub fsync_present: bool,
    pub fsync_per_write: bool,
    pub preallocate: bool,
    pub use_file_view: bool,
    pub unique_dir: bool,
    pub random_access: bool,
    pub io_type: IoType,
    pub transfer_size_mean: f64,
    pub reads_per_open: f64,
    pub writes_per_open: f64,
    pub num_ranks_sharing: u32,
    pub num_reads: u64,
    pub num_writes: u64,
}

/// Rounds to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

impl FileFeatures {
    /// Copy with numeric fields rounded to six significant digits, the form
    /// used for grouping and encoding.
    pub fn canonical(&self) -> FileFeatures {
        FileFeatures {
            transfer_size_mean: round_significant(self.transfer_size_mean, 6),
            reads_per_open: round_significant(self.reads_per_open, 6),
            writes_per_open: round_significant(self.writes_per_open, 6),
            ..self.clone()
        }
    }

    /// Text key identifying the canonical feature values, ignoring the path.
    pub fn group_key(&self) -> String {
        let c = FileFeatures {
            file: String::new(),
            ..self.canonical()
        };
        serde_json::to_string(&c).expect("features serialize")
    }

    pub fn total_bytes(&self) -> f64 {
        self.transfer_size_mean * (self.num_reads + self.num_writes) as f64
    }
}

fn parent_dir(path: &str) -> &str {
    match path.rfind('/') {
        Some(0) => "/",
        Some(i) => &path[..i],
        None => ".",
    }
}

/// Frame-wide lookups shared by every file's extraction.
pub struct ExtractContext<'a> {
    frame: &'a IOFrame,
    dir_ranks: BTreeMap<&'a str, BTreeSet<u32>>,
    options: FeatureOptions,
}

impl<'a> ExtractContext<'a> {
    pub fn new(frame: &'a IOFrame, options: FeatureOptions) -> Self {
        let mut dir_ranks: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
        for file in frame.files() {
            dir_ranks
                .entry(parent_dir(file))
                .or_default()
                .extend(frame.file_events(file).map(|e| e.rank));
        }
        // calls on a directory path itself (mkdir, opendir) also touch it
        for file in frame.files() {
            if let Some(ranks) = dir_ranks.get_mut(file) {
                ranks.extend(frame.file_events(file).map(|e| e.rank));
            }
        }
        ExtractContext {
            frame,
            dir_ranks,
            options,
        }
    }

    pub fn extract(&self, file: &str) -> Result<FileFeatures, FeatureError> {
        let frame = self.frame;
        if !frame.contains_file(file) {
            return Err(FeatureError::FileNotFound(file.to_owned()));
        }
        let events: Vec<_> = frame.file_events(file).collect();

        let mut iface_votes = [0u64; 3];
        let mut total_bytes = 0u64;
        let mut first_write: Option<Timestamp> = None;
        let mut ranks = BTreeSet::new();
        let mut collective = false;
        let mut fsync_present = false;
        let mut use_file_view = false;
        for e in &events {
            ranks.insert(e.rank);
            collective |= is_collective(&e.function);
            match e.family() {
                Family::Sync => fsync_present = true,
                Family::SetView => use_file_view = true,
                _ => {}
            }
            if e.category.is_data() {
                total_bytes += e.bytes.unwrap_or(0);
                match e.interface {
                    Interface::Posix => iface_votes[0] += 1,
                    Interface::MpiIo => iface_votes[1] += 1,
                    Interface::Hdf5 => iface_votes[2] += 1,
                    Interface::Other => {}
                }
            }
            if e.category == Category::Write {
                first_write = Some(first_write.map_or(e.start, |t| t.min(e.start)));
            }
        }
        let interface = [Interface::Posix, Interface::MpiIo, Interface::Hdf5]
            .into_iter()
            .zip(iface_votes)
            .fold(
                (Interface::Posix, 0),
                |best, (i, v)| if v > best.1 { (i, v) } else { best },
            )
            .0;
        let preallocate =
            first_write.is_some_and(|fw| events.iter().any(|e| e.family() == Family::Truncate && e.start <= fw));

        // fsync after each write, per rank stream (events are rank-grouped)
        let mut writes = 0u64;
        let mut followed = 0u64;
        let mut pending = false;
        let mut prev_rank = None;
        for e in &events {
            if prev_rank != Some(e.rank) {
                pending = false;
                prev_rank = Some(e.rank);
            }
            if e.category == Category::Write {
                writes += 1;
                pending = true;
            } else if pending && e.family() == Family::Sync {
                followed += 1;
                pending = false;
            }
        }
        let fsync_per_write = writes > 0 && followed as f64 >= self.options.fsync_follow_rate * writes as f64;

        let reuse = readwrite_pattern(frame, file)?;
        let access = access_pattern(frame, file);
        let random_access = access.classified() > 0 && access.random_fraction() > self.options.random_threshold;

        let (mut sessions, mut s_reads, mut s_writes) = (0u64, 0u64, 0u64);
        for &rank in &ranks {
            for s in frame.sessions(file, rank).sessions {
                sessions += 1;
                s_reads += s.reads;
                s_writes += s.writes;
            }
        }
        let per_open = |n: u64| if sessions == 0 { 0.0 } else { n as f64 / sessions as f64 };

        let unique_dir = self.dir_ranks.get(parent_dir(file)).is_some_and(|r| r.len() == 1);

        let ops = reuse.reads + reuse.writes;
        Ok(FileFeatures {
            file: file.to_owned(),
            interface,
            collective,
            fsync_present,
            fsync_per_write,
            preallocate,
            use_file_view,
            unique_dir,
            random_access,
            io_type: reuse.io_type,
            transfer_size_mean: if ops == 0 { 0.0 } else { total_bytes as f64 / ops as f64 },
            reads_per_open: per_open(s_reads),
            writes_per_open: per_open(s_writes),
            num_ranks_sharing: ranks.len() as u32,
            num_reads: reuse.reads,
            num_writes: reuse.writes,
        })
    }
}

/// Features of one file with default thresholds.
pub fn extract_features(frame: &IOFrame, file: &str) -> Result<FileFeatures, FeatureError> {
    ExtractContext::new(frame, FeatureOptions::default()).extract(file)
}

/// Features of every file that has at least one read or write, in path order.
pub fn extract_all(frame: &IOFrame, options: FeatureOptions) -> Result<Vec<FileFeatures>, FeatureError> {
    let ctx = ExtractContext::new(frame, options);
    frame
        .files()
        .filter(|f| frame.file_events(f).any(|e| e.category.is_data()))
        .map(|f| ctx.extract(f))
        .collect()
}
