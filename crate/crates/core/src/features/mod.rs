//! Per-file I/O characteristics and their numeric encoding.

mod access;
mod extract;
mod reuse;
mod schema;

use std::collections::BTreeMap;
use std::io::Write;

pub use access::{access_pattern, classify_stream, AccessPatternCounts};
pub use extract::{extract_all, extract_features, round_significant, ExtractContext, FeatureOptions, FileFeatures};
pub use reuse::{classify_reuse, io_type_of, readwrite_pattern, IoType, ReuseTally, ReuseVolumes};
pub use schema::{Column, ColumnKind, FeatureField, FeatureSchema, SCHEMA_FORMAT};

use crate::trace::IOFrame;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("file `{0}` does not appear in the trace")]
    FileNotFound(String),
    #[error("{file}: event {event_id} has no offset; reuse analysis needs offsets")]
    MissingOffset { file: String, event_id: u64 },
    #[error("feature `{field}` has value `{value}` outside the schema's categories")]
    UnknownCategory { field: String, value: String },
    #[error("schema: {0}")]
    Schema(String),
}

/// Files whose canonical features are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct FileGroup {
    /// Canonical features of the group; `file` names the first member.
    pub features: FileFeatures,
    /// Members in path order.
    pub files: Vec<String>,
}

/// Groups every file with at least one read or write by canonical features.
/// Groups are ordered by their first member's path.
pub fn group_files_by_features(frame: &IOFrame) -> Result<Vec<FileGroup>, FeatureError> {
    Ok(group_features(extract_all(frame, FeatureOptions::default())?))
}

pub fn group_features(all: Vec<FileFeatures>) -> Vec<FileGroup> {
    let mut groups: BTreeMap<String, FileGroup> = BTreeMap::new();
    for f in all {
        groups
            .entry(f.group_key())
            .and_modify(|g| g.files.push(f.file.clone()))
            .or_insert_with(|| FileGroup {
                files: vec![f.file.clone()],
                features: f.canonical(),
            });
    }
    let mut out: Vec<FileGroup> = groups.into_values().collect();
    for g in &mut out {
        g.files.sort();
    }
    out.sort_by(|a, b| a.files[0].cmp(&b.files[0]));
    out
}

pub const FEATURE_CSV_HEADER: [&str; 16] = [
    "file",
    "interface",
    "collective",
    "fsync",
    "fsync_per_write",
    "preallocate",
    "use_file_view",
    "unique_dir",
    "random_access",
    "io_type",
    "transfer_size_mean",
    "reads_per_open",
    "writes_per_open",
    "num_ranks_sharing",
    "num_reads",
    "num_writes",
];

/// The feature columns of [`FEATURE_CSV_HEADER`] after `file`, rendered.
pub fn feature_fields(f: &FileFeatures) -> [String; 15] {
    let b = |v: bool| if v { "1" } else { "0" }.to_owned();
    [
        f.interface.to_string(),
        b(f.collective),
        b(f.fsync_present),
        b(f.fsync_per_write),
        b(f.preallocate),
        b(f.use_file_view),
        b(f.unique_dir),
        b(f.random_access),
        f.io_type.to_string(),
        f.transfer_size_mean.to_string(),
        f.reads_per_open.to_string(),
        f.writes_per_open.to_string(),
        f.num_ranks_sharing.to_string(),
        f.num_reads.to_string(),
        f.num_writes.to_string(),
    ]
}

pub fn write_features_csv<W: Write>(out: W, features: &[FileFeatures]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEATURE_CSV_HEADER)?;
    for f in features {
        let mut rec = vec![f.file.clone()];
        rec.extend(feature_fields(f));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
