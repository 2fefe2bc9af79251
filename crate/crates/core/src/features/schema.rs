//! Numeric layout of [`FileFeatures`] for the classifier.
//!
//! Categorical fields expand to one 0/1 column per category, boolean fields to
//! one 0/1 column, and numeric fields are copied. [`FeatureSchema::standard`] is
//! the 19-column default layout.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FeatureError, FileFeatures};

pub const SCHEMA_FORMAT: &str = "tierlens-schema v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureField {
    Interface,
    Collective,
    Fsync,
    FsyncPerWrite,
    Preallocate,
    UseFileView,
    UniqueDir,
    RandomAccess,
    IoType,
    TransferSize,
    ReadsPerOpen,
    WritesPerOpen,
    NumRanksSharing,
    NumReads,
    NumWrites,
}

impl FeatureField {
    pub fn name(self) -> &'static str {
        match self {
            FeatureField::Interface => "interface",
            FeatureField::Collective => "collective",
            FeatureField::Fsync => "fsync",
            FeatureField::FsyncPerWrite => "fsync_per_write",
            FeatureField::Preallocate => "preallocate",
            FeatureField::UseFileView => "use_file_view",
            FeatureField::UniqueDir => "unique_dir",
            FeatureField::RandomAccess => "random_access",
            FeatureField::IoType => "io_type",
            FeatureField::TransferSize => "transfer_size",
            FeatureField::ReadsPerOpen => "reads_per_open",
            FeatureField::WritesPerOpen => "writes_per_open",
            FeatureField::NumRanksSharing => "num_ranks_sharing",
            FeatureField::NumReads => "num_reads",
            FeatureField::NumWrites => "num_writes",
        }
    }

    fn is_categorical(self) -> bool {
        matches!(self, FeatureField::Interface | FeatureField::IoType)
    }

    fn is_flag(self) -> bool {
        matches!(
            self,
            FeatureField::Collective
                | FeatureField::Fsync
                | FeatureField::FsyncPerWrite
                | FeatureField::Preallocate
                | FeatureField::UseFileView
                | FeatureField::UniqueDir
                | FeatureField::RandomAccess
        )
    }

    /// Whether a trace from either tier yields the same value. No field is
    /// derived from timing, so all are.
    fn tier_independent(self) -> bool {
        true
    }

    fn category_of(self, f: &FileFeatures) -> Option<&'static str> {
        match self {
            FeatureField::Interface => Some(f.interface.as_str()),
            FeatureField::IoType => Some(f.io_type.as_str()),
            _ => None,
        }
    }

    fn scalar_of(self, f: &FileFeatures) -> f64 {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            FeatureField::Collective => flag(f.collective),
            FeatureField::Fsync => flag(f.fsync_present),
            FeatureField::FsyncPerWrite => flag(f.fsync_per_write),
            FeatureField::Preallocate => flag(f.preallocate),
            FeatureField::UseFileView => flag(f.use_file_view),
            FeatureField::UniqueDir => flag(f.unique_dir),
            FeatureField::RandomAccess => flag(f.random_access),
            FeatureField::TransferSize => f.transfer_size_mean,
            FeatureField::ReadsPerOpen => f.reads_per_open,
            FeatureField::WritesPerOpen => f.writes_per_open,
            FeatureField::NumRanksSharing => f.num_ranks_sharing as f64,
            FeatureField::NumReads => f.num_reads as f64,
            FeatureField::NumWrites => f.num_writes as f64,
            FeatureField::Interface | FeatureField::IoType => f64::NAN,
        }
    }
}

impl fmt::Display for FeatureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Flag,
    Category { value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub index: usize,
    pub name: String,
    pub field: FeatureField,
    #[serde(flatten)]
    pub kind: ColumnKind,
    pub tier_independent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub format: String,
    pub columns: Vec<Column>,
}

impl FeatureSchema {
    /// Builds a schema from fields in column order; categorical fields list
    /// their categories.
    pub fn from_fields(fields: &[(FeatureField, &[&str])]) -> Result<Self, FeatureError> {
        let mut columns = Vec::new();
        for &(field, categories) in fields {
            if field.is_categorical() {
                if categories.is_empty() {
                    return Err(FeatureError::Schema(format!("{field} needs categories")));
                }
                for &value in categories {
                    columns.push((
                        field,
                        ColumnKind::Category {
                            value: value.to_owned(),
                        },
                    ));
                }
            } else {
                if !categories.is_empty() {
                    return Err(FeatureError::Schema(format!("{field} takes no categories")));
                }
                let kind = if field.is_flag() {
                    ColumnKind::Flag
                } else {
                    ColumnKind::Numeric
                };
                columns.push((field, kind));
            }
        }
        let columns = columns
            .into_iter()
            .enumerate()
            .map(|(index, (field, kind))| Column {
                index,
                name: match &kind {
                    ColumnKind::Category { value } => format!("{field}={value}"),
                    _ => field.name().to_owned(),
                },
                field,
                kind,
                tier_independent: field.tier_independent(),
            })
            .collect();
        let schema = FeatureSchema {
            format: SCHEMA_FORMAT.to_owned(),
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// The 19-column layout mirroring the training-data description: interface
    /// (3), collective, fsync, preallocate, transfer size, unique dir, reads
    /// and writes per open, use file view, fsync per write, IO type (6),
    /// random access.
    pub fn standard() -> Self {
        Self::from_fields(&[
            (FeatureField::Interface, &["POSIX", "MPIIO", "HDF5"]),
            (FeatureField::Collective, &[]),
            (FeatureField::Fsync, &[]),
            (FeatureField::Preallocate, &[]),
            (FeatureField::TransferSize, &[]),
            (FeatureField::UniqueDir, &[]),
            (FeatureField::ReadsPerOpen, &[]),
            (FeatureField::WritesPerOpen, &[]),
            (FeatureField::UseFileView, &[]),
            (FeatureField::FsyncPerWrite, &[]),
            (FeatureField::IoType, &["RO", "WO", "RAR", "RAW", "WAR", "WAW"]),
            (FeatureField::RandomAccess, &[]),
        ])
        .expect("static schema")
    }

    /// [`Self::standard`] plus a MIXED IO type column and the sharing rank count
    /// (21 columns).
    pub fn extended() -> Self {
        Self::from_fields(&[
            (FeatureField::Interface, &["POSIX", "MPIIO", "HDF5"]),
            (FeatureField::Collective, &[]),
            (FeatureField::Fsync, &[]),
            (FeatureField::Preallocate, &[]),
            (FeatureField::TransferSize, &[]),
            (FeatureField::UniqueDir, &[]),
            (FeatureField::ReadsPerOpen, &[]),
            (FeatureField::WritesPerOpen, &[]),
            (FeatureField::UseFileView, &[]),
            (FeatureField::FsyncPerWrite, &[]),
            (FeatureField::IoType, &["RO", "WO", "RAR", "RAW", "WAR", "WAW", "MIXED"]),
            (FeatureField::RandomAccess, &[]),
            (FeatureField::NumRanksSharing, &[]),
        ])
        .expect("static schema")
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    fn validate(&self) -> Result<(), FeatureError> {
        if self.format != SCHEMA_FORMAT {
            return Err(FeatureError::Schema(format!(
                "unsupported schema format `{}`",
                self.format
            )));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if c.index != i {
                return Err(FeatureError::Schema(format!("column {} has index {}", i, c.index)));
            }
            let kind_ok = match &c.kind {
                ColumnKind::Category { .. } => c.field.is_categorical(),
                ColumnKind::Flag => c.field.is_flag(),
                ColumnKind::Numeric => !c.field.is_categorical() && !c.field.is_flag(),
            };
            if !kind_ok {
                return Err(FeatureError::Schema(format!(
                    "column {} ({}) has the wrong kind for {}",
                    i, c.name, c.field
                )));
            }
        }
        Ok(())
    }

    fn categories(&self, field: FeatureField) -> impl Iterator<Item = &str> {
        self.columns.iter().filter_map(move |c| match &c.kind {
            ColumnKind::Category { value } if c.field == field => Some(value.as_str()),
            _ => None,
        })
    }

    /// Encodes `features` into a vector of [`Self::width`] values.
    pub fn encode(&self, features: &FileFeatures) -> Result<Vec<f64>, FeatureError> {
        let mut fields_seen: Vec<FeatureField> = Vec::new();
        for c in &self.columns {
            if let ColumnKind::Category { .. } = c.kind {
                if !fields_seen.contains(&c.field) {
                    fields_seen.push(c.field);
                    let value = c.field.category_of(features).unwrap_or_default();
                    if !self.categories(c.field).any(|v| v == value) {
                        return Err(FeatureError::UnknownCategory {
                            field: c.field.name().to_owned(),
                            value: value.to_owned(),
                        });
                    }
                }
            }
        }
        Ok(self
            .columns
            .iter()
            .map(|c| match &c.kind {
                ColumnKind::Category { value } => {
                    if c.field.category_of(features) == Some(value.as_str()) {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => c.field.scalar_of(features),
            })
            .collect())
    }

    /// The category whose indicator column is 1 for `field`, if exactly one is.
    pub fn decode_category<'a>(&'a self, vector: &[f64], field: FeatureField) -> Option<&'a str> {
        let mut hit = None;
        for c in &self.columns {
            if let ColumnKind::Category { value } = &c.kind {
                if c.field == field && vector.get(c.index) == Some(&1.0) {
                    if hit.is_some() {
                        return None;
                    }
                    hit = Some(value.as_str());
                }
            }
        }
        hit
    }

    pub fn column(&self, field: FeatureField) -> Option<&Column> {
        self.columns.iter().find(|c| c.field == field)
    }

    pub fn save<W: Write>(&self, out: W) -> Result<(), FeatureError> {
        serde_json::to_writer_pretty(out, self).map_err(|e| FeatureError::Schema(e.to_string()))
    }

    pub fn load<R: Read>(input: R) -> Result<Self, FeatureError> {
        let schema: FeatureSchema = serde_json::from_reader(input).map_err(|e| FeatureError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::standard()
    }
}
