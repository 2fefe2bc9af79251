//! Labeled samples built from paired-tier measurements.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{round_significant, FeatureError, FeatureSchema, FileFeatures};

/// Significant digits kept for every numeric value of a built dataset.
pub const DATASET_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    PFS,
    BB,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::PFS => "PFS",
            Tier::BB => "BB",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PFS" => Ok(Tier::PFS),
            "BB" => Ok(Tier::BB),
            _ => Err(format!("unknown tier `{s}` (expected PFS or BB)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("bandwidth must be non-negative, got {0}")]
    NegativeBandwidth(f64),
    #[error("pair {index}: {source}")]
    Encode {
        index: usize,
        #[source]
        source: FeatureError,
    },
    #[error("split needs at least 2 samples, got {0}")]
    TooSmall(usize),
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    Fraction(f64),
    #[error("sample {index}: vector has {found} values, schema width is {expected}")]
    Width {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: {reason}")]
    Row { row: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub vector: Vec<f64>,
    pub label: Tier,
    /// Config or file-group identifier.
    pub source: String,
    pub bw_pfs: Option<f64>,
    pub bw_bb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub samples: Vec<Sample>,
}

/// One configuration or file group measured on both tiers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRun {
    pub features: FileFeatures,
    pub bw_pfs: f64,
    pub bw_bb: f64,
    pub source: String,
}

/// BB only when it is strictly faster.
pub fn label_pair(bw_pfs: f64, bw_bb: f64) -> Result<Tier, DatasetError> {
    for bw in [bw_pfs, bw_bb] {
        if bw.is_nan() || bw < 0.0 {
            return Err(DatasetError::NegativeBandwidth(bw));
        }
    }
    Ok(if bw_bb > bw_pfs { Tier::BB } else { Tier::PFS })
}

/// Averages bandwidths of runs whose canonical features coincide. Groups keep
/// the position and source of their first run.
pub fn mean_repetitions(runs: &[PairedRun]) -> Vec<PairedRun> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut acc: Vec<(PairedRun, u32)> = Vec::new();
    for r in runs {
        match index.get(&r.features.group_key()) {
            Some(&i) => {
                acc[i].0.bw_pfs += r.bw_pfs;
                acc[i].0.bw_bb += r.bw_bb;
                acc[i].1 += 1;
            }
            None => {
                index.insert(r.features.group_key(), acc.len());
                acc.push((r.clone(), 1));
            }
        }
    }
    acc.into_iter()
        .map(|(mut r, n)| {
            r.bw_pfs /= n as f64;
            r.bw_bb /= n as f64;
            r
        })
        .collect()
}

pub fn build_dataset(schema: &FeatureSchema, runs: &[PairedRun]) -> Result<Dataset, DatasetError> {
    let samples = runs
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let vector = schema
                .encode(&r.features.canonical())
                .map_err(|source| DatasetError::Encode { index, source })?
                .into_iter()
                .map(|v| round_significant(v, DATASET_DIGITS))
                .collect();
            Ok(Sample {
                vector,
                label: label_pair(r.bw_pfs, r.bw_bb)?,
                source: r.source.clone(),
                bw_pfs: Some(round_significant(r.bw_pfs, DATASET_DIGITS)),
                bw_bb: Some(round_significant(r.bw_bb, DATASET_DIGITS)),
            })
        })
        .collect::<Result<_, DatasetError>>()?;
    Ok(Dataset {
        schema: schema.clone(),
        samples,
    })
}

/// Rounds half up; a tiny slack absorbs representation error in `n × f`.
fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor() as usize
}

impl Dataset {
    pub fn new(schema: FeatureSchema, samples: Vec<Sample>) -> Result<Self, DatasetError> {
        let d = Dataset { schema, samples };
        d.check_widths()?;
        Ok(d)
    }

    pub fn empty(schema: FeatureSchema) -> Self {
        Dataset {
            schema,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn width(&self) -> usize {
        self.schema.width()
    }

    pub fn check_widths(&self) -> Result<(), DatasetError> {
        let expected = self.width();
        match self.samples.iter().position(|s| s.vector.len() != expected) {
            Some(index) => Err(DatasetError::Width {
                index,
                expected,
                found: self.samples[index].vector.len(),
            }),
            None => Ok(()),
        }
    }

    pub fn count(&self, tier: Tier) -> usize {
        self.samples.iter().filter(|s| s.label == tier).count()
    }

    /// Keeps only the given columns, in the given order, renumbering the
    /// schema.
    pub fn project(&self, columns: &[usize]) -> Dataset {
        let mut schema = self.schema.clone();
        schema.columns = columns
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut col = self.schema.columns[c].clone();
                col.index = i;
                col
            })
            .collect();
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                vector: columns.iter().map(|&c| s.vector[c]).collect(),
                ..s.clone()
            })
            .collect();
        Dataset { schema, samples }
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Seeded shuffle, then a cut at `m = round(n × min(f, 1 − f))` clamped to
    /// `[1, n − 1]`; the first `m` shuffled samples form the smaller side.
    /// The test set is the smaller side when `f ≤ 0.5`, so fractions `f` and
    /// `1 − f` return the same two parts with roles swapped.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(DatasetError::Fraction(test_fraction));
        }
        let n = self.len();
        if n < 2 {
            return Err(DatasetError::TooSmall(n));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let small_fraction = test_fraction.min(1.0 - test_fraction);
        let m = round_half_up(n as f64 * small_fraction).clamp(1, n - 1);
        let (small, large) = order.split_at(m);
        let (small, large) = (self.subset(small), self.subset(large));
        Ok(if test_fraction <= 0.5 {
            (large, small)
        } else {
            (small, large)
        })
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = (0..self.width()).map(|i| format!("col_{i}")).collect();
        h.extend(["label", "bw_pfs", "bw_bb", "source"].map(String::from));
        h
    }

    /// Writes the dataset CSV. Numbers use the shortest text that parses back
    /// to the same value.
    pub fn save_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.samples {
            let mut rec: Vec<String> = s.vector.iter().map(f64::to_string).collect();
            rec.push(s.label.to_string());
            rec.push(opt(s.bw_pfs));
            rec.push(opt(s.bw_bb));
            rec.push(s.source.clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads a CSV written by [`Self::save_csv`] under `schema`. Rows are
    /// numbered from 1 at the header.
    pub fn load_csv<R: Read>(input: R, schema: &FeatureSchema) -> Result<Dataset, DatasetError> {
        let width = schema.width();
        let expected_fields = width + 4;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let mut records = rdr.records();
        let empty = Dataset::empty(schema.clone());
        let header = match records.next() {
            None => return Ok(empty),
            Some(h) => h?,
        };
        let want = empty.header();
        if header.iter().ne(want.iter().map(String::as_str)) {
            return Err(DatasetError::Row {
                row: 1,
                reason: format!(
                    "header does not match a width-{width} schema (expected {} fields starting `col_0`)",
                    expected_fields
                ),
            });
        }
        let mut samples = Vec::new();
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            let row = i as u64 + 2;
            let bad = |reason: String| DatasetError::Row { row, reason };
            if rec.len() != expected_fields {
                return Err(bad(format!("expected {expected_fields} fields, found {}", rec.len())));
            }
            let vector = rec
                .iter()
                .take(width)
                .enumerate()
                .map(|(c, v)| {
                    v.parse::<f64>()
                        .map_err(|_| bad(format!("col_{c}: `{v}` is not a number")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let label = rec[width].parse::<Tier>().map_err(bad)?;
            let bw = |field: &str, v: &str| -> Result<Option<f64>, DatasetError> {
                if v.is_empty() {
                    return Ok(None);
                }
                v.parse()
                    .map(Some)
                    .map_err(|_| bad(format!("{field}: `{v}` is not a number")))
            };
            samples.push(Sample {
                vector,
                label,
                bw_pfs: bw("bw_pfs", &rec[width + 1])?,
                bw_bb: bw("bw_bb", &rec[width + 2])?,
                source: rec[width + 3].to_owned(),
            });
        }
        Ok(Dataset {
            schema: schema.clone(),
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::IoType;
    use crate::trace::Interface;
    use proptest::prelude::*;

    fn features(ts: f64, io_type: IoType) -> FileFeatures {
        FileFeatures {
            file: "/f".into(),
            interface: Interface::Posix,
            collective: false,
            fsync_present: false,
            fsync_per_write: false,
            preallocate: false,
            use_file_view: false,
            unique_dir: false,
            random_access: false,
            io_type,
            transfer_size_mean: ts,
            reads_per_open: 0.0,
            writes_per_open: 4.0,
            num_ranks_sharing: 1,
            num_reads: 0,
            num_writes: 4,
        }
    }

    fn toy(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| Sample {
                vector: vec![i as f64, (i * i) as f64 / 7.0],
                label: if i % 3 == 0 { Tier::BB } else { Tier::PFS },
                source: format!("s{i}"),
                bw_pfs: Some(i as f64 * 1.5),
                bw_bb: if i % 2 == 0 { None } else { Some(0.1 * i as f64) },
            })
            .collect();
        let schema = FeatureSchema::from_fields(&[
            (crate::features::FeatureField::TransferSize, &[]),
            (crate::features::FeatureField::ReadsPerOpen, &[]),
        ])
        .unwrap();
        Dataset::new(schema, samples).unwrap()
    }

    #[test]
    fn labels() {
        let mb = 1e6;
        assert_eq!(label_pair(155.01 * mb, 3236.24 * mb).unwrap(), Tier::BB);
        assert_eq!(label_pair(5.0, 5.0).unwrap(), Tier::PFS);
        assert_eq!(label_pair(2.0, 1.0).unwrap(), Tier::PFS);
        assert!(label_pair(-1.0, 1.0).is_err());
        assert!(label_pair(1.0, f64::NAN).is_err());
    }

    #[test]
    fn build_counts_and_labels() {
        let schema = FeatureSchema::standard();
        assert!(build_dataset(&schema, &[]).unwrap().is_empty());
        let runs: Vec<PairedRun> = (0..3)
            .map(|i| PairedRun {
                features: features(1024.0 * (i + 1) as f64, IoType::WO),
                bw_pfs: 1.0,
                bw_bb: 2.0,
                source: format!("cfg{i}"),
            })
            .collect();
        let d = build_dataset(&schema, &runs).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.samples.iter().all(|s| s.label == Tier::BB));
        assert_eq!(d.samples[2].source, "cfg2");
        assert_eq!(d.samples[0].vector.len(), 19);
    }

    #[test]
    fn build_reports_pair_index() {
        let mut runs = vec![PairedRun {
            features: features(1.0, IoType::WO),
            bw_pfs: 1.0,
            bw_bb: 1.0,
            source: "a".into(),
        }];
        runs.push(PairedRun {
            features: features(1.0, IoType::MIXED),
            ..runs[0].clone()
        });
        match build_dataset(&FeatureSchema::standard(), &runs) {
            Err(DatasetError::Encode { index: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn factorial_grid_count() {
        let mut runs = Vec::new();
        for ts in [1.0, 2.0] {
            for io in [IoType::RO, IoType::WO] {
                for bw in [1.0, 2.0, 3.0] {
                    runs.push(PairedRun {
                        features: features(ts, io),
                        bw_pfs: 2.0,
                        bw_bb: bw,
                        source: String::new(),
                    });
                }
            }
        }
        assert_eq!(build_dataset(&FeatureSchema::standard(), &runs).unwrap().len(), 12);
    }

    #[test]
    fn repetition_mean() {
        let r = |bw_pfs, bw_bb, ts| PairedRun {
            features: features(ts, IoType::WO),
            bw_pfs,
            bw_bb,
            source: format!("{ts}"),
        };
        let merged = mean_repetitions(&[r(1.0, 4.0, 8.0), r(9.0, 1.0, 16.0), r(3.0, 2.0, 8.0)]);
        assert_eq!(merged.len(), 2);
        assert_eq!((merged[0].bw_pfs, merged[0].bw_bb), (2.0, 3.0));
        assert_eq!(merged[1].source, "16");
    }

    #[test]
    fn large_split_test_size() {
        let d = Dataset {
            schema: FeatureSchema::standard(),
            samples: vec![
                Sample {
                    vector: vec![0.0; 19],
                    label: Tier::PFS,
                    source: String::new(),
                    bw_pfs: None,
                    bw_bb: None,
                };
                2967
            ],
        };
        for seed in [0, 1, 42] {
            let (train, test) = d.split(0.1, seed).unwrap();
            assert_eq!(test.len(), 297);
            assert_eq!(train.len(), 2670);
        }
    }

    #[test]
    fn split_partitions_deterministically() {
        let d = toy(25);
        let (a_train, a_test) = d.split(0.2, 7).unwrap();
        let (b_train, b_test) = d.split(0.2, 7).unwrap();
        assert_eq!((&a_train, &a_test), (&b_train, &b_test));
        assert_eq!(a_test.len(), 5);
        let mut ids: Vec<String> = a_train
            .samples
            .iter()
            .chain(&a_test.samples)
            .map(|s| s.source.clone())
            .collect();
        ids.sort();
        let mut want: Vec<String> = d.samples.iter().map(|s| s.source.clone()).collect();
        want.sort();
        assert_eq!(ids, want);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(toy(1).split(0.1, 0), Err(DatasetError::TooSmall(1))));
        assert!(toy(5).split(0.0, 0).is_err());
        assert!(toy(5).split(1.0, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = toy(10);
        let mut buf = Vec::new();
        d.save_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("col_0,col_1,label,bw_pfs,bw_bb,source\n"));
        assert_eq!(Dataset::load_csv(&buf[..], &d.schema).unwrap(), d);
    }

    #[test]
    fn csv_empty() {
        let d = Dataset::empty(FeatureSchema::standard());
        let mut buf = Vec::new();
        d.save_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 1);
        assert!(Dataset::load_csv(&buf[..], &d.schema).unwrap().is_empty());
    }

    #[test]
    fn csv_short_row() {
        let schema = FeatureSchema::standard().project_for_test(5);
        let text = "col_0,col_1,col_2,col_3,col_4,label,bw_pfs,bw_bb,source\n\
                    0,0,0,0,0,PFS,1,2,a\n\
                    1,1,1,1,1,BB,1,2,b\n\
                    1,2,BB\n";
        let err = Dataset::load_csv(text.as_bytes(), &schema).unwrap_err();
        assert_eq!(err.to_string(), "row 4: expected 9 fields, found 3");
    }

    #[test]
    fn csv_bad_label() {
        let schema = toy(1).schema;
        let text = "col_0,col_1,label,bw_pfs,bw_bb,source\n1,2,SSD,,,x\n";
        let err = Dataset::load_csv(text.as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().starts_with("row 2: unknown tier"));
    }

    impl FeatureSchema {
        fn project_for_test(&self, width: usize) -> FeatureSchema {
            let d = Dataset::empty(self.clone());
            d.project(&(0..width).collect::<Vec<_>>()).schema
        }
    }

    proptest! {
        #[test]
        fn label_scale_invariant(a in 0.0f64..1e12, b in 0.0f64..1e12, k in 0u32..40) {
            let c = 2f64.powi(k as i32 - 20);
            prop_assert_eq!(label_pair(a, b).unwrap(), label_pair(a * c, b * c).unwrap());
        }

        #[test]
        fn label_scale_invariant_any_factor(a in 1.0f64..1e9, r in 0.5f64..2.0, c in 1e-3f64..1e3) {
            // away from ties, arbitrary factors keep the order
            prop_assume!((r - 1.0).abs() > 1e-9);
            let b = a * r;
            prop_assert_eq!(label_pair(a, b).unwrap(), label_pair(a * c, b * c).unwrap());
        }

        #[test]
        fn complementary_fractions_swap(n in 2usize..300, permille in 1u32..500, seed in any::<u64>()) {
            prop_assume!(permille * 2 != 1000);
            let d = toy(n);
            let f = permille as f64 / 1000.0;
            let (train, test) = d.split(f, seed).unwrap();
            let (train2, test2) = d.split(1.0 - f, seed).unwrap();
            prop_assert_eq!(&train, &test2);
            prop_assert_eq!(&test, &train2);
            prop_assert_eq!(train.len() + test.len(), n);
        }

        #[test]
        fn test_size_rounds_half_up(n in 2usize..5000, permille in 1u32..500) {
            let f = permille as f64 / 1000.0;
            let (_, test) = toy(n).split(f, 0).unwrap();
            // integer oracle: round(n * p / 1000) half-up
            let want = ((n as u64 * permille as u64 * 2 + 1000) / 2000) as usize;
            prop_assert_eq!(test.len(), want.clamp(1, n - 1));
        }
    }
}
