use std::fmt::Write as _;
use std::io::Write;

use tierlens::dataset::Tier;
use tierlens::dtree::DecisionTree;
use tierlens::features::{feature_fields, group_files_by_features, FeatureSchema, FileFeatures, FEATURE_CSV_HEADER};
use tierlens::trace::IOFrame;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRow {
    /// Group members in path order.
    pub files: Vec<String>,
    pub features: FileFeatures,
    pub predicted_tier: Tier,
}

/// One row per group of files with identical features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlacementPlan {
    pub rows: Vec<PlanRow>,
}

/// Groups the trace's files, encodes each group with `schema` and asks the
/// tree for a tier. The tree and schema widths must agree.
pub fn predict_plan(frame: &IOFrame, tree: &DecisionTree, schema: &FeatureSchema) -> Result<PlacementPlan, CliError> {
    if tree.schema_width != schema.width() {
        return Err(CliError::Data(format!(
            "model expects {} features but the schema encodes {}",
            tree.schema_width,
            schema.width()
        )));
    }
    let groups = group_files_by_features(frame).map_err(|e| CliError::Data(e.to_string()))?;
    let mut rows = Vec::with_capacity(groups.len());
    for g in groups {
        let vector = schema
            .encode(&g.features)
            .map_err(|e| CliError::Data(format!("{}: {e}", g.files[0])))?;
        let predicted_tier = tree.predict(&vector).map_err(|e| CliError::Data(e.to_string()))?;
        rows.push(PlanRow {
            files: g.files,
            features: g.features,
            predicted_tier,
        });
    }
    Ok(PlacementPlan { rows })
}

impl PlacementPlan {
    /// Columns: `files` joined by `;`, the feature columns, `predicted_tier`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["files"];
        header.extend(&FEATURE_CSV_HEADER[1..]);
        header.push("predicted_tier");
        w.write_record(&header)?;
        for r in &self.rows {
            let mut record = vec![r.files.join(";")];
            record.extend(feature_fields(&r.features));
            record.push(r.predicted_tier.to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<40} {:>5} {:<6} {:<5} {:>12} {:>7} {:>7}  tier",
            "file", "files", "iface", "type", "transfer", "reads", "writes"
        );
        for r in &self.rows {
            let f = &r.features;
            let _ = writeln!(
                s,
                "{:<40} {:>5} {:<6} {:<5} {:>12} {:>7} {:>7}  {}",
                r.files[0],
                r.files.len(),
                f.interface,
                f.io_type,
                f.transfer_size_mean,
                f.num_reads,
                f.num_writes,
                r.predicted_tier
            );
        }
        s
    }
}
