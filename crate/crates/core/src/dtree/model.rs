use std::io::{Read, Write};

use serde::Deserialize;
use serde_json::Value;

use super::{DecisionTree, TrainConfig, TreeError, TreeNode};

pub const MODEL_HEADER: &str = "tierlens-model v1";

/// Writes the header line followed by the tree as pretty JSON.
pub fn save_model<W: Write>(tree: &DecisionTree, mut out: W) -> Result<(), TreeError> {
    let io = |e: std::io::Error| TreeError::Model(e.to_string());
    writeln!(out, "{MODEL_HEADER}").map_err(io)?;
    serde_json::to_writer_pretty(&mut out, tree).map_err(|e| TreeError::Model(e.to_string()))?;
    writeln!(out).map_err(io)?;
    Ok(())
}

pub fn load_model<R: Read>(mut input: R) -> Result<DecisionTree, TreeError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| TreeError::Model(e.to_string()))?;
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    if first.trim_end() != MODEL_HEADER {
        return Err(TreeError::Model(format!("missing `{MODEL_HEADER}` header line")));
    }
    let de = &mut serde_json::Deserializer::from_str(body);
    let doc: Document = serde_path_to_error::deserialize(de)
        .map_err(|e| TreeError::Model(format!("at `{}`: {}", e.path(), e.inner())))?;
    let tree = DecisionTree {
        schema_width: doc.schema_width,
        config: doc.config,
        importances: doc.importances,
        root: node_from_value(doc.root, "root")?,
    };
    validate(&tree)?;
    Ok(tree)
}

/// Top level of a model file. Nodes are decoded by [`node_from_value`] so
/// errors can name the node path, which tagged-enum decoding loses.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_width: usize,
    config: TrainConfig,
    importances: Vec<f64>,
    root: Value,
}

fn node_from_value(mut v: Value, path: &str) -> Result<TreeNode, TreeError> {
    let err = |reason: String| TreeError::Model(format!("at `{path}`: {reason}"));
    let obj = v.as_object_mut().ok_or_else(|| err("node is not an object".into()))?;
    if obj.get("kind").and_then(Value::as_str) == Some("internal") {
        let left = obj.remove("left").ok_or_else(|| err("missing field `left`".into()))?;
        let right = obj.remove("right").ok_or_else(|| err("missing field `right`".into()))?;
        let left = node_from_value(left, &format!("{path}.left"))?;
        let right = node_from_value(right, &format!("{path}.right"))?;
        obj.insert("left".into(), serde_json::to_value(&left).expect("node serializes"));
        obj.insert("right".into(), serde_json::to_value(&right).expect("node serializes"));
    }
    serde_path_to_error::deserialize(v).map_err(|e| match e.path().to_string().as_str() {
        "." => err(e.inner().to_string()),
        field => err(format!("field `{field}`: {}", e.inner())),
    })
}

fn validate(tree: &DecisionTree) -> Result<(), TreeError> {
    tree.config.validate()?;
    if tree.importances.len() != tree.schema_width {
        return Err(TreeError::Model(format!(
            "at `importances`: {} values for schema width {}",
            tree.importances.len(),
            tree.schema_width
        )));
    }
    validate_node(&tree.root, "root", tree.schema_width)
}

fn validate_node(node: &TreeNode, path: &str, width: usize) -> Result<(), TreeError> {
    let bad = |reason: String| Err(TreeError::Model(format!("at `{path}`: {reason}")));
    match node {
        TreeNode::Leaf { n, class_counts, .. } => {
            if class_counts[0] + class_counts[1] != *n {
                return bad(format!("class counts {class_counts:?} do not sum to n = {n}"));
            }
            Ok(())
        }
        TreeNode::Internal {
            feature_index,
            threshold,
            gain,
            n,
            left,
            right,
        } => {
            if *feature_index >= width {
                return bad(format!("feature_index {feature_index} outside width {width}"));
            }
            if !threshold.is_finite() {
                return bad("threshold is not finite".into());
            }
            if gain.is_nan() || *gain <= 0.0 {
                return bad(format!("gain {gain} is not positive"));
            }
            if left.n() + right.n() != *n {
                return bad(format!("children hold {} samples, node has {n}", left.n() + right.n()));
            }
            validate_node(left, &format!("{path}.left"), width)?;
            validate_node(right, &format!("{path}.right"), width)
        }
    }
}
