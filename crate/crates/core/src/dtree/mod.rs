//! Binary CART classifier over dataset vectors.

mod eval;
mod model;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use eval::{
    feature_elimination, feature_elimination_with, majority_baseline, repeated_baseline, repeated_eval,
    EliminationConfig, EvalReport, MajorityBaseline,
};
pub use model::{load_model, save_model, MODEL_HEADER};

use crate::dataset::{Dataset, Sample, Tier};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TreeError {
    #[error("cannot train or evaluate on an empty dataset")]
    Empty,
    #[error("vector has {found} values, model expects {expected}")]
    Width { expected: usize, found: usize },
    #[error("sample {index} has a non-finite value in column {column}")]
    NonFinite { index: usize, column: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("split: {0}")]
    Split(String),
    #[error("model: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_depth: u32,
    pub min_samples_split: usize,
    pub min_gain: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_depth: 12,
            min_samples_split: 2,
            min_gain: 1e-12,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.max_depth < 1 {
            return Err(TreeError::Config("max_depth must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(TreeError::Config("min_samples_split must be at least 2".into()));
        }
        if self.min_gain.is_nan() || self.min_gain < 0.0 {
            return Err(TreeError::Config("min_gain must be non-negative".into()));
        }
        Ok(())
    }
}

/// Class counts in `[PFS, BB]` order.
pub type ClassCounts = [u64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Internal {
        feature_index: usize,
        /// Vectors with `vector[feature_index] <= threshold` go left.
        threshold: f64,
        gain: f64,
        n: u64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: Tier,
        n: u64,
        class_counts: ClassCounts,
    },
}

impl TreeNode {
    pub fn n(&self) -> u64 {
        match self {
            TreeNode::Internal { n, .. } | TreeNode::Leaf { n, .. } => *n,
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub schema_width: usize,
    pub config: TrainConfig,
    pub importances: Vec<f64>,
    pub root: TreeNode,
}

/// A chosen split: left takes values `<= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature_index: usize,
    pub threshold: f64,
    pub left: ClassCounts,
    pub right: ClassCounts,
}

/// Twice the weighted Gini impurity of a child, times `n_child`:
/// `n·G = 2·pfs·bb / n`. Kept as the exact fraction `(2·pfs·bb, n)`.
fn weighted_impurity(c: ClassCounts) -> (u128, u128) {
    let n = (c[0] + c[1]) as u128;
    (2 * c[0] as u128 * c[1] as u128, n.max(1))
}

/// Sum of both children's `n·G` as an exact fraction.
fn children_impurity(l: ClassCounts, r: ClassCounts) -> (u128, u128) {
    let (a, b) = weighted_impurity(l);
    let (c, d) = weighted_impurity(r);
    (a * d + c * b, b * d)
}

fn cmp_fraction(x: (u128, u128), y: (u128, u128)) -> Ordering {
    (x.0 * y.1).cmp(&(y.0 * x.1))
}

fn gini(c: ClassCounts) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p, q) = (c[0] as f64 / n, c[1] as f64 / n);
    1.0 - p * p - q * q
}

/// Gini gain of a split as a float, for reporting and the `min_gain` stop.
pub fn gini_gain(left: ClassCounts, right: ClassCounts) -> f64 {
    let parent = [left[0] + right[0], left[1] + right[1]];
    let n = (parent[0] + parent[1]) as f64;
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    gini(parent) - (nl / n) * gini(left) - (nr / n) * gini(right)
}

fn counts_of(samples: &[&Sample]) -> ClassCounts {
    let mut c = [0u64; 2];
    for s in samples {
        c[s.label as usize] += 1;
    }
    c
}

/// Midpoint of two consecutive distinct values, never rounding up to `b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m >= a && m < b {
        m
    } else {
        a
    }
}

/// The best split of `samples`: minimum children impurity, ties to the lower
/// feature index then the lower threshold. `None` when no column has two
/// distinct values or no split lowers the impurity.
pub fn best_split(samples: &[&Sample], width: usize) -> Option<Split> {
    let total = counts_of(samples);
    let parent = weighted_impurity(total);
    let mut best: Option<((u128, u128), Split)> = None;
    let mut order: Vec<(f64, Tier)> = Vec::with_capacity(samples.len());
    for f in 0..width {
        order.clear();
        order.extend(samples.iter().map(|s| (s.vector[f], s.label)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0u64; 2];
        for i in 0..order.len().saturating_sub(1) {
            left[order[i].1 as usize] += 1;
            let (a, b) = (order[i].0, order[i + 1].0);
            if a == b {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let imp = children_impurity(left, right);
            if cmp_fraction(imp, parent) != Ordering::Less {
                continue;
            }
            if best
                .as_ref()
                .is_none_or(|(b, _)| cmp_fraction(imp, *b) == Ordering::Less)
            {
                best = Some((
                    imp,
                    Split {
                        feature_index: f,
                        threshold: midpoint(a, b),
                        left,
                        right,
                    },
                ));
            }
        }
    }
    best.map(|(_, s)| s)
}

fn majority(c: ClassCounts) -> Tier {
    if c[1] > c[0] {
        Tier::BB
    } else {
        Tier::PFS
    }
}

struct Builder<'a> {
    config: &'a TrainConfig,
    width: usize,
    n_total: f64,
    importances: Vec<f64>,
}

impl Builder<'_> {
    fn grow(&mut self, samples: Vec<&Sample>, depth: u32) -> TreeNode {
        let counts = counts_of(&samples);
        let n = samples.len() as u64;
        let leaf = TreeNode::Leaf {
            label: majority(counts),
            n,
            class_counts: counts,
        };
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || depth >= self.config.max_depth || samples.len() < self.config.min_samples_split {
            return leaf;
        }
        let Some(split) = best_split(&samples, self.width) else {
            return leaf;
        };
        let gain = gini_gain(split.left, split.right);
        if gain < self.config.min_gain || gain <= 0.0 {
            return leaf;
        }
        self.importances[split.feature_index] += (n as f64 / self.n_total) * gain;
        let (l, r): (Vec<&Sample>, Vec<&Sample>) = samples
            .into_iter()
            .partition(|s| s.vector[split.feature_index] <= split.threshold);
        TreeNode::Internal {
            feature_index: split.feature_index,
            threshold: split.threshold,
            gain,
            n,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }
}

pub fn fit(train: &Dataset, config: &TrainConfig) -> Result<DecisionTree, TreeError> {
    fit_samples(&train.samples, train.width(), config)
}

pub fn fit_samples(samples: &[Sample], width: usize, config: &TrainConfig) -> Result<DecisionTree, TreeError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(TreeError::Empty);
    }
    for (index, s) in samples.iter().enumerate() {
        if s.vector.len() != width {
            return Err(TreeError::Width {
                expected: width,
                found: s.vector.len(),
            });
        }
        if let Some(column) = s.vector.iter().position(|v| !v.is_finite()) {
            return Err(TreeError::NonFinite { index, column });
        }
    }
    let mut b = Builder {
        config,
        width,
        n_total: samples.len() as f64,
        importances: vec![0.0; width],
    };
    let root = b.grow(samples.iter().collect(), 0);
    let total: f64 = b.importances.iter().sum();
    if total > 0.0 {
        for v in &mut b.importances {
            *v /= total;
        }
    }
    Ok(DecisionTree {
        schema_width: width,
        config: *config,
        importances: b.importances,
        root,
    })
}

impl DecisionTree {
    pub fn predict(&self, vector: &[f64]) -> Result<Tier, TreeError> {
        if vector.len() != self.schema_width {
            return Err(TreeError::Width {
                expected: self.schema_width,
                found: vector.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return Ok(*label),
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if vector[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Feature indices sorted by descending importance, ties by index.
    pub fn ranked_importances(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = self.importances.iter().copied().enumerate().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }
}

pub fn predict(tree: &DecisionTree, vector: &[f64]) -> Result<Tier, TreeError> {
    tree.predict(vector)
}

/// Fraction of samples whose prediction equals the label.
pub fn accuracy(tree: &DecisionTree, test: &Dataset) -> Result<f64, TreeError> {
    if test.is_empty() {
        return Err(TreeError::Empty);
    }
    let mut hits = 0usize;
    for s in &test.samples {
        if tree.predict(&s.vector)? == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests;
