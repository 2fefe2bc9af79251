use serde::{Deserialize, Serialize};

use super::{accuracy, fit, TrainConfig, TreeError};
use crate::dataset::{Dataset, Tier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `accuracies`.
    pub stddev: f64,
    pub n_repeats: usize,
}

impl EvalReport {
    pub fn from_accuracies(accuracies: Vec<f64>) -> Self {
        let n = accuracies.len().max(1) as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        EvalReport {
            n_repeats: accuracies.len(),
            mean,
            stddev: var.sqrt(),
            accuracies,
        }
    }
}

/// Repeat `i` splits with seed `seed + i`, fits on the train side and scores
/// the test side.
pub fn repeated_eval(
    dataset: &Dataset,
    config: &TrainConfig,
    n_repeats: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<EvalReport, TreeError> {
    if n_repeats == 0 {
        return Err(TreeError::Config("n_repeats must be at least 1".into()));
    }
    let mut accuracies = Vec::with_capacity(n_repeats);
    for i in 0..n_repeats {
        let (train, test) = dataset
            .split(test_fraction, seed.wrapping_add(i as u64))
            .map_err(|e| TreeError::Split(e.to_string()))?;
        let tree = fit(&train, config)?;
        accuracies.push(accuracy(&tree, &test)?);
    }
    Ok(EvalReport::from_accuracies(accuracies))
}

/// Evaluation settings used by [`feature_elimination`] at each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationConfig {
    pub n_repeats: usize,
    pub test_fraction: f64,
    pub drop_tolerance: f64,
}

impl Default for EliminationConfig {
    fn default() -> Self {
        EliminationConfig {
            n_repeats: 10,
            test_fraction: 0.1,
            drop_tolerance: 0.02,
        }
    }
}

/// Removes the least important feature (ties: highest index) one at a time
/// while mean accuracy stays within `drop_tolerance` of the best seen.
/// Returns the last feature set before the drop, in original column indices.
pub fn feature_elimination(
    dataset: &Dataset,
    config: &TrainConfig,
    drop_tolerance: f64,
) -> Result<(Vec<usize>, EvalReport), TreeError> {
    feature_elimination_with(
        dataset,
        config,
        &EliminationConfig {
            drop_tolerance,
            ..Default::default()
        },
    )
}

pub fn feature_elimination_with(
    dataset: &Dataset,
    config: &TrainConfig,
    opts: &EliminationConfig,
) -> Result<(Vec<usize>, EvalReport), TreeError> {
    if dataset.is_empty() {
        return Err(TreeError::Empty);
    }
    let eval = |cols: &[usize]| {
        repeated_eval(
            &dataset.project(cols),
            config,
            opts.n_repeats,
            opts.test_fraction,
            config.seed,
        )
    };
    let mut current: Vec<usize> = (0..dataset.width()).collect();
    let mut report = eval(&current)?;
    let mut best = report.mean;
    while current.len() > 1 {
        let tree = fit(&dataset.project(&current), config)?;
        let victim = tree
            .importances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("at least one column");
        let mut candidate = current.clone();
        candidate.remove(victim);
        let candidate_report = eval(&candidate)?;
        if candidate_report.mean < best - opts.drop_tolerance {
            break;
        }
        best = best.max(candidate_report.mean);
        current = candidate;
        report = candidate_report;
    }
    Ok((current, report))
}

/// Constant classifier predicting the training majority.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MajorityBaseline {
    pub label: Tier,
}

impl MajorityBaseline {
    pub fn predict(&self, _vector: &[f64]) -> Tier {
        self.label
    }

    pub fn accuracy(&self, test: &Dataset) -> Result<f64, TreeError> {
        if test.is_empty() {
            return Err(TreeError::Empty);
        }
        Ok(test.count(self.label) as f64 / test.len() as f64)
    }
}

/// Majority class of `train`, ties to PFS.
pub fn majority_baseline(train: &Dataset) -> Result<MajorityBaseline, TreeError> {
    if train.is_empty() {
        return Err(TreeError::Empty);
    }
    let label = if train.count(Tier::BB) > train.count(Tier::PFS) {
        Tier::BB
    } else {
        Tier::PFS
    };
    Ok(MajorityBaseline { label })
}

/// Held-out baseline accuracy over the same splits [`repeated_eval`] uses.
pub fn repeated_baseline(
    dataset: &Dataset,
    n_repeats: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<EvalReport, TreeError> {
    let mut accuracies = Vec::with_capacity(n_repeats);
    for i in 0..n_repeats {
        let (train, test) = dataset
            .split(test_fraction, seed.wrapping_add(i as u64))
            .map_err(|e| TreeError::Split(e.to_string()))?;
        accuracies.push(majority_baseline(&train)?.accuracy(&test)?);
    }
    Ok(EvalReport::from_accuracies(accuracies))
}
