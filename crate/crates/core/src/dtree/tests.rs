use num::{BigInt, BigRational, One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataset::{Dataset, Sample, Tier};
use crate::features::{FeatureField, FeatureSchema};

fn schema(width: usize) -> FeatureSchema {
    let mut s = FeatureSchema::from_fields(&[(FeatureField::TransferSize, &[])]).unwrap();
    let col = s.columns[0].clone();
    s.columns = (0..width)
        .map(|i| {
            let mut c = col.clone();
            c.index = i;
            c.name = format!("x{i}");
            c
        })
        .collect();
    s
}

fn data(rows: &[(Vec<f64>, Tier)]) -> Dataset {
    let width = rows.first().map_or(1, |r| r.0.len());
    let samples = rows
        .iter()
        .enumerate()
        .map(|(i, (v, t))| Sample {
            vector: v.clone(),
            label: *t,
            source: format!("r{i}"),
            bw_pfs: None,
            bw_bb: None,
        })
        .collect();
    Dataset::new(schema(width), samples).unwrap()
}

use Tier::{BB, PFS};

/// Exhaustive root-split oracle in exact rationals, straight from the Gini
/// definition. Returns `(feature, lower value, upper value)` of the winning
/// gap, or `None` when no split has positive gain.
fn oracle_root(d: &Dataset) -> Option<(usize, f64, f64)> {
    let gini = |p: u64, b: u64| -> BigRational {
        let n = p + b;
        if n == 0 {
            return BigRational::zero();
        }
        let n = BigInt::from(n);
        let fp = BigRational::new(BigInt::from(p), n.clone());
        let fb = BigRational::new(BigInt::from(b), n);
        BigRational::one() - &fp * &fp - &fb * &fb
    };
    let count = |it: &mut dyn Iterator<Item = &Sample>| {
        it.fold((0u64, 0u64), |(p, b), s| match s.label {
            PFS => (p + 1, b),
            BB => (p, b + 1),
        })
    };
    let (tp, tb) = count(&mut d.samples.iter());
    let n = BigRational::from_integer(BigInt::from(tp + tb));
    let parent = gini(tp, tb);
    let mut best: Option<(BigRational, usize, f64, f64)> = None;
    for f in 0..d.width() {
        let mut values: Vec<f64> = d.samples.iter().map(|s| s.vector[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let (lp, lb) = count(&mut d.samples.iter().filter(|s| s.vector[f] <= w[0]));
            let (rp, rb) = (tp - lp, tb - lb);
            let nl = BigRational::from_integer(BigInt::from(lp + lb));
            let nr = BigRational::from_integer(BigInt::from(rp + rb));
            let gain = &parent - (nl / &n) * gini(lp, lb) - (nr / &n) * gini(rp, rb);
            if gain <= BigRational::zero() {
                continue;
            }
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, f, w[0], w[1]));
            }
        }
    }
    best.map(|(_, f, a, b)| (f, a, b))
}

fn assert_root_matches_oracle(d: &Dataset) {
    let tree = fit(d, &TrainConfig::default()).unwrap();
    match (oracle_root(d), &tree.root) {
        (None, TreeNode::Leaf { .. }) => {}
        (
            Some((f, a, b)),
            TreeNode::Internal {
                feature_index,
                threshold,
                ..
            },
        ) => {
            assert_eq!(*feature_index, f);
            assert!(*threshold >= a && *threshold < b, "{threshold} not in [{a}, {b})");
        }
        (o, r) => panic!("oracle {o:?} vs root {r:?}"),
    }
}

fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let n = rng.random_range(2..=200);
    let width = rng.random_range(1..=8);
    let levels = rng.random_range(2..=12);
    let rows: Vec<(Vec<f64>, Tier)> = (0..n)
        .map(|_| {
            let v = (0..width).map(|_| rng.random_range(0..levels) as f64 * 0.25).collect();
            (v, if rng.random_bool(0.4) { BB } else { PFS })
        })
        .collect();
    data(&rows)
}

#[test]
fn pure_training_set_is_a_leaf() {
    let tree = fit(
        &data(&[(vec![1.0], BB), (vec![2.0], BB), (vec![3.0], BB)]),
        &TrainConfig::default(),
    )
    .unwrap();
    assert_eq!(
        tree.root,
        TreeNode::Leaf {
            label: BB,
            n: 3,
            class_counts: [0, 3]
        }
    );
    assert_eq!(tree.importances, vec![0.0]);
    assert_eq!(tree.predict(&[100.0]).unwrap(), BB);
}

#[test]
fn one_dimensional_threshold() {
    let d = data(&[(vec![0.0], PFS), (vec![1.0], PFS), (vec![2.0], BB), (vec![3.0], BB)]);
    assert_eq!(oracle_root(&d), Some((0, 1.0, 2.0)));
    let tree = fit(&d, &TrainConfig::default()).unwrap();
    match &tree.root {
        TreeNode::Internal {
            feature_index,
            threshold,
            left,
            right,
            ..
        } => {
            assert_eq!((*feature_index, *threshold), (0, 1.5));
            assert!(matches!(**left, TreeNode::Leaf { label: PFS, n: 2, .. }));
            assert!(matches!(**right, TreeNode::Leaf { label: BB, n: 2, .. }));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(tree.importances, vec![1.0]);
    assert_eq!(tree.predict(&[0.0]).unwrap(), PFS);
    // boundary value goes left
    assert_eq!(tree.predict(&[1.5]).unwrap(), PFS);
    assert_eq!(tree.predict(&[1.6]).unwrap(), BB);
    assert!(tree.predict(&[0.0, 1.0]).is_err());
}

#[test]
fn two_feature_interaction_needs_depth_two() {
    // corner (0,0) is PFS, others BB
    let d = data(&[
        (vec![0.0, 0.0], PFS),
        (vec![0.0, 1.0], BB),
        (vec![1.0, 0.0], BB),
        (vec![1.0, 1.0], BB),
    ]);
    assert_root_matches_oracle(&d);
    let tree = fit(&d, &TrainConfig::default()).unwrap();
    assert_eq!(tree.root.depth(), 2);
    assert_eq!(accuracy(&tree, &d).unwrap(), 1.0);
    let sum: f64 = tree.importances.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn exact_xor_has_no_positive_root_gain() {
    let d = data(&[
        (vec![0.0, 0.0], PFS),
        (vec![0.0, 1.0], BB),
        (vec![1.0, 0.0], BB),
        (vec![1.0, 1.0], PFS),
    ]);
    assert_eq!(oracle_root(&d), None);
    let tree = fit(&d, &TrainConfig::default()).unwrap();
    assert_eq!(
        tree.root,
        TreeNode::Leaf {
            label: PFS,
            n: 4,
            class_counts: [2, 2]
        }
    );
}

#[test]
fn tie_break_prefers_lower_feature() {
    // both columns separate the classes perfectly
    let d = data(&[(vec![0.0, 5.0], PFS), (vec![1.0, 6.0], BB)]);
    let tree = fit(&d, &TrainConfig::default()).unwrap();
    assert!(matches!(tree.root, TreeNode::Internal { feature_index: 0, threshold, .. } if threshold == 0.5));
}

#[test]
fn tie_break_prefers_lower_threshold() {
    // splits after 1st and after 3rd sample tie on gain
    let d = data(&[(vec![0.0], PFS), (vec![1.0], BB), (vec![2.0], BB), (vec![3.0], PFS)]);
    assert_eq!(oracle_root(&d), Some((0, 0.0, 1.0)));
    assert_root_matches_oracle(&d);
}

#[test]
fn errors() {
    let empty = Dataset::empty(schema(2));
    assert_eq!(fit(&empty, &TrainConfig::default()).unwrap_err(), TreeError::Empty);
    let d = data(&[(vec![0.0], PFS)]);
    let bad = TrainConfig {
        max_depth: 0,
        ..Default::default()
    };
    assert!(matches!(fit(&d, &bad), Err(TreeError::Config(_))));
    let bad = TrainConfig {
        min_samples_split: 1,
        ..Default::default()
    };
    assert!(matches!(fit(&d, &bad), Err(TreeError::Config(_))));
    let tree = fit(&d, &TrainConfig::default()).unwrap();
    assert_eq!(accuracy(&tree, &empty).unwrap_err(), TreeError::Empty);
    let mut wide = d.clone();
    wide.samples[0].vector = vec![f64::NAN];
    assert!(matches!(
        fit(&wide, &TrainConfig::default()),
        Err(TreeError::NonFinite { .. })
    ));
}

#[test]
fn constant_prediction_accuracy() {
    let train = data(&[(vec![0.0], BB)]);
    let tree = fit(&train, &TrainConfig::default()).unwrap();
    let test = data(&[(vec![0.0], BB), (vec![1.0], BB), (vec![2.0], BB), (vec![3.0], PFS)]);
    assert_eq!(accuracy(&tree, &test).unwrap(), 0.75);
}

#[test]
fn accuracy_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let train = random_dataset(&mut rng);
    let tree = fit(
        &train,
        &TrainConfig {
            max_depth: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let rows: Vec<(Vec<f64>, Tier)> = (0..100)
        .map(|_| {
            let v = (0..train.width()).map(|_| rng.random_range(0.0..3.0)).collect();
            (v, if rng.random_bool(0.5) { BB } else { PFS })
        })
        .collect();
    let test = data(&rows);
    let mut hits = 0;
    for (v, t) in &rows {
        // manual descent
        let mut node = &tree.root;
        let got = loop {
            match node {
                TreeNode::Leaf { label, .. } => break *label,
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if v[*feature_index] > *threshold { right } else { left };
                }
            }
        };
        hits += (got == *t) as usize;
    }
    assert_eq!(accuracy(&tree, &test).unwrap(), hits as f64 / 100.0);
}

#[test]
fn root_matches_oracle_on_random_datasets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        assert_root_matches_oracle(&random_dataset(&mut rng));
    }
}

#[test]
fn stopping_rules() {
    let d = data(&[(vec![0.0], PFS), (vec![1.0], BB), (vec![2.0], PFS), (vec![3.0], BB)]);
    let stump = fit(
        &d,
        &TrainConfig {
            max_depth: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(stump.root.depth(), 1);
    let no_split = fit(
        &d,
        &TrainConfig {
            min_samples_split: 5,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(no_split.root.depth(), 0);
    let high_gain = fit(
        &d,
        &TrainConfig {
            min_gain: 0.5,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(high_gain.root.depth(), 0);
    let full = fit(&d, &TrainConfig::default()).unwrap();
    assert_eq!(accuracy(&full, &d).unwrap(), 1.0);
}

#[test]
fn leaf_tie_goes_to_pfs() {
    // identical vectors, different labels: unsplittable tie
    let d = data(&[(vec![1.0], BB), (vec![1.0], PFS)]);
    let tree = fit(&d, &TrainConfig::default()).unwrap();
    assert_eq!(tree.predict(&[1.0]).unwrap(), PFS);
}

fn depth3_tree() -> (DecisionTree, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<(Vec<f64>, Tier)> = (0..150)
        .map(|_| {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
            let t = if v[0] * v[1] > v[2] { BB } else { PFS };
            (v, t)
        })
        .collect();
    let tree = fit(
        &data(&rows),
        &TrainConfig {
            max_depth: 3,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(tree.root.depth(), 3);
    (tree, 3)
}

#[test]
fn model_round_trip() {
    let (tree, width) = depth3_tree();
    let mut buf = Vec::new();
    save_model(&tree, &mut buf).unwrap();
    assert!(buf.starts_with(b"tierlens-model v1\n"));
    let loaded = load_model(&buf[..]).unwrap();
    assert_eq!(loaded, tree);
    for (a, b) in loaded.importances.iter().zip(&tree.importances) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let v: Vec<f64> = (0..width).map(|_| rng.random_range(-12.0..12.0)).collect();
        assert_eq!(loaded.predict(&v).unwrap(), tree.predict(&v).unwrap());
    }
    let mut again = Vec::new();
    save_model(&loaded, &mut again).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn truncated_model_is_an_error() {
    let (tree, _) = depth3_tree();
    let mut buf = Vec::new();
    save_model(&tree, &mut buf).unwrap();
    let err = load_model(&buf[..buf.len() / 2]).unwrap_err();
    assert!(matches!(err, TreeError::Model(_)));
    assert!(load_model(&b"not a model\n{}"[..]).is_err());
}

#[test]
fn malformed_node_error_names_path() {
    let (tree, _) = depth3_tree();
    let mut buf = Vec::new();
    save_model(&tree, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    // a leaf label outside the tier set, wherever the first leaf is
    let broken = text.replacen("\"label\": \"", "\"label\": \"X", 1);
    let msg = load_model(broken.as_bytes()).unwrap_err().to_string();
    assert!(msg.contains("root.left") || msg.contains("root.right"), "{msg}");

    let mut bad = tree.clone();
    if let TreeNode::Internal { left, .. } = &mut bad.root {
        if let TreeNode::Internal { gain, .. } = left.as_mut() {
            *gain = -1.0;
        }
    }
    let mut buf = Vec::new();
    save_model(&bad, &mut buf).unwrap();
    let msg = load_model(&buf[..]).unwrap_err().to_string();
    assert!(msg.contains("at `root.left`"), "{msg}");
}

#[test]
fn training_is_byte_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = random_dataset(&mut rng);
    let save = |t: &DecisionTree| {
        let mut b = Vec::new();
        save_model(t, &mut b).unwrap();
        b
    };
    let a = fit(&d, &TrainConfig::default()).unwrap();
    let b = fit(&d, &TrainConfig::default()).unwrap();
    assert_eq!(save(&a), save(&b));
}

fn grid_dataset(f: impl Fn(f64, f64) -> Tier) -> Dataset {
    let mut rows = Vec::new();
    for i in 0..20 {
        for j in 0..20 {
            let (x, y) = (i as f64, j as f64);
            rows.push((vec![x, y], f(x, y)));
        }
    }
    data(&rows)
}

#[test]
fn repeated_eval_protocol() {
    let d = grid_dataset(|x, _| if x >= 10.0 { BB } else { PFS });
    let a = repeated_eval(&d, &TrainConfig::default(), 10, 0.1, 42).unwrap();
    let b = repeated_eval(&d, &TrainConfig::default(), 10, 0.1, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_repeats, 10);
    assert_eq!(a.accuracies.len(), 10);
    let mean = a.accuracies.iter().sum::<f64>() / 10.0;
    assert!((a.mean - mean).abs() < 1e-12);
    assert!(a.mean >= 0.98);
    assert!(repeated_eval(&d, &TrainConfig::default(), 0, 0.1, 0).is_err());
}

#[test]
fn repeated_eval_uses_consecutive_seeds() {
    let d = grid_dataset(|x, y| if x + y > 19.0 { BB } else { PFS });
    let report = repeated_eval(&d, &TrainConfig::default(), 3, 0.1, 7).unwrap();
    for (i, acc) in report.accuracies.iter().enumerate() {
        let (train, test) = d.split(0.1, 7 + i as u64).unwrap();
        let tree = fit(&train, &TrainConfig::default()).unwrap();
        assert_eq!(*acc, accuracy(&tree, &test).unwrap());
    }
}

#[test]
fn elimination_drops_constant_feature() {
    let mut rows = Vec::new();
    for i in 0..60 {
        rows.push((vec![3.0, i as f64], if i >= 30 { BB } else { PFS }));
    }
    let d = data(&rows);
    let cfg = TrainConfig::default();
    let full = repeated_eval(&d, &cfg, 10, 0.1, cfg.seed).unwrap();
    let (kept, report) = feature_elimination(&d, &cfg, 0.02).unwrap();
    assert_eq!(kept, vec![1]);
    assert_eq!(report.mean, full.mean);
}

#[test]
fn elimination_keeps_required_features() {
    let d = grid_dataset(|x, y| if x + y > 19.0 { BB } else { PFS });
    let (kept, _) = feature_elimination(&d, &TrainConfig::default(), 0.0).unwrap();
    assert_eq!(kept, vec![0, 1]);
}

#[test]
fn elimination_with_loose_tolerance_keeps_one() {
    let d = grid_dataset(|x, y| if x + y > 19.0 { BB } else { PFS });
    let (kept, _) = feature_elimination(&d, &TrainConfig::default(), 1.0).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(
        feature_elimination(&Dataset::empty(schema(2)), &TrainConfig::default(), 0.1).unwrap_err(),
        TreeError::Empty
    );
}

#[test]
fn baseline() {
    let d = data(&[(vec![0.0], BB), (vec![0.0], BB), (vec![0.0], BB), (vec![0.0], PFS)]);
    let m = majority_baseline(&d).unwrap();
    assert_eq!(m.label, BB);
    assert_eq!(m.accuracy(&d).unwrap(), 0.75);
    let tie = data(&[(vec![0.0], BB), (vec![0.0], PFS)]);
    assert_eq!(majority_baseline(&tie).unwrap().label, PFS);
    assert!(majority_baseline(&Dataset::empty(schema(1))).is_err());
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    (1usize..=4, 2usize..=60).prop_flat_map(|(width, n)| {
        prop::collection::vec((prop::collection::vec(0u8..8, width), any::<bool>()), n).prop_map(|rows| {
            data(
                &rows
                    .into_iter()
                    .map(|(v, b)| (v.into_iter().map(f64::from).collect(), if b { BB } else { PFS }))
                    .collect::<Vec<_>>(),
            )
        })
    })
}

fn train_predictions(tree: &DecisionTree, d: &Dataset) -> Vec<Tier> {
    d.samples.iter().map(|s| tree.predict(&s.vector).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn root_equals_exhaustive_argmax(d in arb_dataset()) {
        assert_root_matches_oracle(&d);
    }

    #[test]
    fn monotone_transform_keeps_predictions(d in arb_dataset(), col in 0usize..4, scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let col = col % d.width();
        let mut t = d.clone();
        for s in &mut t.samples {
            let x = s.vector[col];
            s.vector[col] = (x * scale + shift).exp();
        }
        let cfg = TrainConfig::default();
        let a = fit(&d, &cfg).unwrap();
        let b = fit(&t, &cfg).unwrap();
        prop_assert_eq!(train_predictions(&a, &d), train_predictions(&b, &t));
    }

    #[test]
    fn importances_normalized_and_permute(d in arb_dataset(), rot in 0usize..4) {
        let cfg = TrainConfig::default();
        let tree = fit(&d, &cfg).unwrap();
        prop_assert!(tree.importances.iter().all(|&v| v >= 0.0));
        let sum: f64 = tree.importances.iter().sum();
        if matches!(tree.root, TreeNode::Internal { .. }) {
            prop_assert!((sum - 1.0).abs() < 1e-9);
        } else {
            prop_assert_eq!(sum, 0.0);
        }
        // reversing the column order reverses importances when no tie
        // between columns decides a split
        let w = d.width();
        let perm: Vec<usize> = (0..w).map(|i| (i + rot) % w).collect();
        let p = d.project(&perm);
        let pt = fit(&p, &cfg).unwrap();
        let distinct_columns = (0..w).all(|a| (a + 1..w).all(|b| {
            d.samples.iter().any(|s| s.vector[a] != s.vector[b])
        }));
        if distinct_columns && !has_cross_feature_tie(&d) {
            for (i, &c) in perm.iter().enumerate() {
                prop_assert!((pt.importances[i] - tree.importances[c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deeper_never_less_accurate(d in arb_dataset()) {
        let mut prev = 0.0;
        for depth in 1..=6 {
            let tree = fit(&d, &TrainConfig { max_depth: depth, ..Default::default() }).unwrap();
            let acc = accuracy(&tree, &d).unwrap();
            prop_assert!(acc >= prev);
            prev = acc;
        }
    }
}

/// True when some node of the fitted tree had two features tie for the best
/// split, in which case column order legitimately changes the tree.
fn has_cross_feature_tie(d: &Dataset) -> bool {
    fn walk(samples: Vec<&Sample>, width: usize, depth: u32) -> bool {
        let counts = counts_of(&samples);
        if counts[0] == 0 || counts[1] == 0 || depth >= 12 || samples.len() < 2 {
            return false;
        }
        let Some(best) = best_split(&samples, width) else {
            return false;
        };
        let best_imp = children_impurity(best.left, best.right);
        for f in 0..width {
            if f == best.feature_index {
                continue;
            }
            let only: Vec<Sample> = samples
                .iter()
                .map(|s| Sample {
                    vector: vec![s.vector[f]],
                    ..(*s).clone()
                })
                .collect();
            let refs: Vec<&Sample> = only.iter().collect();
            if let Some(s) = best_split(&refs, 1) {
                if cmp_fraction(children_impurity(s.left, s.right), best_imp) == Ordering::Equal {
                    return true;
                }
            }
        }
        let (l, r): (Vec<&Sample>, Vec<&Sample>) = samples
            .into_iter()
            .partition(|s| s.vector[best.feature_index] <= best.threshold);
        walk(l, width, depth + 1) || walk(r, width, depth + 1)
    }
    walk(d.samples.iter().collect(), d.width(), 0)
}
