//! Multinomial gradient boosting with two-split regression trees.
//!
//! Each iteration fits one least-squares tree per class to the residuals
//! `y_k - p_k` of the softmax model, then sets leaf values by a single
//! Newton step `(K-1)/K * sum(r) / sum(|r| (1 - |r|))` (Friedman, 2001).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Emotion;
use crate::learners::{argmax_first, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbParams {
    pub shrinkage: f64,
    pub max_trees: usize,
}

impl Default for GbParams {
    fn default() -> Self {
        GbParams {
            shrinkage: 0.1,
            max_trees: 300,
        }
    }
}

/// Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Squared-error reduction achieved on the training residuals.
    pub gain: f64,
}

/// A regression tree with exactly two internal nodes. `second` splits the
/// left child of `root` when `second_on_left`, the right child otherwise.
/// Leaves are numbered left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSplitTree {
    pub root: Split,
    pub second: Split,
    pub second_on_left: bool,
    pub leaves: [f64; 3],
}

impl TwoSplitTree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let goes_left = x[self.root.feature] <= self.root.threshold;
        let second_left = x[self.second.feature] <= self.second.threshold;
        match (self.second_on_left, goes_left) {
            (true, true) => usize::from(!second_left),
            (true, false) => 2,
            (false, true) => 0,
            (false, false) => 1 + usize::from(!second_left),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.leaves[self.leaf_index(x)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbModel {
    classes: Vec<Emotion>,
    shrinkage: f64,
    initial_scores: Vec<f64>,
    /// `trees[t][k]` is the tree for class `k` at iteration `t`.
    trees: Vec<Vec<TwoSplitTree>>,
    dimension: usize,
    /// Mean training negative log-likelihood before any tree and after each
    /// iteration.
    train_deviance: Vec<f64>,
    /// Validation accuracy with `t` trees per class at index `t - 1`.
    validation_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbPrediction {
    pub label: Emotion,
    /// Raw scores aligned with [`GbModel::classes`].
    pub scores: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl GbModel {
    pub fn classes(&self) -> &[Emotion] {
        &self.classes
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn initial_scores(&self) -> &[f64] {
        &self.initial_scores
    }

    pub fn trees(&self) -> &[Vec<TwoSplitTree>] {
        &self.trees
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn train_deviance(&self) -> &[f64] {
        &self.train_deviance
    }

    pub fn validation_accuracy(&self) -> &[f64] {
        &self.validation_accuracy
    }

    /// Raw class scores using only the first `trees` iterations.
    pub fn staged_scores(&self, x: &[f64], trees: usize) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        let mut scores = self.initial_scores.clone();
        for round in self.trees.iter().take(trees) {
            for (s, tree) in scores.iter_mut().zip(round) {
                *s += self.shrinkage * tree.value(x);
            }
        }
        Ok(scores)
    }

    pub fn predict_staged(&self, x: &[f64], trees: usize) -> Result<GbPrediction> {
        let scores = self.staged_scores(x, trees)?;
        let probabilities = softmax(&scores);
        Ok(GbPrediction {
            label: self.classes[argmax_first(&scores)],
            scores,
            probabilities,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<GbPrediction> {
        self.predict_staged(x, self.trees.len())
    }

    /// The same model keeping only the first `trees` iterations.
    pub fn truncated(&self, trees: usize) -> GbModel {
        let mut out = self.clone();
        out.trees.truncate(trees);
        out
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Trains up to `params.max_trees` iterations and keeps the count with the
/// best validation accuracy (earliest on ties).
pub fn gb_train(train: &LabeledDataset, validate: &LabeledDataset, params: GbParams) -> Result<GbModel> {
    if validate.is_empty() {
        return Err(Error::EmptyInput("validation set is empty".into()));
    }
    if validate.spec() != train.spec() {
        return Err(Error::InvalidValue(
            "training and validation features use different specs".into(),
        ));
    }
    let mut model = fit(train, Some(validate), params)?;
    let best = argmax_first(&model.validation_accuracy) + 1;
    model.trees.truncate(best);
    Ok(model)
}

/// Trains exactly `params.max_trees` iterations with no validation data.
pub fn gb_train_fixed(train: &LabeledDataset, params: GbParams) -> Result<GbModel> {
    fit(train, None, params)
}

/// Per-feature sum of split gains over every tree, normalized to sum to 1.
/// All zeros when no split has positive gain.
pub fn gb_influence(model: &GbModel) -> Vec<f64> {
    let mut influence = vec![0.0; model.dimension];
    for tree in model.trees.iter().flatten() {
        for split in [tree.root, tree.second] {
            influence[split.feature] += split.gain.max(0.0);
        }
    }
    let total: f64 = influence.iter().sum();
    if total > 0.0 {
        for v in &mut influence {
            *v /= total;
        }
    }
    influence
}

fn fit(train: &LabeledDataset, validate: Option<&LabeledDataset>, params: GbParams) -> Result<GbModel> {
    if !(params.shrinkage > 0.0 && params.shrinkage.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "shrinkage must be positive, got {}",
            params.shrinkage
        )));
    }
    if params.max_trees == 0 {
        return Err(Error::InvalidConfig("max_trees must be at least 1".into()));
    }
    let classes = train.classes_present();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let k = classes.len();
    let n = train.len();
    let dimension = train.dimension();

    let order = train.canonical_order();
    let rows: Vec<&[f64]> = order.iter().map(|&i| train.rows()[i].as_slice()).collect();
    let targets: Vec<usize> = order
        .iter()
        .map(|&i| classes.binary_search(&train.labels()[i]).expect("label is present"))
        .collect();

    let counts = train.class_counts();
    let initial_scores: Vec<f64> = classes
        .iter()
        .map(|c| (counts[c.index()] as f64 / n as f64).ln())
        .collect();

    let presorted = presort(&rows, dimension);
    let mut scores: Vec<Vec<f64>> = vec![initial_scores.clone(); n];
    let mut val_scores: Vec<Vec<f64>> = vec![initial_scores.clone(); validate.map_or(0, |v| v.len())];

    let mut trees = Vec::with_capacity(params.max_trees);
    let mut train_deviance = vec![deviance(&scores, &targets)];
    let mut validation_accuracy = Vec::new();

    for _ in 0..params.max_trees {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let round: Vec<TwoSplitTree> = (0..k)
            .into_par_iter()
            .map(|class| {
                let residuals: Vec<f64> = probs
                    .iter()
                    .zip(&targets)
                    .map(|(p, &t)| f64::from(u8::from(t == class)) - p[class])
                    .collect();
                fit_tree(&rows, &presorted, &residuals, k)
            })
            .collect::<Result<_>>()?;

        for (s, row) in scores.iter_mut().zip(&rows) {
            for (sk, tree) in s.iter_mut().zip(&round) {
                *sk += params.shrinkage * tree.value(row);
            }
        }
        train_deviance.push(deviance(&scores, &targets));

        if let Some(val) = validate {
            let mut correct = 0;
            for ((s, row), label) in val_scores.iter_mut().zip(val.rows()).zip(val.labels()) {
                for (sk, tree) in s.iter_mut().zip(&round) {
                    *sk += params.shrinkage * tree.value(row);
                }
                if classes[argmax_first(s)] == *label {
                    correct += 1;
                }
            }
            validation_accuracy.push(correct as f64 / val.len() as f64);
        }
        trees.push(round);
    }

    Ok(GbModel {
        classes,
        shrinkage: params.shrinkage,
        initial_scores,
        trees,
        dimension,
        train_deviance,
        validation_accuracy,
    })
}

fn deviance(scores: &[Vec<f64>], targets: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(targets)
        .map(|(s, &t)| {
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_norm = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            log_norm - s[t]
        })
        .sum();
    total / scores.len() as f64
}

/// Sample indices sorted by each feature, ties by index.
fn presort(rows: &[&[f64]], dimension: usize) -> Vec<Vec<u32>> {
    (0..dimension)
        .into_par_iter()
        .map(|f| {
            let mut idx: Vec<u32> = (0..rows.len() as u32).collect();
            idx.sort_by(|&a, &b| rows[a as usize][f].total_cmp(&rows[b as usize][f]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Best least-squares split of the samples with `node[i] == target`, as
/// (split, left sample count). Features and thresholds are scanned in
/// ascending order and only strict improvements replace the incumbent.
fn best_split(
    rows: &[&[f64]],
    presorted: &[Vec<u32>],
    residuals: &[f64],
    node: &[u8],
    target: u8,
) -> Option<Split> {
    let (mut total, mut count) = (0.0, 0usize);
    for (r, _) in residuals.iter().zip(node).filter(|(_, &m)| m == target) {
        total += r;
        count += 1;
    }
    if count < 2 {
        return None;
    }
    let parent = total * total / count as f64;
    let mut best: Option<Split> = None;
    for (feature, order) in presorted.iter().enumerate() {
        let mut left_sum = 0.0;
        let mut left_n = 0usize;
        let mut prev: Option<f64> = None;
        for &i in order {
            let i = i as usize;
            if node[i] != target {
                continue;
            }
            let v = rows[i][feature];
            if let Some(p) = prev {
                if v > p {
                    let right_sum = total - left_sum;
                    let right_n = count - left_n;
                    let gain = left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64 - parent;
                    if best.is_none_or(|b| gain > b.gain) {
                        let mut threshold = p + (v - p) / 2.0;
                        if threshold >= v {
                            threshold = p;
                        }
                        best = Some(Split {
                            feature,
                            threshold,
                            gain,
                        });
                    }
                }
            }
            left_sum += residuals[i];
            left_n += 1;
            prev = Some(v);
        }
    }
    best
}

fn fit_tree(rows: &[&[f64]], presorted: &[Vec<u32>], residuals: &[f64], classes: usize) -> Result<TwoSplitTree> {
    let n = rows.len();
    let mut node = vec![0u8; n];
    let root = best_split(rows, presorted, residuals, &node, 0)
        .ok_or_else(|| Error::NoValidSplit("every feature is constant on the training set".into()))?;
    for (m, row) in node.iter_mut().zip(rows) {
        *m = if row[root.feature] <= root.threshold { 1 } else { 2 };
    }
    let left = best_split(rows, presorted, residuals, &node, 1);
    let right = best_split(rows, presorted, residuals, &node, 2);
    let (second, second_on_left) = match (left, right) {
        (Some(l), Some(r)) => {
            if r.gain > l.gain {
                (r, false)
            } else {
                (l, true)
            }
        }
        (Some(l), None) => (l, true),
        (None, Some(r)) => (r, false),
        (None, None) => {
            return Err(Error::NoValidSplit(
                "no second split exists: both children are constant".into(),
            ))
        }
    };
    let mut tree = TwoSplitTree {
        root,
        second,
        second_on_left,
        leaves: [0.0; 3],
    };
    let mut num = [0.0; 3];
    let mut den = [0.0; 3];
    for (row, r) in rows.iter().zip(residuals) {
        let leaf = tree.leaf_index(row);
        num[leaf] += r;
        den[leaf] += r.abs() * (1.0 - r.abs());
    }
    let factor = (classes as f64 - 1.0) / classes as f64;
    for leaf in 0..3 {
        tree.leaves[leaf] = if den[leaf] < 1e-150 {
            0.0
        } else {
            factor * num[leaf] / den[leaf]
        };
    }
    Ok(tree)
}
