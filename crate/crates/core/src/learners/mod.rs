//! Classifiers: multinomial gradient boosting over two-split trees and
//! one-vs-one RBF support vector machines with a validation grid search.
//!
//! Both trainers first put the training samples into a canonical order
//! (lexicographic by feature values, then label), so a trained model does
//! not depend on the order samples were supplied in.

mod gb;
mod grid;
mod scaler;
mod smo;
mod svm;

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSpec, FeatureVector};
use crate::label::Emotion;

pub use gb::{gb_influence, gb_train, gb_train_fixed, GbModel, GbParams, GbPrediction, Split, TwoSplitTree};
pub use grid::{default_c_grid, default_gamma_grid, grid_search, grid_search_with_tolerance, GridCell, GridSearchResult};
pub use scaler::{apply_scaler, fit_scaler, Scaler};
pub use smo::{solve_binary, SmoSolution, DEFAULT_TOLERANCE};
pub use svm::{rbf_kernel, svm_predict, svm_train, svm_train_with, BinaryMachine, SvmModel, SvmParams, SvmPrediction};

/// Feature rows with labels and sample ids, all under one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    spec: Arc<FeatureSpec>,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<Emotion>,
}

impl LabeledDataset {
    pub fn new(spec: Arc<FeatureSpec>) -> Self {
        LabeledDataset {
            spec,
            ids: Vec::new(),
            rows: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Builds a dataset from raw rows; each row must match the feature spec's
    /// dimension and be finite.
    pub fn from_rows(
        spec: Arc<FeatureSpec>,
        ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<Emotion>,
    ) -> Result<Self> {
        if ids.len() != rows.len() || labels.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                actual: ids.len().min(labels.len()),
            });
        }
        let dim = spec.total_dimension();
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidValue("non-finite feature value".into()));
            }
        }
        Ok(LabeledDataset {
            spec,
            ids,
            rows,
            labels,
        })
    }

    pub fn push(&mut self, id: impl Into<String>, features: FeatureVector, label: Emotion) -> Result<()> {
        if !Arc::ptr_eq(features.spec(), &self.spec) && features.spec() != &self.spec {
            return Err(Error::InvalidValue(
                "feature vector was produced under a different spec".into(),
            ));
        }
        self.ids.push(id.into());
        self.rows.push(features.into_values());
        self.labels.push(label);
        Ok(())
    }

    pub fn spec(&self) -> &Arc<FeatureSpec> {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.total_dimension()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Emotion] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; Emotion::COUNT] {
        let mut counts = [0; Emotion::COUNT];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Classes with at least one sample, in the fixed class order.
    pub fn classes_present(&self) -> Vec<Emotion> {
        let counts = self.class_counts();
        Emotion::ALL
            .into_iter()
            .filter(|e| counts[e.index()] > 0)
            .collect()
    }

    /// Samples of `self` followed by those of `other`.
    pub fn merged(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.spec != other.spec {
            return Err(Error::InvalidValue("cannot merge datasets with different specs".into()));
        }
        let mut out = self.clone();
        out.ids.extend(other.ids.iter().cloned());
        out.rows.extend(other.rows.iter().cloned());
        out.labels.extend(other.labels.iter().copied());
        Ok(out)
    }

    /// Indices sorted by (feature values, label).
    pub(crate) fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.rows[a]
                .iter()
                .zip(&self.rows[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
                .then(self.labels[a].cmp(&self.labels[b]))
        });
        order
    }
}

/// Index of the largest score; earlier entries win ties.
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// A trained classifier of either family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Classifier {
    GradientBoosting(GbModel),
    Svm(SvmModel),
}

impl Classifier {
    pub fn predict(&self, features: &[f64]) -> Result<Emotion> {
        match self {
            Classifier::GradientBoosting(m) => Ok(m.predict(features)?.label),
            Classifier::Svm(m) => Ok(m.predict(features)?.label),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Classifier::GradientBoosting(m) => m.dimension(),
            Classifier::Svm(m) => m.dimension(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Classifier::GradientBoosting(_) => "gb",
            Classifier::Svm(_) => "svm",
        }
    }
}

/// Fraction of `dataset` the predictor labels correctly, as (correct, total).
pub fn count_correct(
    dataset: &LabeledDataset,
    mut predict: impl FnMut(&[f64]) -> Result<Emotion>,
) -> Result<(usize, usize)> {
    let mut correct = 0;
    for (row, label) in dataset.rows().iter().zip(dataset.labels()) {
        if predict(row)? == *label {
            correct += 1;
        }
    }
    Ok((correct, dataset.len()))
}
