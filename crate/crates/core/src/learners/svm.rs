//! One-vs-one C-SVC with an RBF kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::label::Emotion;
use crate::learners::scaler::Scaler;
use crate::learners::smo::{solve_binary, DEFAULT_TOLERANCE};
use crate::learners::LabeledDataset;

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidValue(format!("gamma must be positive, got {gamma}")));
    }
    Ok(rbf(x, y, gamma))
}

fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tolerance: f64,
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        SvmParams {
            c,
            gamma,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Binary machine separating `positive` (y = +1) from `negative`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: Emotion,
    pub negative: Emotion,
    /// Indices into the model's support vector pool.
    pub support: Vec<usize>,
    /// `alpha_i * y_i` for each support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
}

impl BinaryMachine {
    fn decision(&self, kernel_row: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(&s, &c)| c * kernel_row[s])
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    classes: Vec<Emotion>,
    params: SvmParams,
    scaler: Scaler,
    /// Scaled training rows referenced by at least one machine.
    support_vectors: Vec<Vec<f64>>,
    machines: Vec<BinaryMachine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmPrediction {
    pub label: Emotion,
    /// Votes per class, in the fixed class order.
    pub votes: [usize; Emotion::COUNT],
}

impl SvmModel {
    pub fn classes(&self) -> &[Emotion] {
        &self.classes
    }

    pub fn params(&self) -> SvmParams {
        self.params
    }

    pub fn machines(&self) -> &[BinaryMachine] {
        &self.machines
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn dimension(&self) -> usize {
        self.scaler.dimension()
    }

    /// Decision value of every machine for an unscaled sample.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scaled = self.scaler.transform(x)?;
        let kernel_row: Vec<f64> = self
            .support_vectors
            .iter()
            .map(|sv| rbf(sv, &scaled, self.params.gamma))
            .collect();
        Ok(self.machines.iter().map(|m| m.decision(&kernel_row)).collect())
    }

    /// Classifies an unscaled sample by one-vs-one voting.
    pub fn predict(&self, x: &[f64]) -> Result<SvmPrediction> {
        let mut votes = [0usize; Emotion::COUNT];
        for (machine, value) in self.machines.iter().zip(self.decision_values(x)?) {
            let winner = if value > 0.0 { machine.positive } else { machine.negative };
            votes[winner.index()] += 1;
        }
        Ok(SvmPrediction {
            label: vote_winner(&votes, &self.classes),
            votes,
        })
    }
}

/// Class with the most votes; ties go to the class earlier in the fixed order.
pub(crate) fn vote_winner(votes: &[usize; Emotion::COUNT], classes: &[Emotion]) -> Emotion {
    let mut best = classes[0];
    for &c in &classes[1..] {
        if votes[c.index()] > votes[best.index()] {
            best = c;
        }
    }
    best
}

pub fn svm_train(train: &LabeledDataset, c: f64, gamma: f64) -> Result<SvmModel> {
    svm_train_with(train, SvmParams::new(c, gamma))
}

/// Fits the [-1, 1] scaler on `train`, then trains one machine per pair of
/// classes present.
pub fn svm_train_with(train: &LabeledDataset, params: SvmParams) -> Result<SvmModel> {
    if !(params.c > 0.0) || !(params.gamma > 0.0) || !(params.tolerance > 0.0) {
        return Err(Error::InvalidValue(format!(
            "C, gamma and tolerance must be positive (C={}, gamma={}, tol={})",
            params.c, params.gamma, params.tolerance
        )));
    }
    let classes = train.classes_present();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let order = train.canonical_order();
    let scaler = Scaler::fit(train.rows())?;
    let rows: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| scaler.transform(&train.rows()[i]))
        .collect::<Result<_>>()?;
    let labels: Vec<Emotion> = order.iter().map(|&i| train.labels()[i]).collect();

    let pairs: Vec<(Emotion, Emotion)> = classes
        .iter()
        .enumerate()
        .flat_map(|(a, &pa)| classes[a + 1..].iter().map(move |&pb| (pa, pb)))
        .collect();

    // (positive, negative, sample indices, alpha * y, rho)
    let solved: Vec<(Emotion, Emotion, Vec<usize>, Vec<f64>, f64)> = pairs
        .par_iter()
        .map(|&(pos, neg)| {
            let members: Vec<usize> = (0..rows.len())
                .filter(|&i| labels[i] == pos || labels[i] == neg)
                .collect();
            let y: Vec<f64> = members
                .iter()
                .map(|&i| if labels[i] == pos { 1.0 } else { -1.0 })
                .collect();
            let n = members.len();
            let mut kernel = vec![0.0; n * n];
            for a in 0..n {
                kernel[a * n + a] = 1.0;
                for b in a + 1..n {
                    let v = rbf(&rows[members[a]], &rows[members[b]], params.gamma);
                    kernel[a * n + b] = v;
                    kernel[b * n + a] = v;
                }
            }
            let sol = solve_binary(&kernel, &y, params.c, params.tolerance);
            let (support, coef) = members
                .iter()
                .zip(sol.alpha.iter().zip(&y))
                .filter(|(_, (a, _))| **a > 0.0)
                .map(|(&m, (a, yi))| (m, a * yi))
                .unzip();
            (pos, neg, support, coef, sol.rho)
        })
        .collect();

    let mut pool_index = vec![usize::MAX; rows.len()];
    let mut support_vectors = Vec::new();
    let machines = solved
        .into_iter()
        .map(|(positive, negative, support, coef, rho)| {
            let support = support
                .into_iter()
                .map(|s: usize| {
                    if pool_index[s] == usize::MAX {
                        pool_index[s] = support_vectors.len();
                        support_vectors.push(rows[s].clone());
                    }
                    pool_index[s]
                })
                .collect();
            BinaryMachine {
                positive,
                negative,
                support,
                coef,
                rho,
            }
        })
        .collect();

    Ok(SvmModel {
        classes,
        params,
        scaler,
        support_vectors,
        machines,
    })
}

pub fn svm_predict(model: &SvmModel, x: &FeatureVector) -> Result<SvmPrediction> {
    model.predict(x.values())
}
