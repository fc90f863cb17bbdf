//! Confusion matrices, accuracy arithmetic and feature-influence reports.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::label::Emotion;
use crate::learners::{gb_influence, GbModel};

const K: usize = Emotion::COUNT;

/// Counts indexed `[truth][estimate]` in the fixed class order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; K]; K]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn counts(&self) -> &[[u64; K]; K] {
        &self.counts
    }

    pub fn get(&self, truth: Emotion, estimate: Emotion) -> u64 {
        self.counts[truth.index()][estimate.index()]
    }

    pub fn add(&mut self, truth: Emotion, estimate: Emotion) {
        self.counts[truth.index()][estimate.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sums(&self) -> [u64; K] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn overall_accuracy(&self) -> Result<f64> {
        overall_accuracy(self)
    }

    pub fn per_class_accuracy(&self) -> [Option<f64>; K] {
        per_class_accuracy(self)
    }

    /// One-line summary such as `accuracy 46.8% (174/372)`.
    pub fn accuracy_line(&self) -> String {
        match self.overall_accuracy() {
            Ok(a) => format!("accuracy {:.1}% ({}/{})", 100.0 * a, self.trace(), self.total()),
            Err(_) => "accuracy n/a (0 samples)".to_string(),
        }
    }

    /// Per-class recall lines, one per class, `n/a` for empty rows.
    pub fn per_class_lines(&self) -> Vec<String> {
        let rows = self.row_sums();
        Emotion::ALL
            .iter()
            .zip(self.per_class_accuracy())
            .map(|(e, acc)| match acc {
                Some(a) => format!(
                    "{}\t{:.1}% ({}/{})",
                    e.name(),
                    100.0 * a,
                    self.counts[e.index()][e.index()],
                    rows[e.index()]
                ),
                None => format!("{}\tn/a (0/0)", e.name()),
            })
            .collect()
    }
}

/// Rows are truth, columns are estimates, tab separated.
impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Truth \\ Estimate")?;
        for e in Emotion::ALL {
            write!(f, "\t{}", e.name())?;
        }
        writeln!(f)?;
        for e in Emotion::ALL {
            write!(f, "{}", e.name())?;
            for v in self.counts[e.index()] {
                write!(f, "\t{v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn confusion(predicted: &[Emotion], truth: &[Emotion]) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput("no samples to tabulate".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in predicted.iter().zip(truth) {
        cm.add(*t, *p);
    }
    Ok(cm)
}

/// Trace over total.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("confusion matrix is empty".into()));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// Recall per truth row; `None` where a class has no samples.
pub fn per_class_accuracy(cm: &ConfusionMatrix) -> [Option<f64>; K] {
    let rows = cm.row_sums();
    std::array::from_fn(|k| (rows[k] > 0).then(|| cm.counts[k][k] as f64 / rows[k] as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairInfluence {
    pub i: usize,
    pub j: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfluence {
    pub block: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    /// Distance pairs with nonzero influence, largest share first.
    pub ranked: Vec<PairInfluence>,
    /// Total share of every block other than the distance block.
    pub other_blocks: Vec<BlockInfluence>,
    pub top_k: usize,
}

impl InfluenceReport {
    pub fn top(&self) -> &[PairInfluence] {
        &self.ranked[..self.top_k.min(self.ranked.len())]
    }

    pub fn distance_share(&self) -> f64 {
        self.ranked.iter().map(|p| p.share).sum()
    }
}

impl fmt::Display for InfluenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rank\ti\tj\tshare")?;
        for (r, p) in self.top().iter().enumerate() {
            writeln!(f, "{}\t{}\t{}\t{:.6}", r + 1, p.i, p.j, p.share)?;
        }
        for b in &self.other_blocks {
            writeln!(f, "block {}\t{:.6}", b.block, b.share)?;
        }
        Ok(())
    }
}

/// Maps boosted-tree influence onto landmark pairs of the distance block.
pub fn influence_report(model: &GbModel, spec: &FeatureSpec, top_k: usize) -> Result<InfluenceReport> {
    if model.dimension() != spec.total_dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.total_dimension(),
            actual: model.dimension(),
        });
    }
    let (offset, _) = spec
        .distance_block()
        .ok_or_else(|| Error::InvalidValue("feature spec has no point-distance block".into()))?;
    let pairs = spec.pair_index().expect("distance block present");
    let influence = gb_influence(model);

    let mut ranked: Vec<PairInfluence> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| PairInfluence {
            i,
            j,
            share: influence[offset + k],
        })
        .filter(|p| p.share > 0.0)
        .collect();
    ranked.sort_by(|a, b| b.share.total_cmp(&a.share).then((a.i, a.j).cmp(&(b.i, b.j))));

    let other_blocks = spec
        .block_offsets()
        .filter(|(o, _)| *o != offset)
        .map(|(o, block)| BlockInfluence {
            block: block.name().to_string(),
            share: influence[o..o + block.dimension()].iter().sum(),
        })
        .collect();
    Ok(InfluenceReport {
        ranked,
        other_blocks,
        top_k,
    })
}
