use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::learners::LabeledDataset;

/// Per-dimension affine map sending the training minimum to -1 and the
/// maximum to +1. Dimensions constant in training map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::EmptyInput("cannot fit a scaler to no samples".into()))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for row in &rows[1..] {
            if row.len() != min.len() {
                return Err(Error::DimensionMismatch {
                    expected: min.len(),
                    actual: row.len(),
                });
            }
            for ((lo, hi), v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *lo = lo.min(*v);
                *hi = hi.max(*v);
            }
        }
        Ok(Scaler { min, max })
    }

    pub fn dimension(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| {
                if hi > lo {
                    -1.0 + 2.0 * (v - lo) / (hi - lo)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

pub fn fit_scaler(train: &LabeledDataset) -> Result<Scaler> {
    Scaler::fit(train.rows())
}

pub fn apply_scaler(scaler: &Scaler, x: &FeatureVector) -> Result<FeatureVector> {
    FeatureVector::new(scaler.transform(x.values())?, x.spec().clone())
}
