use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::svm::{svm_train_with, SvmParams};
use crate::learners::{count_correct, LabeledDataset};

/// `2^-5, 2^-3, ..., 2^15`.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=15).step_by(2).map(|e| 2f64.powi(e)).collect()
}

/// `2^-15, 2^-13, ..., 2^3`.
pub fn default_gamma_grid() -> Vec<f64> {
    (-15..=3).step_by(2).map(|e| 2f64.powi(e)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub correct: usize,
    pub total: usize,
}

impl GridCell {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    /// Every cell, C ascending then gamma ascending.
    pub cells: Vec<GridCell>,
    /// Index of the selected cell in `cells`.
    pub best: usize,
    /// How many cells shared the best validation score.
    pub tied: usize,
}

impl GridSearchResult {
    pub fn best_cell(&self) -> GridCell {
        self.cells[self.best]
    }

    pub fn tie_break(&self) -> String {
        let best = self.best_cell();
        if self.tied > 1 {
            format!(
                "{} cells tied at {}/{}; took the smallest C, then the smallest gamma",
                self.tied, best.correct, best.total
            )
        } else {
            format!("unique best at {}/{}", best.correct, best.total)
        }
    }
}

fn sorted_unique(grid: &[f64], name: &str) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::EmptyInput(format!("{name} grid is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidValue(format!("{name} grid value {v} is not positive")));
    }
    let mut out = grid.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Trains on `train` for every (C, gamma) pair and scores on `validate`
/// only. The best cell has the most correct validation predictions; ties
/// go to the smaller C, then the smaller gamma.
pub fn grid_search(
    train: &LabeledDataset,
    validate: &LabeledDataset,
    c_grid: &[f64],
    gamma_grid: &[f64],
) -> Result<GridSearchResult> {
    grid_search_with_tolerance(train, validate, c_grid, gamma_grid, crate::learners::DEFAULT_TOLERANCE)
}

pub fn grid_search_with_tolerance(
    train: &LabeledDataset,
    validate: &LabeledDataset,
    c_grid: &[f64],
    gamma_grid: &[f64],
    tolerance: f64,
) -> Result<GridSearchResult> {
    if validate.is_empty() {
        return Err(Error::EmptyInput("validation set is empty".into()));
    }
    let cs = sorted_unique(c_grid, "C")?;
    let gammas = sorted_unique(gamma_grid, "gamma")?;
    let grid: Vec<(f64, f64)> = cs
        .iter()
        .flat_map(|&c| gammas.iter().map(move |&g| (c, g)))
        .collect();
    let cells: Vec<GridCell> = grid
        .par_iter()
        .map(|&(c, gamma)| {
            let model = svm_train_with(train, SvmParams { c, gamma, tolerance })?;
            let (correct, total) = count_correct(validate, |x| Ok(model.predict(x)?.label))?;
            Ok(GridCell {
                c,
                gamma,
                correct,
                total,
            })
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, cell) in cells.iter().enumerate() {
        if cell.correct > cells[best].correct {
            best = i;
        }
    }
    let tied = cells
        .iter()
        .filter(|c| c.correct == cells[best].correct)
        .count();
    Ok(GridSearchResult { cells, best, tied })
}
