//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # comments start with '#'
//! manifest = data/manifest.csv      # relative to the config file
//! features = distances,axis         # distances, axis, bif, point_texture
//! model = svm                       # gb | svm
//! gb.shrinkage = 0.1
//! gb.max_trees = 300
//! svm.log2_c = -5:15:2              # start:stop:step, or a comma list
//! svm.log2_gamma = -15:3:2
//! svm.tolerance = 0.001
//! aspect_ratio = 1.0                # horizontal pre-scale of image and landmarks
//! neutral_fallback = true
//! merge_train_validate = false
//! influence.top_k = 20
//! seed = 0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use landmark_emotion::features::FeatureSet;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gb,
    Svm,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gb" => Ok(ModelKind::Gb),
            "svm" => Ok(ModelKind::Svm),
            other => Err(format!("unknown model {other:?}, expected gb or svm")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Gb => "gb",
            ModelKind::Svm => "svm",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub features: FeatureSet,
    pub model: ModelKind,
    pub gb_shrinkage: f64,
    pub gb_max_trees: usize,
    pub svm_log2_c: Vec<f64>,
    pub svm_log2_gamma: Vec<f64>,
    pub svm_tolerance: f64,
    pub aspect_ratio: f64,
    pub neutral_fallback: bool,
    pub merge_train_validate: bool,
    pub influence_top_k: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            manifest: None,
            features: FeatureSet::DISTANCES,
            model: ModelKind::Svm,
            gb_shrinkage: 0.1,
            gb_max_trees: 300,
            svm_log2_c: (-5..=15).step_by(2).map(f64::from).collect(),
            svm_log2_gamma: (-15..=3).step_by(2).map(f64::from).collect(),
            svm_tolerance: 1e-3,
            aspect_ratio: 1.0,
            neutral_fallback: true,
            merge_train_validate: false,
            influence_top_k: 20,
            seed: 0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {value:?}")),
    }
}

/// `a:b:s` expands to `a, a+s, ..., <= b`; otherwise a comma list.
pub fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let grid = if parts.len() == 3 {
        let start: f64 = parse_value(key, parts[0])?;
        let stop: f64 = parse_value(key, parts[1])?;
        let step: f64 = parse_value(key, parts[2])?;
        if !(step > 0.0) || stop < start {
            return Err(format!("{key}: range {value:?} is empty or has a non-positive step"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        value
            .split(',')
            .map(|v| parse_value(key, v.trim()))
            .collect::<Result<Vec<f64>, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(format!("{key}: grid {value:?} must hold finite values"));
    }
    Ok(grid)
}

fn parse_features(value: &str) -> Result<FeatureSet, String> {
    let mut set = FeatureSet {
        distances: false,
        axis: false,
        bif: false,
        point_texture: false,
    };
    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "distances" => set.distances = true,
            "axis" => set.axis = true,
            "bif" => set.bif = true,
            "point_texture" => set.point_texture = true,
            other => return Err(format!("features: unknown family {other:?}")),
        }
    }
    if set.is_empty() {
        return Err("features: at least one family must be selected".into());
    }
    Ok(set)
}

impl PipelineConfig {
    /// Applies one setting. Relative manifest paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        match key {
            "manifest" => self.manifest = Some(base.join(value)),
            "features" => self.features = parse_features(value)?,
            "model" => self.model = value.parse()?,
            "gb.shrinkage" => {
                self.gb_shrinkage = parse_value(key, value)?;
                if !(self.gb_shrinkage > 0.0) {
                    return Err("gb.shrinkage must be positive".into());
                }
            }
            "gb.max_trees" => {
                self.gb_max_trees = parse_value(key, value)?;
                if self.gb_max_trees == 0 {
                    return Err("gb.max_trees must be at least 1".into());
                }
            }
            "svm.log2_c" => self.svm_log2_c = parse_grid(key, value)?,
            "svm.log2_gamma" => self.svm_log2_gamma = parse_grid(key, value)?,
            "svm.tolerance" => {
                self.svm_tolerance = parse_value(key, value)?;
                if !(self.svm_tolerance > 0.0) {
                    return Err("svm.tolerance must be positive".into());
                }
            }
            "aspect_ratio" => {
                self.aspect_ratio = parse_value(key, value)?;
                if !(self.aspect_ratio > 0.0 && self.aspect_ratio.is_finite()) {
                    return Err("aspect_ratio must be positive".into());
                }
            }
            "neutral_fallback" => self.neutral_fallback = parse_bool(key, value)?,
            "merge_train_validate" => self.merge_train_validate = parse_bool(key, value)?,
            "influence.top_k" => self.influence_top_k = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut config = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: n + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            config
                .set(key.trim(), value.trim(), base)
                .map_err(|message| CliError::Config { line: n + 1, message })?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies a `key=value` override given on the command line; relative
    /// paths resolve against the working directory.
    pub fn apply_override(&mut self, setting: &str) -> Result<(), CliError> {
        let (key, value) = setting.split_once('=').ok_or_else(|| CliError::Config {
            line: 0,
            message: format!("override {setting:?} is not key=value"),
        })?;
        self.set(key.trim(), value.trim(), Path::new(""))
            .map_err(|message| CliError::Config { line: 0, message })
    }

    pub fn c_grid(&self) -> Vec<f64> {
        self.svm_log2_c.iter().map(|e| e.exp2()).collect()
    }

    pub fn gamma_grid(&self) -> Vec<f64> {
        self.svm_log2_gamma.iter().map(|e| e.exp2()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_grids() {
        let c = PipelineConfig::default();
        assert_eq!(c.c_grid().len(), 11);
        assert_eq!(c.gamma_grid().len(), 10);
        assert_eq!(c.gamma_grid()[9], 8.0);
        assert_eq!(c.features, FeatureSet::DISTANCES);
    }

    #[test]
    fn parses_keys_and_comments() {
        let text = "# demo\nmanifest = m.csv\nfeatures = distances, axis # two\nmodel = gb\n\ngb.max_trees = 50\nsvm.log2_c = 1,3\nsvm.log2_gamma=-3:1:2\nneutral_fallback = no\n";
        let c = PipelineConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(c.manifest, Some(PathBuf::from("/data/m.csv")));
        assert!(c.features.distances && c.features.axis && !c.features.bif);
        assert_eq!(c.model, ModelKind::Gb);
        assert_eq!(c.gb_max_trees, 50);
        assert_eq!(c.svm_log2_c, vec![1.0, 3.0]);
        assert_eq!(c.svm_log2_gamma, vec![-3.0, -1.0, 1.0]);
        assert!(!c.neutral_fallback);
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in ["model = tree", "nonsense", "bogus = 1", "features =", "aspect_ratio = -1", "svm.log2_c = 3:1:1"] {
            let err = PipelineConfig::parse(bad, Path::new(".")).unwrap_err();
            assert!(matches!(err, CliError::Config { line: 1, .. }), "{bad}");
        }
    }
}
