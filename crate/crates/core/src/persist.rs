//! JSON model files.
//!
//! ```text
//! {
//!   "format": "landmark-emotion-model",
//!   "version": 1,
//!   "feature_spec_digest": "<sha256 hex of the feature_spec JSON>",
//!   "feature_spec": { "blocks": [...] },
//!   "class_order": ["Angry", ..., "Surprise"],
//!   "mean_shape": { ... } | null,
//!   "classifier": { "family": "gradient_boosting" | "svm", ... }
//! }
//! ```
//!
//! Floats are written with shortest round-trip formatting, so a saved
//! model reloads bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::label::Emotion;
use crate::learners::Classifier;
use crate::shapes::MeanShape;

pub const FORMAT_NAME: &str = "landmark-emotion-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_spec_digest: String,
    pub feature_spec: FeatureSpec,
    pub class_order: Vec<Emotion>,
    pub mean_shape: Option<MeanShape>,
    pub classifier: Classifier,
}

impl ModelFile {
    pub fn new(feature_spec: FeatureSpec, mean_shape: Option<MeanShape>, classifier: Classifier) -> Result<Self> {
        if classifier.dimension() != feature_spec.total_dimension() {
            return Err(Error::DimensionMismatch {
                expected: feature_spec.total_dimension(),
                actual: classifier.dimension(),
            });
        }
        Ok(ModelFile {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            feature_spec_digest: feature_spec.digest(),
            feature_spec,
            class_order: Emotion::ALL.to_vec(),
            mean_shape,
            classifier,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses and validates the header: format name, version, class order
    /// and that the stored digest matches the stored spec.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(FORMAT_NAME) => {}
            other => {
                return Err(Error::ModelFile(format!(
                    "unrecognized format {other:?}, expected {FORMAT_NAME:?}"
                )))
            }
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            other => {
                return Err(Error::ModelFile(format!(
                    "unsupported model version {other:?}, expected {FORMAT_VERSION}"
                )))
            }
        }
        let model: ModelFile = serde_json::from_value(value)?;
        if model.class_order != Emotion::ALL {
            return Err(Error::ModelFile("class order differs from the fixed order".into()));
        }
        let digest = model.feature_spec.digest();
        if digest != model.feature_spec_digest {
            return Err(Error::DigestMismatch {
                model: model.feature_spec_digest,
                expected: digest,
            });
        }
        if model.classifier.dimension() != model.feature_spec.total_dimension() {
            return Err(Error::DimensionMismatch {
                expected: model.feature_spec.total_dimension(),
                actual: model.classifier.dimension(),
            });
        }
        Ok(model)
    }

    /// Errors unless the model was trained under `spec`.
    pub fn check_spec(&self, spec: &FeatureSpec) -> Result<()> {
        let expected = spec.digest();
        if self.feature_spec_digest != expected {
            return Err(Error::DigestMismatch {
                model: self.feature_spec_digest.clone(),
                expected,
            });
        }
        Ok(())
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    fs::write(path, model.to_json()?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{gb_train_fixed, svm_train, GbParams, LabeledDataset};
    use std::sync::Arc;

    fn dataset() -> LabeledDataset {
        let spec = Arc::new(FeatureSpec::axis_distances(1));
        let rows = vec![
            vec![0.0, 0.1],
            vec![0.3, 0.0],
            vec![0.1, 0.2],
            vec![2.0, 2.1],
            vec![2.2, 1.9],
            vec![1.8, 2.0],
        ];
        let labels = [Emotion::Happy; 3].into_iter().chain([Emotion::Sad; 3]).collect();
        let ids = (0..6).map(|i| i.to_string()).collect();
        LabeledDataset::from_rows(spec, ids, rows, labels).unwrap()
    }

    #[test]
    fn round_trips_both_families() {
        let ds = dataset();
        let gb = gb_train_fixed(&ds, GbParams { shrinkage: 0.1, max_trees: 4 }).unwrap();
        let svm = svm_train(&ds, 2.0, 0.5).unwrap();
        for c in [Classifier::GradientBoosting(gb), Classifier::Svm(svm)] {
            let m = ModelFile::new((**ds.spec()).clone(), None, c).unwrap();
            let back = ModelFile::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
            for row in ds.rows() {
                assert_eq!(back.classifier.predict(row).unwrap(), m.classifier.predict(row).unwrap());
            }
        }
    }

    #[test]
    fn rejects_bad_version_and_digest() {
        let ds = dataset();
        let gb = gb_train_fixed(&ds, GbParams { shrinkage: 0.1, max_trees: 2 }).unwrap();
        let m = ModelFile::new((**ds.spec()).clone(), None, Classifier::GradientBoosting(gb)).unwrap();
        let json = m.to_json().unwrap();

        let v2 = json.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(ModelFile::from_json(&v2), Err(Error::ModelFile(_))));

        let tampered = json.replacen(&m.feature_spec_digest, &"0".repeat(64), 1);
        assert!(matches!(ModelFile::from_json(&tampered), Err(Error::DigestMismatch { .. })));

        let other = FeatureSpec::point_distances(68);
        assert!(matches!(m.check_spec(&other), Err(Error::DigestMismatch { .. })));
        assert!(m.check_spec(ds.spec()).is_ok());
    }
}
