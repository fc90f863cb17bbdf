//! Manifest ingestion: landmark parsing, aspect correction and feature
//! extraction per split.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use landmark_emotion::features::{BankConfig, FeatureExtractor, FeatureSpec, FeatureVector};
use landmark_emotion::image::GrayImage;
use landmark_emotion::learners::{Classifier, LabeledDataset};
use landmark_emotion::shapes::{self, LandmarkSet, MeanShape, Point};
use landmark_emotion::Emotion;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::manifest::{DatasetManifest, ManifestEntry, Split};
use crate::CliError;

/// Rescales the image width by `factor`; the height is unchanged.
pub fn aspect_correct(img: &GrayImage, factor: f64) -> Result<GrayImage, CliError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(CliError::Usage(format!("aspect factor must be positive, got {factor}")));
    }
    Ok(img.rescale_width(factor)?)
}

/// Maps landmark x-coordinates the same way a width rescale by `factor`
/// maps pixel centres.
pub fn aspect_correct_landmarks(landmarks: &LandmarkSet, factor: f64) -> Result<LandmarkSet, CliError> {
    if factor == 1.0 {
        return Ok(landmarks.clone());
    }
    Ok(landmarks.map(|p| Point::new((p.x + 0.5) * factor - 0.5, p.y))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: Option<Emotion>,
    /// `None` when the manifest lists no landmark file.
    pub features: Option<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryFailure {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedSplit {
    pub samples: Vec<Sample>,
    pub failures: Vec<EntryFailure>,
}

impl LoadedSplit {
    pub fn absent_ids(&self) -> Vec<&str> {
        self.samples
            .iter()
            .filter(|s| s.features.is_none())
            .map(|s| s.id.as_str())
            .collect()
    }

    /// Samples with both landmarks and a label.
    pub fn labeled(&self, spec: &Arc<FeatureSpec>) -> Result<LabeledDataset, CliError> {
        let mut ds = LabeledDataset::new(Arc::clone(spec));
        for s in &self.samples {
            if let (Some(f), Some(l)) = (&s.features, s.label) {
                ds.push(s.id.clone(), f.clone(), l)?;
            }
        }
        Ok(ds)
    }
}

/// Features extracted for some splits of a manifest.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub extractor: FeatureExtractor,
    pub splits: BTreeMap<Split, LoadedSplit>,
}

impl LoadedDataset {
    pub fn split(&self, split: Split) -> Option<&LoadedSplit> {
        self.splits.get(&split)
    }

    pub fn labeled(&self, split: Split) -> Result<LabeledDataset, CliError> {
        let loaded = self
            .split(split)
            .ok_or_else(|| CliError::Usage(format!("split {split} was not loaded")))?;
        loaded.labeled(self.extractor.spec())
    }
}

fn read_landmarks(entry: &ManifestEntry, pts: &Path, aspect: f64) -> Result<LandmarkSet, CliError> {
    let text = std::fs::read_to_string(pts).map_err(|e| CliError::Io {
        path: pts.to_path_buf(),
        source: e,
    })?;
    let landmarks = shapes::parse_pts(&text).map_err(|e| CliError::Entry {
        id: entry.id.clone(),
        message: e.to_string(),
    })?;
    aspect_correct_landmarks(&landmarks, aspect)
}

fn read_image(path: &Path, aspect: f64) -> Result<GrayImage, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let img = GrayImage::read_pgm(&bytes)?;
    if aspect == 1.0 {
        Ok(img)
    } else {
        aspect_correct(&img, aspect)
    }
}

fn extract_entry(
    entry: &ManifestEntry,
    extractor: &FeatureExtractor,
    aspect: f64,
) -> Result<Option<FeatureVector>, CliError> {
    let Some(pts) = &entry.pts_path else {
        return Ok(None);
    };
    let landmarks = read_landmarks(entry, pts, aspect)?;
    let image = if extractor.feature_set().needs_image() {
        let path = entry.image_path.as_ref().ok_or_else(|| CliError::Entry {
            id: entry.id.clone(),
            message: "texture features need an image_path".into(),
        })?;
        Some(read_image(path, aspect)?)
    } else {
        None
    };
    extractor
        .extract(&landmarks, image.as_ref())
        .map(Some)
        .map_err(|e| CliError::Entry {
            id: entry.id.clone(),
            message: e.to_string(),
        })
}

/// Extracts features for every entry of `split`. Unreadable entries are
/// collected as failures rather than aborting the load.
pub fn load_split(
    manifest: &DatasetManifest,
    split: Split,
    extractor: &FeatureExtractor,
    aspect: f64,
) -> LoadedSplit {
    let entries: Vec<&ManifestEntry> = manifest.split(split).collect();
    let results: Vec<Result<Sample, EntryFailure>> = entries
        .par_iter()
        .map(|entry| {
            extract_entry(entry, extractor, aspect)
                .map(|features| Sample {
                    id: entry.id.clone(),
                    label: entry.label,
                    features,
                })
                .map_err(|e| EntryFailure {
                    id: entry.id.clone(),
                    message: e.to_string(),
                })
        })
        .collect();
    let mut out = LoadedSplit::default();
    for r in results {
        match r {
            Ok(s) => out.samples.push(s),
            Err(f) => out.failures.push(f),
        }
    }
    out
}

/// Mean of the normalized, up-righted training shapes. Only train-split
/// entries are read.
pub fn training_mean_shape(manifest: &DatasetManifest, aspect: f64) -> Result<MeanShape, CliError> {
    let shapes: Vec<_> = manifest
        .split(Split::Train)
        .filter_map(|e| e.pts_path.as_ref().map(|p| (e, p)))
        .par_bridge()
        .filter_map(|(e, p)| {
            let landmarks = read_landmarks(e, p, aspect).ok()?;
            let normalized = shapes::normalize_size(&landmarks).ok()?;
            shapes::upright(&normalized).ok().map(|s| (e.id.clone(), s))
        })
        .collect();
    let mut shapes = shapes;
    // par_bridge does not keep order; the mean is summed in id order
    shapes.sort_by(|a, b| a.0.cmp(&b.0));
    let shapes: Vec<_> = shapes.into_iter().map(|(_, s)| s).collect();
    Ok(shapes::mean_shape(&shapes)?)
}

/// The feature spec `config` selects, independent of any mean shape.
pub fn config_spec(config: &PipelineConfig) -> Result<FeatureSpec, CliError> {
    Ok(FeatureSpec::for_feature_set(
        config.features,
        &BankConfig::bif_default(),
        &BankConfig::point_texture_default(),
    )?)
}

pub fn build_extractor(config: &PipelineConfig, mean: Option<MeanShape>) -> Result<FeatureExtractor, CliError> {
    Ok(FeatureExtractor::new(
        config.features,
        &BankConfig::bif_default(),
        &BankConfig::point_texture_default(),
        mean,
    )?)
}

/// Loads `splits`, computing the mean shape (when axis features are on)
/// from the training split alone.
pub fn load_dataset(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    splits: &[Split],
) -> Result<LoadedDataset, CliError> {
    let mean = if config.features.axis {
        Some(training_mean_shape(manifest, config.aspect_ratio)?)
    } else {
        None
    };
    let extractor = build_extractor(config, mean)?;
    Ok(load_with_extractor(manifest, extractor, config.aspect_ratio, splits))
}

pub fn load_with_extractor(
    manifest: &DatasetManifest,
    extractor: FeatureExtractor,
    aspect: f64,
    splits: &[Split],
) -> LoadedDataset {
    let splits = splits
        .iter()
        .map(|&s| (s, load_split(manifest, s, &extractor, aspect)))
        .collect();
    LoadedDataset { extractor, splits }
}

/// Model predictions, with `Neutral` for samples lacking landmarks when
/// `fallback` is on.
pub fn predict_with_fallback(
    classifier: &Classifier,
    samples: &[Sample],
    fallback: bool,
) -> Result<Vec<Emotion>, CliError> {
    samples
        .iter()
        .map(|s| match &s.features {
            Some(f) => Ok(classifier.predict(f.values())?),
            None if fallback => Ok(Emotion::Neutral),
            None => Err(CliError::AbsentLandmarks(s.id.clone())),
        })
        .collect()
}
