//! The experiment protocol as functions returning report text, so the
//! binary and the tests share one code path.
//!
//! Training and hyperparameter selection read only the train and validate
//! splits; the test split is loaded by `evaluate` and `predict` alone.

use std::fmt::Write as _;
use std::path::Path;

use landmark_emotion::eval::{confusion, influence_report, ConfusionMatrix};
use landmark_emotion::learners::{
    gb_train, gb_train_fixed, grid_search_with_tolerance, svm_train_with, Classifier, GbParams, LabeledDataset,
    SvmParams,
};
use landmark_emotion::persist::ModelFile;
use landmark_emotion::Emotion;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, PipelineConfig};
use crate::dataset::{build_extractor, config_spec, load_dataset, load_with_extractor, predict_with_fallback, LoadedDataset};
use crate::manifest::{DatasetManifest, Split};
use crate::CliError;

/// Report text for stdout plus diagnostics for stderr.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub text: String,
    pub warnings: Vec<String>,
}

fn manifest_for(config: &PipelineConfig) -> Result<DatasetManifest, CliError> {
    let path = config
        .manifest
        .as_ref()
        .ok_or_else(|| CliError::Usage("config does not name a manifest".into()))?;
    DatasetManifest::load(path)
}

fn collect_warnings(data: &LoadedDataset) -> Vec<String> {
    let mut out = Vec::new();
    for (split, loaded) in &data.splits {
        for f in &loaded.failures {
            out.push(format!("{split}: skipped {}: {}", f.id, f.message));
        }
    }
    out
}

/// Train and validate sets, read without touching test entries.
pub struct TrainingData {
    pub loaded: LoadedDataset,
    pub train: LabeledDataset,
    pub validate: LabeledDataset,
}

pub fn load_training_data(config: &PipelineConfig) -> Result<TrainingData, CliError> {
    let manifest = manifest_for(config)?;
    let loaded = load_dataset(&manifest, config, &[Split::Train, Split::Validate])?;
    let train = loaded.labeled(Split::Train)?;
    let validate = loaded.labeled(Split::Validate)?;
    if train.is_empty() {
        return Err(CliError::Usage("training split has no labeled samples with landmarks".into()));
    }
    Ok(TrainingData {
        loaded,
        train,
        validate,
    })
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Fits the configured model family and returns the model file.
pub fn train(config: &PipelineConfig) -> Result<(ModelFile, Report), CliError> {
    let data = load_training_data(config)?;
    let mut text = String::new();
    writeln!(
        text,
        "train {} samples, validate {} samples, {} features",
        data.train.len(),
        data.validate.len(),
        data.train.dimension()
    )
    .unwrap();
    let classifier = match config.model {
        ModelKind::Svm => {
            let grid = grid_search_with_tolerance(
                &data.train,
                &data.validate,
                &config.c_grid(),
                &config.gamma_grid(),
                config.svm_tolerance,
            )?;
            let best = grid.best_cell();
            writeln!(
                text,
                "svm grid {} cells, best C=2^{} gamma=2^{} validation {} ({})",
                grid.cells.len(),
                best.c.log2(),
                best.gamma.log2(),
                pct(best.accuracy()),
                grid.tie_break()
            )
            .unwrap();
            let params = SvmParams {
                c: best.c,
                gamma: best.gamma,
                tolerance: config.svm_tolerance,
            };
            let fit_on = if config.merge_train_validate {
                data.train.merged(&data.validate)?
            } else {
                data.train.clone()
            };
            Classifier::Svm(svm_train_with(&fit_on, params)?)
        }
        ModelKind::Gb => {
            let params = GbParams {
                shrinkage: config.gb_shrinkage,
                max_trees: config.gb_max_trees,
            };
            let model = gb_train(&data.train, &data.validate, params)?;
            let trees = model.tree_count();
            writeln!(
                text,
                "gb selected {trees} of {} trees per class, validation {}",
                config.gb_max_trees,
                pct(model.validation_accuracy()[trees - 1])
            )
            .unwrap();
            if config.merge_train_validate {
                let merged = data.train.merged(&data.validate)?;
                Classifier::GradientBoosting(gb_train_fixed(
                    &merged,
                    GbParams {
                        max_trees: trees,
                        ..params
                    },
                )?)
            } else {
                Classifier::GradientBoosting(model)
            }
        }
    };
    let model = ModelFile::new(
        (**data.loaded.extractor.spec()).clone(),
        data.loaded.extractor.mean_shape().cloned(),
        classifier,
    )?;
    let warnings = collect_warnings(&data.loaded);
    Ok((model, Report { text, warnings }))
}

/// Every grid cell (SVM) or the validation accuracy per tree count (GB).
pub fn gridsearch(config: &PipelineConfig) -> Result<Report, CliError> {
    let data = load_training_data(config)?;
    let mut text = String::new();
    match config.model {
        ModelKind::Svm => {
            let grid = grid_search_with_tolerance(
                &data.train,
                &data.validate,
                &config.c_grid(),
                &config.gamma_grid(),
                config.svm_tolerance,
            )?;
            writeln!(text, "log2_c\tlog2_gamma\tcorrect\ttotal\taccuracy").unwrap();
            for cell in &grid.cells {
                writeln!(
                    text,
                    "{}\t{}\t{}\t{}\t{}",
                    cell.c.log2(),
                    cell.gamma.log2(),
                    cell.correct,
                    cell.total,
                    pct(cell.accuracy())
                )
                .unwrap();
            }
            let best = grid.best_cell();
            writeln!(text, "best\t{}\t{}\t{}", best.c.log2(), best.gamma.log2(), grid.tie_break()).unwrap();
        }
        ModelKind::Gb => {
            let params = GbParams {
                shrinkage: config.gb_shrinkage,
                max_trees: config.gb_max_trees,
            };
            let model = gb_train(&data.train, &data.validate, params)?;
            writeln!(text, "trees\ttrain_deviance\tvalidation_accuracy").unwrap();
            for (t, acc) in model.validation_accuracy().iter().enumerate() {
                writeln!(text, "{}\t{:.6}\t{}", t + 1, model.train_deviance()[t + 1], pct(*acc)).unwrap();
            }
            writeln!(text, "best\t{}", model.tree_count()).unwrap();
        }
    }
    Ok(Report {
        text,
        warnings: collect_warnings(&data.loaded),
    })
}

/// Loads `split` with the model's feature spec after checking it matches
/// the configured one.
fn load_for_model(config: &PipelineConfig, model: &ModelFile, split: Split) -> Result<LoadedDataset, CliError> {
    model.check_spec(&config_spec(config)?)?;
    let extractor = build_extractor(config, model.mean_shape.clone())?;
    let manifest = manifest_for(config)?;
    Ok(load_with_extractor(&manifest, extractor, config.aspect_ratio, &[split]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub split: Split,
    pub family: String,
    pub samples: usize,
    pub absent_landmarks: usize,
    pub accuracy: f64,
    pub per_class: Vec<(Emotion, Option<f64>)>,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(config: &PipelineConfig, model: &ModelFile, split: Split) -> Result<(EvaluationReport, Report), CliError> {
    let data = load_for_model(config, model, split)?;
    let loaded = data.split(split).expect("split loaded");
    let labeled: Vec<_> = loaded.samples.iter().filter(|s| s.label.is_some()).cloned().collect();
    if labeled.is_empty() {
        return Err(CliError::Usage(format!("split {split} has no labeled samples")));
    }
    let predicted = predict_with_fallback(&model.classifier, &labeled, config.neutral_fallback)?;
    let truth: Vec<Emotion> = labeled.iter().map(|s| s.label.expect("filtered")).collect();
    let cm = confusion(&predicted, &truth)?;
    let accuracy = cm.overall_accuracy()?;
    let absent = labeled.iter().filter(|s| s.features.is_none()).count();

    let mut text = String::new();
    writeln!(text, "{} on {split}: {} samples, {absent} without landmarks", model.classifier.family(), labeled.len()).unwrap();
    write!(text, "{cm}").unwrap();
    writeln!(text, "{}", cm.accuracy_line()).unwrap();
    for line in cm.per_class_lines() {
        writeln!(text, "{line}").unwrap();
    }
    let report = EvaluationReport {
        split,
        family: model.classifier.family().to_string(),
        samples: labeled.len(),
        absent_landmarks: absent,
        accuracy,
        per_class: Emotion::ALL.into_iter().zip(cm.per_class_accuracy()).collect(),
        confusion: cm,
    };
    Ok((
        report,
        Report {
            text,
            warnings: collect_warnings(&data),
        },
    ))
}

/// `id<TAB>label` for every readable entry of `split`.
pub fn predict(config: &PipelineConfig, model: &ModelFile, split: Split) -> Result<Report, CliError> {
    let data = load_for_model(config, model, split)?;
    let loaded = data.split(split).expect("split loaded");
    let predicted = predict_with_fallback(&model.classifier, &loaded.samples, config.neutral_fallback)?;
    let mut text = String::new();
    for (s, p) in loaded.samples.iter().zip(predicted) {
        writeln!(text, "{}\t{}", s.id, p.name()).unwrap();
    }
    Ok(Report {
        text,
        warnings: collect_warnings(&data),
    })
}

pub fn influence(model: &ModelFile, top_k: usize) -> Result<Report, CliError> {
    let Classifier::GradientBoosting(gb) = &model.classifier else {
        return Err(CliError::Usage("influence needs a gradient boosting model".into()));
    };
    let report = influence_report(gb, &model.feature_spec, top_k)?;
    Ok(Report {
        text: report.to_string(),
        warnings: Vec::new(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
