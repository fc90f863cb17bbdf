use std::sync::Arc;

use landmark_emotion::eval::influence_report;
use landmark_emotion::features::{BankConfig, FeatureExtractor, FeatureSet, FeatureSpec};
use landmark_emotion::learners::{gb_influence, gb_train_fixed, GbParams, LabeledDataset};
use landmark_emotion::shapes::{reference_face, LandmarkSet, Point};
use landmark_emotion::Emotion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Faces whose label depends only on how far the image-left mouth corner
/// (48) sits from the image-left eye's inner corner (39).
fn eye_to_mouth_faces(seed: u64, n: usize) -> (LabeledDataset, usize) {
    let extractor = FeatureExtractor::new(
        FeatureSet::DISTANCES,
        &BankConfig::bif_default(),
        &BankConfig::point_texture_default(),
        None,
    )
    .unwrap();
    let spec = extractor.spec().clone();
    let pair = spec.pair_index().unwrap().iter().position(|&p| p == (39, 48)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, 0.01).unwrap();
    let template = reference_face();
    let mut ds = LabeledDataset::new(spec);
    for i in 0..n {
        let mut pts: Vec<Point> = template
            .points()
            .iter()
            .map(|p| Point::new(p.x + jitter.sample(&mut rng), p.y + jitter.sample(&mut rng)))
            .collect();
        pts[48].y += rng.random_range(-0.12..0.12);
        let features = extractor.extract(&LandmarkSet::new(pts).unwrap(), None).unwrap();
        // placeholder label, replaced below
        ds.push(format!("f{i}"), features, Emotion::Happy).unwrap();
    }
    // relabel by tertiles of the designated distance
    let mut values: Vec<f64> = ds.rows().iter().map(|r| r[pair]).collect();
    values.sort_by(f64::total_cmp);
    let (lo, hi) = (values[n / 3], values[2 * n / 3]);
    let labels = ds
        .rows()
        .iter()
        .map(|r| {
            if r[pair] < lo {
                Emotion::Sad
            } else if r[pair] < hi {
                Emotion::Neutral
            } else {
                Emotion::Happy
            }
        })
        .collect();
    let relabeled =
        LabeledDataset::from_rows(ds.spec().clone(), ds.ids().to_vec(), ds.rows().to_vec(), labels).unwrap();
    (relabeled, pair)
}

#[test]
fn designated_pair_ranks_first() {
    let (ds, pair) = eye_to_mouth_faces(3, 150);
    let model = gb_train_fixed(&ds, GbParams { shrinkage: 0.1, max_trees: 30 }).unwrap();
    let report = influence_report(&model, ds.spec(), 10).unwrap();
    let (i, j) = ds.spec().pair_index().unwrap()[pair];
    assert_eq!((report.ranked[0].i, report.ranked[0].j), (i, j));
    assert!((report.distance_share() - 1.0).abs() < 1e-9);
    assert!(report.ranked.windows(2).all(|w| w[0].share >= w[1].share));
    assert_eq!(report.top().len(), report.ranked.len().min(10));
}

#[test]
fn unused_features_have_zero_influence_and_shares_sum_to_one() {
    let spec = Arc::new(FeatureSpec::point_distances(4));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..6).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let labels = rows.iter().map(|r| if r[2] > 0.5 { Emotion::Fear } else { Emotion::Angry }).collect();
    let ids = (0..60).map(|i| i.to_string()).collect();
    let ds = LabeledDataset::from_rows(spec.clone(), ids, rows, labels).unwrap();
    let model = gb_train_fixed(&ds, GbParams { shrinkage: 0.1, max_trees: 5 }).unwrap();
    let inf = gb_influence(&model);
    assert!((inf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let used: Vec<usize> = model.trees().iter().flatten().flat_map(|t| [t.root.feature, t.second.feature]).collect();
    for (f, v) in inf.iter().enumerate() {
        if !used.contains(&f) {
            assert_eq!(*v, 0.0);
        }
    }
    let report = influence_report(&model, &spec, 3).unwrap();
    assert_eq!((report.ranked[0].i, report.ranked[0].j), spec.pair_index().unwrap()[2]);
}

#[test]
fn report_needs_a_distance_block() {
    let spec = Arc::new(FeatureSpec::axis_distances(2));
    let rows = vec![vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.0, 3.0, 2.0], vec![2.0, 2.0, 0.0, 1.0]];
    let labels = vec![Emotion::Sad, Emotion::Happy, Emotion::Sad];
    let ids = (0..3).map(|i| i.to_string()).collect();
    let ds = LabeledDataset::from_rows(spec.clone(), ids, rows, labels).unwrap();
    let model = gb_train_fixed(&ds, GbParams { shrinkage: 0.1, max_trees: 2 }).unwrap();
    assert!(influence_report(&model, &spec, 5).is_err());
}
