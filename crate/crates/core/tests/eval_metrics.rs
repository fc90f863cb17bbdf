use landmark_emotion::eval::{confusion, overall_accuracy, per_class_accuracy, ConfusionMatrix};
use landmark_emotion::Emotion;
use proptest::prelude::*;

/// Published SVM test confusion matrix, rows truth, columns estimate.
const TABLE: [[u64; 7]; 7] = [
    [29, 1, 4, 5, 10, 7, 13],
    [3, 0, 0, 6, 4, 4, 0],
    [13, 0, 1, 3, 13, 6, 5],
    [5, 0, 0, 67, 7, 16, 0],
    [3, 0, 1, 3, 40, 9, 2],
    [9, 0, 5, 5, 12, 16, 8],
    [8, 0, 2, 0, 6, 0, 21],
];

#[test]
fn published_matrix_row_sums_and_total() {
    let cm = ConfusionMatrix::from_counts(TABLE);
    assert_eq!(cm.row_sums(), [69, 17, 41, 95, 58, 55, 37]);
    assert_eq!(cm.total(), 372);
    assert_eq!(cm.trace(), 174);
}

#[test]
fn published_matrix_overall_accuracy() {
    let cm = ConfusionMatrix::from_counts(TABLE);
    let acc = overall_accuracy(&cm).unwrap();
    assert_eq!(acc, 174.0 / 372.0);
    assert_eq!(format!("{:.1}", 100.0 * acc), "46.8");
    assert_eq!(cm.accuracy_line(), "accuracy 46.8% (174/372)");
}

#[test]
fn published_matrix_per_class_percentages() {
    let cm = ConfusionMatrix::from_counts(TABLE);
    let acc = per_class_accuracy(&cm);
    let expected = [
        (Emotion::Neutral, 69),
        (Emotion::Happy, 71),
        (Emotion::Angry, 42),
        (Emotion::Surprise, 57),
        (Emotion::Sad, 29),
        (Emotion::Fear, 2),
        (Emotion::Disgust, 0),
    ];
    for (e, pct) in expected {
        let got = acc[e.index()].unwrap();
        assert_eq!((100.0 * got).round() as i64, pct, "{e}");
    }
}

fn label() -> impl Strategy<Value = Emotion> {
    (0usize..7).prop_map(|i| Emotion::from_index(i).unwrap())
}

proptest! {
    #[test]
    fn accuracy_equals_match_rate(pairs in prop::collection::vec((label(), label()), 1..200)) {
        let (p, t): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
        let cm = confusion(&p, &t).unwrap();
        let hits = pairs.iter().filter(|(a, b)| a == b).count();
        prop_assert_eq!(cm.overall_accuracy().unwrap(), hits as f64 / pairs.len() as f64);
        prop_assert_eq!(cm.total(), pairs.len() as u64);
    }

    #[test]
    fn confusion_ignores_sample_order(pairs in prop::collection::vec((label(), label()), 1..100), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (p1, t1): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let (p2, t2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
        prop_assert_eq!(confusion(&p1, &t1).unwrap(), confusion(&p2, &t2).unwrap());
    }
}

#[test]
fn json_round_trip() {
    let cm = ConfusionMatrix::from_counts(TABLE);
    let json = serde_json::to_string(&cm).unwrap();
    assert_eq!(serde_json::from_str::<ConfusionMatrix>(&json).unwrap(), cm);
}
