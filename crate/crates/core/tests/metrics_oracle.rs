mod common;

use common::oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskgraph::train_eval::{ConfusionMatrix, MetricsReport};

#[test]
fn fifty_random_matrices_match_the_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..50 {
        let classes = if case % 2 == 0 { 2 } else { 5 };
        let n = rng.random_range(1..60);
        let actual: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let predicted: Vec<usize> = actual
            .iter()
            .map(|&a| if rng.random_bool(0.6) { a } else { rng.random_range(0..classes) })
            .collect();
        let m = ConfusionMatrix::from_predictions(classes, &actual, &predicted).unwrap();
        assert_eq!(m.total(), n as u64);
        let r = MetricsReport::from_confusion(&m).unwrap();
        let o = oracle(&actual, &predicted, classes);
        assert_eq!(r.accuracy, o.accuracy, "case {case}");
        assert_eq!(r.precision, o.precision, "case {case}");
        assert_eq!(r.recall, o.recall, "case {case}");
        assert_eq!(r.f1, o.f1, "case {case}");
        assert_eq!(r.per_class_f1, o.per_class_f1, "case {case}");
        if classes == 5 {
            let mean = r.per_class_f1.iter().sum::<f64>() / 5.0;
            assert_eq!(r.macro_f1, Some(mean));
        } else {
            let k = m.class_counts(1);
            assert_eq!(r.accuracy, (k.tp + k.tn) as f64 / n as f64);
            assert_eq!(r.macro_f1, None);
        }
        if r.precision > 0.0 && r.recall > 0.0 && classes == 2 {
            assert_eq!(r.f1, 2.0 * r.precision * r.recall / (r.precision + r.recall));
        }
    }
}

#[test]
fn worked_binary_example() {
    // TP=2 FP=1 TN=2 FN=0
    let m = ConfusionMatrix { counts: vec![vec![2, 1], vec![0, 2]] };
    let r = MetricsReport::from_confusion(&m).unwrap();
    assert_eq!(r.precision, 2.0 / 3.0);
    assert_eq!(r.recall, 1.0);
    assert_eq!(r.accuracy, 0.8);
    assert!((r.f1 - 0.8).abs() < 1e-15);
}

#[test]
fn zero_division_is_flagged() {
    let m = ConfusionMatrix { counts: vec![vec![3, 0], vec![2, 0]] };
    let r = MetricsReport::from_confusion(&m).unwrap();
    assert_eq!(r.precision, 0.0);
    assert!(r.undefined.iter().any(|u| u.starts_with("precision")));
}
