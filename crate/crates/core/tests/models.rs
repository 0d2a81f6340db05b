mod common;

use kelly_strata::ingest::MatchResult;
use kelly_strata::models::{fit, logistic_objective, Algorithm, ClassifierSpec, TrainedModel};
use kelly_strata::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick(alg: Algorithm, seed: u64) -> ClassifierSpec {
    let spec = ClassifierSpec::new(alg, seed);
    match alg {
        Algorithm::RandomForest | Algorithm::GradientBoosting => spec.with("n_estimators", 15i64),
        Algorithm::BoostedDeep => spec.with("iterations", 15i64),
        _ => spec,
    }
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, f) = (40, 4);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..f).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let sw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    for l2 in [0.0, 0.3] {
        let w: Vec<f64> = (0..3 * (f + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = logistic_objective(&w, &x, &y, &sw, l2);
        for i in 0..w.len() {
            let h = 1e-6;
            let mut up = w.clone();
            let mut down = w.clone();
            up[i] += h;
            down[i] -= h;
            let numeric = (logistic_objective(&up, &x, &y, &sw, l2).0 - logistic_objective(&down, &x, &y, &sw, l2).0) / (2.0 * h);
            let rel = (numeric - grad[i]).abs() / grad[i].abs().max(1e-3);
            assert!(rel < 1e-4, "coordinate {i}: analytic {} numeric {numeric}", grad[i]);
        }
    }
}

#[test]
fn boosting_training_loss_never_increases() {
    let lg = common::league(12, 2, 3);
    for (alg, key) in [(Algorithm::GradientBoosting, "n_estimators"), (Algorithm::BoostedDeep, "iterations")] {
        let spec = ClassifierSpec::new(alg, 1).with(key, 40i64);
        let model = fit(&spec, &lg.rows).unwrap();
        let loss = &model.boosting().unwrap().training_loss;
        assert_eq!(loss.len(), 41);
        for w in loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{alg}: {} -> {}", w[0], w[1]);
        }
        assert!(loss.last().unwrap() < &loss[0]);
    }
}

#[test]
fn single_unbagged_tree_forest_equals_decision_tree() {
    let lg = common::league(12, 3, 4);
    let (train, test) = common::split_first_season(&lg.rows);
    for depth in [2i64, 5] {
        let dt = ClassifierSpec::new(Algorithm::DecisionTree, 9).with("max_depth", depth);
        let rf = ClassifierSpec::new(Algorithm::RandomForest, 9)
            .with("max_depth", depth)
            .with("n_estimators", 1i64)
            .with("bootstrap", false)
            .with("max_features", "all");
        let a = fit(&dt, &train).unwrap().confidences(&test).unwrap();
        let b = fit(&rf, &train).unwrap().confidences(&test).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn baselines_hit_their_chance_levels() {
    let lg = common::league(20, 3, 6);
    let (train, test) = common::split_first_season(&lg.rows);
    assert!(!test.is_empty());
    let share = |rows: &[kelly_strata::features::FeatureVector]| {
        let mut c = [0.0; 3];
        for r in rows {
            c[r.label.index()] += 1.0 / rows.len() as f64;
        }
        c
    };
    let (p, q) = (share(&train), share(&test));
    let stratified_chance: f64 = (0..3).map(|c| p[c] * q[c]).sum();
    for (alg, chance) in [(Algorithm::BaselineUniform, 1.0 / 3.0), (Algorithm::BaselineStratified, stratified_chance)] {
        let mean: f64 = (0..100u64)
            .map(|seed| fit(&ClassifierSpec::new(alg, seed), &train).unwrap().accuracy(&test).unwrap())
            .sum::<f64>()
            / 100.0;
        assert!((mean - chance).abs() < 0.03, "{alg}: {mean} vs {chance}");
    }
}

#[test]
fn fits_are_deterministic_and_survive_serialization() {
    let lg = common::league(10, 3, 8);
    let (train, test) = common::split_first_season(&lg.rows);
    assert!(!test.is_empty());
    let dir = tempfile::tempdir().unwrap();
    for alg in Algorithm::ALL {
        let a = fit(&quick(alg, 3), &train).unwrap();
        let b = fit(&quick(alg, 3), &train).unwrap();
        let ca = a.confidences(&test).unwrap();
        assert_eq!(ca, b.confidences(&test).unwrap(), "{alg} is not deterministic");
        for c in &ca {
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{alg}: {c:?}");
        }
        let path = dir.path().join(format!("{alg}.json"));
        a.save(&path).unwrap();
        let loaded = TrainedModel::load(&path).unwrap();
        assert_eq!(loaded.confidences(&test).unwrap(), ca, "{alg} changed after reload");
    }
}

#[test]
fn unknown_model_format_is_rejected() {
    let lg = common::league(6, 2, 1);
    let model = fit(&ClassifierSpec::new(Algorithm::Knn, 1), &lg.rows).unwrap();
    let json = model.to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 99", 1);
    assert!(TrainedModel::from_json(&json).is_err());
}

#[test]
fn predictions_follow_argmax_with_home_draw_away_priority() {
    let lg = common::league(10, 2, 2);
    let model = fit(&ClassifierSpec::new(Algorithm::LogisticRegression, 1), &lg.rows).unwrap();
    for o in model.predict_rows(&lg.rows).unwrap() {
        let best = o.confidences.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first = MatchResult::ALL.into_iter().find(|r| o.confidences[r.index()] == best).unwrap();
        assert_eq!(o.predicted, first);
    }
}

#[test]
fn shuffled_labels_destroy_the_signal() {
    let lg = common::league(20, 3, 7);
    let (train, test) = common::split_first_season(&lg.rows);
    let spec = ClassifierSpec::new(Algorithm::LogisticRegression, 1);
    let real = fit(&spec, &train).unwrap().accuracy(&test).unwrap();
    let mut labels: Vec<MatchResult> = train.iter().map(|r| r.label).collect();
    let mut shuffled_acc = 0.0;
    for seed in 0..5 {
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut noisy = train.clone();
        for (r, l) in noisy.iter_mut().zip(&labels) {
            r.label = *l;
        }
        shuffled_acc += fit(&spec, &noisy).unwrap().accuracy(&test).unwrap() / 5.0;
    }
    let majority = MatchResult::ALL
        .iter()
        .map(|c| test.iter().filter(|r| r.label == *c).count())
        .max()
        .unwrap() as f64
        / test.len() as f64;
    assert!(real > shuffled_acc + 0.08, "real {real} shuffled {shuffled_acc}");
    assert!(shuffled_acc < majority + 0.03, "shuffled {shuffled_acc} majority {majority}");
}

#[test]
fn tiny_or_single_class_training_sets_are_rejected() {
    let lg = common::league(6, 2, 3);
    let spec = ClassifierSpec::new(Algorithm::DecisionTree, 1);
    assert!(matches!(fit(&spec, &lg.rows[..5]), Err(Error::DegenerateFit(_))));
    let mut one = lg.rows[..20].to_vec();
    for r in &mut one {
        r.label = MatchResult::HomeWin;
    }
    assert!(fit(&spec, &one).is_err());
    let bad = ClassifierSpec::new(Algorithm::Knn, 1).with("max_depth", 3i64);
    assert!(matches!(fit(&bad, &lg.rows), Err(Error::Spec(_))));
}
