mod common;

use venuetier::classifier::{
    forward_combine, grid_search, rank_features, train_smo, GridSearchConfig, Label, LabeledDataset, SvmParams,
};
use venuetier::corpus::AuthorIndex;
use venuetier::features::{extract_profiles, FeatureConfig, Quantity, Statistic};
use venuetier::stats::pearson_matrix;
use venuetier::synth::{generate_corpus, StabilityProfile, SynthConfig};

use common::*;

fn group_mean_deltas(cfg: &SynthConfig) -> Vec<f64> {
    let out = generate_corpus(cfg).unwrap();
    let index = AuthorIndex::build(&out.corpus);
    let fc = FeatureConfig {
        window: Some(out.analysis_window),
        ..FeatureConfig::default()
    };
    let venues: Vec<&str> = out.labels.keys().map(String::as_str).collect();
    let profiles: Vec<_> = extract_profiles(&out.corpus, &index, &venues, &fc)
        .into_iter()
        .map(|(_, p)| p.unwrap().features)
        .collect();
    Quantity::ALL
        .iter()
        .map(|&q| profiles.iter().map(|f| f.get(q, Statistic::Mean)).sum::<f64>() / profiles.len() as f64)
        .collect()
}

fn single_profile(drift: f64, papers: usize) -> SynthConfig {
    SynthConfig {
        n_venues_stable: 4,
        n_venues_unstable: 0,
        start_year: 2000,
        end_year: 2007,
        papers_per_year: papers,
        stable: StabilityProfile {
            drift,
            group_churn: 0.0,
            member_churn: 0.0,
        },
        seed: 11,
        ..SynthConfig::default()
    }
}

#[test]
fn topic_deltas_grow_with_drift() {
    let levels = [0.0, 0.3, 0.9];
    let means: Vec<Vec<f64>> = levels.iter().map(|&d| group_mean_deltas(&single_profile(d, 60))).collect();
    for q in [Quantity::Crdi, Quantity::Ckdi, Quantity::Pna] {
        let row: Vec<f64> = means.iter().map(|m| m[q.index()]).collect();
        assert!(row.windows(2).all(|w| w[0] < w[1]), "{}: {row:?}", q.name());
    }
}

#[test]
fn frozen_venues_have_small_topic_deltas() {
    let m = group_mean_deltas(&single_profile(0.0, 200));
    for q in [Quantity::Crdi, Quantity::Ckdi, Quantity::Cadi, Quantity::Pna, Quantity::Acc] {
        assert!(m[q.index()] < 0.05, "{} mean delta {}", q.name(), m[q.index()]);
    }
}

#[test]
fn synthetic_corpus_validates_and_labels_by_stability() {
    let cfg = SynthConfig {
        n_venues_stable: 2,
        n_venues_unstable: 2,
        papers_per_year: 20,
        ..SynthConfig::default()
    };
    let out = generate_corpus(&cfg).unwrap();
    assert_eq!(out.venues_with(Label::TopTier).len(), 2);
    assert_eq!(out.venues_with(Label::NonTopTier).len(), 2);
    assert!(out.corpus.dangling_refs().is_empty());
    let (lo, hi) = out.analysis_window;
    assert_eq!((lo, hi), (cfg.start_year, cfg.end_year));
    assert_eq!(out.corpus.year_range().0, cfg.first_generated_year());
}

fn informative_dataset() -> (LabeledDataset, LabeledDataset) {
    let mut r = rng(5);
    let mut make = |n: usize| {
        use rand::Rng;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { Label::TopTier } else { Label::NonTopTier };
            let signal = label.sign() * r.random_range(1.0..2.0);
            rows.push(vec![
                r.random_range(-1.0..1.0),
                signal,
                r.random_range(-1.0..1.0),
                signal * 2.0 + 0.001 * r.random_range(-1.0..1.0),
            ]);
            labels.push(label);
        }
        LabeledDataset::from_rows(rows, labels).unwrap()
    };
    (make(40), make(30))
}

#[test]
fn informative_feature_ranks_first() {
    let (train, validate) = informative_dataset();
    let params = SvmParams::new(0.5, 1.0);
    let ranking = rank_features(&train, &validate, &params).unwrap();
    assert!(ranking[0].feature == 1 || ranking[0].feature == 3);
    assert_eq!(ranking[0].accuracy, 1.0);
    let names: Vec<String> = (0..4).map(|i| format!("f{i}")).collect();
    let corr = pearson_matrix(&train.rows, &names).unwrap();
    let order: Vec<usize> = ranking.iter().map(|s| s.feature).collect();
    let fs = forward_combine(&order, &train, &validate, &corr.absolute(), 0.99, &params).unwrap();
    assert_eq!(fs.best_accuracy, 1.0);
    assert_eq!(fs.best_prefix, 1);
    assert_eq!(fs.selected, vec![order[0]]);

    let fs = forward_combine(&[1, 3], &train, &validate, &corr.absolute(), 0.99, &params).unwrap();
    assert_eq!(fs.curve.len(), 2);
    assert!(fs.selected.len() == 1 && fs.final_accuracy == 1.0);
}

#[test]
fn separable_grid_reaches_perfect_accuracy() {
    let (rows, labels) = two_blobs(17, 40);
    let data = LabeledDataset::from_rows(rows, labels).unwrap();
    let cfg = GridSearchConfig {
        folds: 5,
        gamma_grid: vec![0.01, 0.1, 1.0],
        c_grid: vec![0.1, 1.0, 10.0],
        ..GridSearchConfig::default()
    };
    let report = grid_search(&data, &cfg).unwrap();
    assert_eq!(report.best_accuracy, 1.0);
    assert_eq!(report.cells.len(), 9);
    let again = grid_search(&data, &cfg).unwrap();
    assert_eq!((report.best_gamma, report.best_c), (again.best_gamma, again.best_c));
}

#[test]
fn flipping_labels_negates_decisions() {
    let (rows, labels) = two_blobs(3, 30);
    let data = LabeledDataset::from_rows(rows.clone(), labels).unwrap();
    let params = SvmParams::new(0.3, 5.0);
    let a = train_smo(&data, &params).unwrap();
    let b = train_smo(&data.with_flipped_labels(), &params).unwrap();
    for row in &rows {
        let da = a.predict(row).unwrap().decision;
        let db = b.predict(row).unwrap().decision;
        assert!((da + db).abs() < 1e-2 * (1.0 + da.abs()), "{da} vs {db}");
    }
}
