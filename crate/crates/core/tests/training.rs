use stftkan::data::synth::shapes_dataset;
use stftkan::data::DatasetSplit;
use stftkan::model::{ModelConfig, ModelVariant};
use stftkan::train::{
    evaluate, history_csv, random_search, read_checkpoint_from, train, trials_csv, write_checkpoint_to, SearchSpace,
    TrainConfig,
};
use stftkan::{Error, LiteDgcnn, Rng};

fn small_config(variant: ModelVariant) -> TrainConfig {
    TrainConfig {
        epochs: 3,
        batch_size: 8,
        points: 64,
        ..TrainConfig::new(variant).with_model(&ModelConfig::scaled(variant, 3))
    }
}

fn small_split(seed: u64) -> DatasetSplit {
    shapes_dataset(8, 64, seed).split(0.75, seed).unwrap()
}

#[test]
fn repeated_runs_are_identical() {
    let split = small_split(0);
    for v in [ModelVariant::StftKan, ModelVariant::Mlp] {
        let cfg = small_config(v);
        let a = train(&cfg, &split).unwrap();
        let b = train(&cfg, &split).unwrap();
        assert_eq!(history_csv(&a.history, false), history_csv(&b.history, false));
        assert_eq!(a.final_model.params(), b.final_model.params());
    }
}

#[test]
fn outcome_is_consistent_with_evaluation() {
    let split = small_split(1);
    let out = train(&small_config(ModelVariant::StftKanMlp), &split).unwrap();
    assert_eq!(out.history.len(), 3);
    let again = evaluate(&out.final_model, &split.test).unwrap();
    assert_eq!(again.confusion, out.final_metrics.confusion);
    assert_eq!(again.oa, out.history.last().unwrap().test_oa);
    assert_eq!(out.best_metrics.oa, out.history[out.best_epoch].test_oa);
    assert!(out.history.iter().all(|r| r.test_oa <= out.best_metrics.oa));
    assert!(out.history.iter().all(|r| r.train_loss.is_finite() && r.lr > 0.0));
    assert!(out.history.windows(2).all(|w| w[1].lr <= w[0].lr));
}

#[test]
fn checkpoint_of_trained_model_scores_the_same() {
    let split = small_split(2);
    let out = train(&small_config(ModelVariant::FourierKan), &split).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint_to(&mut bytes, &out.final_model, &split.class_names).unwrap();
    let back = read_checkpoint_from(&mut bytes.as_slice(), Some(ModelVariant::FourierKan)).unwrap();
    assert_eq!(back.class_names, split.class_names);
    let m = evaluate(&back.model, &split.test).unwrap();
    assert_eq!(m.confusion, out.final_metrics.confusion);
}

#[test]
fn non_finite_input_aborts_with_batch_and_layer() {
    let mut split = small_split(3);
    split.train[4].points.data_mut()[7] = f64::NAN;
    let cfg = TrainConfig { augment: false, ..small_config(ModelVariant::StftKan) };
    match train(&cfg, &split) {
        Err(Error::NonFinite { layer, batch: Some(b) }) => {
            assert_eq!(layer, "input");
            assert!(b < split.train.len().div_ceil(cfg.batch_size));
        }
        other => panic!("expected a non-finite error, got {other:?}"),
    }
}

#[test]
fn mismatched_point_count_is_a_config_error() {
    let split = small_split(4);
    let cfg = TrainConfig { points: 128, ..small_config(ModelVariant::Mlp) };
    assert!(matches!(train(&cfg, &split), Err(Error::Config(_))));
}

#[test]
fn thread_count_does_not_change_results() {
    let split = small_split(5);
    let cfg = small_config(ModelVariant::StftKan);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train(&cfg, &split)).unwrap()
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(history_csv(&a.history, false), history_csv(&b.history, false));
    assert_eq!(a.final_model.params(), b.final_model.params());
}

#[test]
fn untrained_models_score_near_the_majority_share() {
    let split = shapes_dataset(30, 64, 6).split(0.8, 6).unwrap();
    let majority = *split.test_counts().iter().max().unwrap() as f64 / split.test.len() as f64;
    let mut total = 0.0;
    let mut runs = 0;
    for v in ModelVariant::ALL {
        for seed in 0..5 {
            let model = LiteDgcnn::<f32>::build(ModelConfig::scaled(v, 3), &mut Rng::new(seed)).unwrap();
            let m = evaluate(&model, &split.test).unwrap();
            assert_eq!(m.param_count, model.config().param_count());
            total += m.oa;
            runs += 1;
        }
    }
    let mean = total / runs as f64;
    assert!((mean - majority).abs() < 0.1, "mean OA {mean:.3}, majority share {majority:.3}");
}

fn narrow_space() -> SearchSpace {
    let pairs: Vec<(String, String)> = [
        ("ecl2.window_size", "2..8"),
        ("fel.window_size", "4..16"),
        ("fel.stride", "2..6"),
        ("cl.window_size", "10..40"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    SearchSpace::default().apply_pairs(&pairs).unwrap()
}

#[test]
fn single_trial_matches_a_plain_run() {
    let split = small_split(7);
    let base = small_config(ModelVariant::StftKan);
    let space = narrow_space();
    let trials = random_search(&base, &space, 1, 2, &split).unwrap();
    let t = &trials[0];
    for (l, s) in space.layers.iter().zip(&t.stft) {
        assert!(l.contains(s));
    }
    let plain = train(&TrainConfig { stft: t.stft, epochs: 2, ..base }, &split).unwrap();
    assert_eq!(t.final_oa, plain.final_metrics.oa);
    assert_eq!(t.param_count, plain.final_model.param_count());
}

#[test]
fn search_tables_repeat_for_a_seed() {
    let split = small_split(8);
    let base = small_config(ModelVariant::StftKan);
    let space = narrow_space();
    let a = trials_csv(&random_search(&base, &space, 3, 1, &split).unwrap());
    let b = trials_csv(&random_search(&base, &space, 3, 1, &split).unwrap());
    assert_eq!(a, b);
    let c = trials_csv(&random_search(&TrainConfig { seed: 1, ..base }, &space, 3, 1, &split).unwrap());
    assert_ne!(a, c);
    let oas: Vec<f64> = a.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(oas.windows(2).all(|w| w[0] >= w[1]));
}
