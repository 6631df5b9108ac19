use unimodal_core::data::{generate, generate_with_embedding, kfold_indices, split, Dataset, SyntheticSpec};
use unimodal_core::trainer::{kfold, sgd_step, train, Aggregate, LossKind, SgdState, TrainConfig};
use unimodal_core::Label;

fn synthetic(classes: usize, dim: usize, n: usize, noise: f64, seed: u64) -> Dataset {
    generate(&SyntheticSpec {
        classes,
        dim,
        n,
        noise_sigma: noise,
        embed_seed: 5,
        sample_seed: seed,
    })
    .unwrap()
}

fn parts(ds: &Dataset, seed: u64) -> (Dataset, Dataset, Dataset) {
    let s = split(ds, [0.6, 0.2, 0.2], seed).unwrap();
    (
        ds.subset(&s.train).unwrap(),
        ds.subset(&s.validation).unwrap(),
        ds.subset(&s.test).unwrap(),
    )
}

#[test]
fn zero_epochs_reports_the_initial_model() {
    let ds = synthetic(4, 3, 60, 0.2, 1);
    let (tr, va, te) = parts(&ds, 0);
    let cfg = TrainConfig {
        epochs: 0,
        hidden: vec![8],
        ..TrainConfig::default()
    };
    let run = train(&tr, &va, &te, &cfg).unwrap();
    assert!(run.record.epochs.is_empty());
    assert_eq!(run.record.best_epoch, 0);
    let init = unimodal_core::model::Mlp::init(run.model.spec().clone()).unwrap();
    assert_eq!(run.model.params(), init.params());
}

#[test]
fn identical_configs_give_identical_records() {
    let ds = synthetic(5, 4, 120, 0.3, 2);
    let (tr, va, te) = parts(&ds, 3);
    for loss in LossKind::ALL {
        let cfg = TrainConfig {
            loss,
            epochs: 4,
            hidden: vec![8, 8],
            seed: 9,
            ..TrainConfig::default()
        };
        let a = train(&tr, &va, &te, &cfg).unwrap();
        let b = train(&tr, &va, &te, &cfg).unwrap();
        assert_eq!(a.record, b.record, "{loss}");
        assert_eq!(a.model.params(), b.model.params(), "{loss}");
        assert_eq!(a.record.epochs.len(), 4);
    }
}

#[test]
fn separable_case_is_learned() {
    let spec = SyntheticSpec {
        classes: 3,
        dim: 1,
        n: 300,
        noise_sigma: 0.0,
        embed_seed: 0,
        sample_seed: 4,
    };
    let ds = generate_with_embedding(&spec, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let (tr, va, te) = parts(&ds, 1);
    let cfg = TrainConfig {
        epochs: 200,
        lr: 1e-2,
        hidden: vec![16],
        ..TrainConfig::default()
    };
    let run = train(&tr, &va, &te, &cfg).unwrap();
    let by_mae = run.record.test_by_mae.unwrap();
    assert!(by_mae.mae < 0.05, "test MAE {}", by_mae.mae);
}

#[test]
fn learning_rate_and_temperature_sequences() {
    let cfg = TrainConfig::default();
    assert_eq!(cfg.lr_at(0), 1e-3);
    assert_eq!(cfg.lr_at(99), 1e-3);
    assert!((cfg.lr_at(100) - 1e-4).abs() < 1e-18);
    assert!((cfg.lr_at(250) - 1e-5).abs() < 1e-18);
    assert_eq!(cfg.lr_at(10_000), 1e-7);
    let mut prev = 0.0;
    for e in 0..2000 {
        let t = cfg.t_at(e);
        assert!(t >= prev && t <= 5.0);
        prev = t;
    }
    assert!((cfg.t_at(10) - 1.001f64.powi(10)).abs() < 1e-12);
    assert_eq!(cfg.t_at(1700), 5.0);
}

#[test]
fn elb_records_temperature_and_warm_starts() {
    let ds = synthetic(4, 3, 80, 0.2, 3);
    let (tr, va, te) = parts(&ds, 0);
    let cfg = TrainConfig {
        loss: LossKind::Elb,
        epochs: 3,
        hidden: vec![8],
        ..TrainConfig::default()
    };
    let run = train(&tr, &va, &te, &cfg).unwrap();
    let ts: Vec<f64> = run.record.epochs.iter().map(|e| e.t.unwrap()).collect();
    assert_eq!(ts, vec![1.0, 1.001, 1.001 * 1.001]);
    let short = train(
        &tr,
        &va,
        &te,
        &TrainConfig {
            epochs: 2,
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_eq!(short.record.epochs[..], run.record.epochs[..2]);
}

#[test]
fn divergence_returns_partial_record() {
    let ds = synthetic(3, 2, 40, 0.1, 0);
    let (tr, va, te) = parts(&ds, 0);
    let cfg = TrainConfig {
        epochs: 5,
        lr: 1e300,
        hidden: vec![4],
        ..TrainConfig::default()
    };
    let failure = train(&tr, &va, &te, &cfg).unwrap_err();
    let record = failure.record.expect("partial record");
    assert!(record.failure.is_some());
    assert!(record.epochs.len() < 5);
}

#[test]
fn sgd_matches_hand_iteration() {
    let mut x = vec![1.0];
    let mut state = SgdState::new(1);
    for b in 0..2 {
        let g = vec![x[0]];
        sgd_step(&mut x, &g, &mut state, 0.1, 0.0, 0.0, b).unwrap();
    }
    assert!((x[0] - 0.81).abs() < 1e-15);
    assert!(sgd_step(&mut x, &[f64::NAN], &mut state, 0.1, 0.0, 0.0, 3).is_err());
}

#[test]
fn kfold_rotates_validation() {
    let labels: Vec<Label> = (0..10).map(|i| Label::new(1 + i % 2)).collect();
    let folds = kfold_indices(&labels, 2, 2, 0).unwrap();
    assert_eq!(folds.folds.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5]);
    let mut all: Vec<usize> = folds.folds.concat();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());

    let ds = synthetic(3, 2, 90, 0.1, 1);
    let s = split(&ds, [0.7, 0.2, 0.1], 0).unwrap();
    let trainval = ds.subset(&s.train).unwrap();
    let test = ds.subset(&s.test).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        hidden: vec![4],
        ..TrainConfig::default()
    };
    let out = kfold(&trainval, &test, 3, 1, &cfg).unwrap();
    assert_eq!(out.runs.len(), 3);
    assert!(out.aggregate.failed.is_empty());
    let seeds: Vec<u64> = out
        .runs
        .iter()
        .map(|r| r.as_ref().unwrap().record.config.seed)
        .collect();
    assert_eq!(seeds, vec![0, 1, 2]);

    let one = out.runs[0].as_ref().unwrap().record.clone();
    let same = Aggregate::of([&one, &one, &one]);
    assert_eq!(same.mae.std, 0.0);
    assert_eq!(same.soi_predicted.std, 0.0);
}
