use uaboost::analysis::pearson;
use uaboost::data::{split, synthesize, Dataset, Modality, NoiseProfile, SplitSpec, SyntheticSpec};
use uaboost::ensemble::{
    fuse, train_learner, BoostMode, BoostedEnsemble, BundleInfo, FusionRule, ModalityInputs, WeightChain,
};
use uaboost::experiment::{compare, learner_specs, run_seed, train_one, ProtocolConfig, DEFAULT_ORDER};
use uaboost::nn::TrainConfig;

fn quick_train() -> TrainConfig {
    TrainConfig {
        max_epochs: 25,
        patience: 8,
        ..TrainConfig::default()
    }
}

fn quick_protocol() -> ProtocolConfig {
    ProtocolConfig {
        train: quick_train(),
        ..ProtocolConfig::default()
    }
}

fn synth(n: usize, profile: NoiseProfile, seed: u64) -> Dataset {
    synthesize(&SyntheticSpec::new(n, profile, seed)).unwrap()
}

#[test]
fn dataset_round_trips_bit_exactly() {
    let ds = synth(80, NoiseProfile::Step, 4);
    let back = Dataset::from_json(&ds.to_json().unwrap()).unwrap();
    assert_eq!(ds, back);
    let bits = |d: &Dataset| d.labels.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&ds), bits(&back));
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ds.json");
    ds.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap(), ds);
}

#[test]
fn test_labels_never_influence_training() {
    let ds = synth(120, NoiseProfile::InputScaled, 2);
    let parts = split(ds.len(), &SplitSpec::default()).unwrap();
    let cfg = quick_protocol();
    let clean = run_seed(&ds, &parts, &cfg, 5).unwrap();

    let mut corrupted = ds.clone();
    for &i in &parts.test {
        corrupted.labels[i] = -1e3;
    }
    let dirty = run_seed(&corrupted, &parts, &cfg, 5).unwrap();

    let params = |ens: &BoostedEnsemble| ens.learners.iter().map(|l| l.network.flat_params()).collect::<Vec<_>>();
    assert_eq!(params(&clean.vanilla), params(&dirty.vanilla));
    assert_eq!(params(&clean.ua), params(&dirty.ua));
    assert_eq!(clean.ua.weight_history, dirty.ua.weight_history);
    assert_eq!(clean.vanilla_predictions, dirty.vanilla_predictions);
    for (a, b) in clean.individual.iter().zip(&dirty.individual) {
        assert_eq!(a.network, b.network);
    }
}

#[test]
fn stage_one_is_shared_between_modes() {
    let ds = synth(100, NoiseProfile::InputScaled, 3);
    let parts = split(ds.len(), &SplitSpec::default()).unwrap();
    let tc = quick_train();
    let v = train_one(&ds, &parts, &DEFAULT_ORDER, BoostMode::Vanilla, FusionRule::Mean, WeightChain::Previous, &tc, 1)
        .unwrap();
    let u = train_one(&ds, &parts, &DEFAULT_ORDER, BoostMode::Ua, FusionRule::Mean, WeightChain::Previous, &tc, 1)
        .unwrap();
    assert_eq!(v.learners[0].network, u.learners[0].network);
    assert_ne!(v.weight_history[1], u.weight_history[1]);
    assert_ne!(v.learners[1].network, u.learners[1].network);
    assert_eq!(v.order(), DEFAULT_ORDER.to_vec());
    for stage in &u.weight_history {
        let mean = stage.iter().sum::<f64>() / stage.len() as f64;
        assert!((mean - 1.0).abs() < 1e-9);
    }
}

#[test]
fn cumulative_chain_multiplies_stage_weights() {
    let ds = synth(100, NoiseProfile::InputScaled, 3);
    let parts = split(ds.len(), &SplitSpec::default()).unwrap();
    let tc = quick_train();
    let prev = train_one(&ds, &parts, &DEFAULT_ORDER, BoostMode::Ua, FusionRule::Mean, WeightChain::Previous, &tc, 1)
        .unwrap();
    let cum = train_one(&ds, &parts, &DEFAULT_ORDER, BoostMode::Ua, FusionRule::Mean, WeightChain::Cumulative, &tc, 1)
        .unwrap();
    // Stage 2 has a uniform prior, so both chains agree there up to rounding.
    for (a, b) in prev.weight_history[1].iter().zip(&cum.weight_history[1]) {
        assert!((a - b).abs() < 1e-12);
    }
    let stage3 = &cum.weight_history[2];
    assert_ne!(stage3, &prev.weight_history[2]);
    assert!((stage3.iter().sum::<f64>() / stage3.len() as f64 - 1.0).abs() < 1e-9);
}

#[test]
fn single_learner_ensemble_is_plain_training() {
    let ds = synth(90, NoiseProfile::Constant, 6);
    let parts = split(ds.len(), &SplitSpec::default()).unwrap();
    let tc = quick_train();
    let ens = train_one(&ds, &parts, &[Modality::Acoustic], BoostMode::Ua, FusionRule::InverseSigma, WeightChain::Previous, &tc, 2)
        .unwrap();
    let spec = &learner_specs(&[Modality::Acoustic], 2)[0];
    let plain = train_learner(&ds, &parts, spec, &vec![1.0; parts.train.len()], &tc.clone().with_seed(2)).unwrap();
    assert_eq!(ens.learners[0].network, plain.network);
    let inputs = ModalityInputs::from_dataset(&ds, parts.test[0]);
    let (fused, per) = ens.predict(&inputs).unwrap();
    assert_eq!(per.len(), 1);
    assert_eq!(fused, per[0].mu);
}

#[test]
fn bundle_round_trip_preserves_predictions() {
    let ds = synth(90, NoiseProfile::Step, 8);
    let spec = SplitSpec::default();
    let parts = split(ds.len(), &spec).unwrap();
    let ens = train_one(&ds, &parts, &DEFAULT_ORDER, BoostMode::Vanilla, FusionRule::InverseSigma, WeightChain::Previous, &quick_train(), 4)
        .unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let info = BundleInfo {
        split: Some(spec),
        run_config: Some(serde_json::json!({"seed": 4})),
    };
    ens.save(tmp.path(), &info).unwrap();
    let (back, back_info) = BoostedEnsemble::load(tmp.path()).unwrap();
    assert_eq!(back_info, info);
    assert_eq!(back.weight_history, ens.weight_history);
    assert_eq!(
        back.predict_indices(&ds, &parts.test).unwrap(),
        ens.predict_indices(&ds, &parts.test).unwrap()
    );
}

#[test]
fn identical_learner_outputs_fuse_to_their_mean() {
    let ds = synth(90, NoiseProfile::Step, 8);
    let parts = split(ds.len(), &SplitSpec::default()).unwrap();
    let tc = quick_train();
    let learner = train_learner(&ds, &parts, &learner_specs(&[Modality::Disfluency], 0)[0], &vec![1.0; parts.train.len()], &tc)
        .unwrap();
    let pred = learner.predict_indices(&ds, &parts.test[..1]).unwrap()[0];
    for rule in [FusionRule::Mean, FusionRule::InverseSigma] {
        assert_eq!(fuse(&[pred; 3], rule).unwrap(), pred.mu);
    }
}

#[test]
fn compare_is_independent_of_jobs() {
    let ds = synth(80, NoiseProfile::InputScaled, 1);
    let cfg = quick_protocol();
    let serial = compare(&ds, &cfg, &[0, 1, 2], 1).unwrap();
    let parallel = compare(&ds, &cfg, &[0, 1, 2], 3).unwrap();
    assert_eq!(serial.rows, parallel.rows);
    assert_eq!(serial.entropy, parallel.entropy);
    assert_eq!(serial.rows.len(), 6);
    assert_eq!(serial.row(uaboost::experiment::Method::UaWeighted).unwrap().fusion, "inverse_sigma");
}

#[test]
fn ua_stage_two_weights_follow_true_noise() {
    let ds = synth(600, NoiseProfile::InputScaled, 12);
    let parts = split(ds.len(), &SplitSpec::default()).unwrap();
    let ens = train_one(&ds, &parts, &DEFAULT_ORDER, BoostMode::Ua, FusionRule::Mean, WeightChain::Previous, &TrainConfig::default(), 0)
        .unwrap();
    let truth = ds.truth.as_ref().unwrap();
    let s: Vec<f64> = parts.train.iter().map(|&i| truth.noise_std[i]).collect();
    let r = pearson(&ens.weight_history[1], &s).unwrap();
    assert!(r > 0.3, "r = {r}");
}
