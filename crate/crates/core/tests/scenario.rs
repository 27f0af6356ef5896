use channel_charting::encoder::{Encoder, EncoderParams};
use channel_charting::evalmetrics::evaluate;
use channel_charting::metricspace::pseudo_distance;
use channel_charting::rng::SplitMix64;
use channel_charting::synthgen::{ChannelSet, Scenario, DEFAULT_SAMPLES};
use channel_charting::trainer::{train, TrainConfig};
use channel_charting::triplet::MiningConfig;

fn row(cs: &ChannelSet, i: usize) -> &[num_complex::Complex64] {
    cs.channels.row(i).to_slice().unwrap()
}

/// Mean distance between consecutive samples over the mean distance between
/// uniformly drawn pairs (200k of them; the estimate's standard error is
/// far below the margin to the bound).
fn continuity_ratio(cs: &ChannelSet) -> f64 {
    let n = cs.len();
    let consecutive: f64 = (0..n - 1)
        .map(|i| pseudo_distance(row(cs, i), row(cs, i + 1)).unwrap())
        .sum::<f64>()
        / (n - 1) as f64;
    let mut rng = SplitMix64::new(99);
    let pairs = 200_000;
    let mut total = 0.0;
    for _ in 0..pairs {
        let a = rng.below(n as u64) as usize;
        let b = rng.below(n as u64) as usize;
        total += pseudo_distance(row(cs, a), row(cs, b)).unwrap();
    }
    consecutive / (total / pairs as f64)
}

#[test]
fn default_dataset_is_spatially_continuous() {
    let cs = Scenario::default().generate().unwrap();
    assert_eq!((cs.len(), cs.dim()), (DEFAULT_SAMPLES, 1024));
    let ratio = continuity_ratio(&cs);
    assert!(ratio < 0.5, "ratio {ratio}");
}

#[test]
fn scaled_dataset_is_spatially_continuous() {
    let cs = Scenario::default_with_samples(2000).generate().unwrap();
    assert_eq!(cs.len(), 2000);
    let ratio = continuity_ratio(&cs);
    assert!(ratio < 0.5, "ratio {ratio}");
}

#[test]
fn generation_is_reproducible_and_seed_dependent() {
    let sc = Scenario::default_with_samples(200);
    let a = sc.generate().unwrap();
    assert_eq!(a, sc.generate().unwrap());
    let mut other = sc.clone();
    other.trajectory.seed += 1;
    assert_ne!(a.positions, other.generate().unwrap().positions);
}

#[test]
fn smart_initialization_beats_random_on_a_small_loop() {
    let cs = Scenario::default_with_samples(400).generate().unwrap();
    let (_, eval) = TrainConfig::default().split(cs.len()).unwrap();
    let grid = [0.05];
    let smart = EncoderParams::init_smart(&cs, 60, 5, 5, 2, 1).unwrap();
    let random = EncoderParams::init_random(cs.dim(), 60, 5, 2, 1).unwrap();
    let s = &evaluate(&smart, &cs, &eval, &grid).unwrap().rows[0];
    let r = &evaluate(&random, &cs, &eval, &grid).unwrap().rows[0];
    assert!(s.trustworthiness > r.trustworthiness, "{s:?} vs {r:?}");
    assert!(s.continuity > r.continuity, "{s:?} vs {r:?}");
}

#[test]
fn training_on_a_small_loop_reduces_the_loss() {
    let cs = Scenario::default_with_samples(300).generate().unwrap();
    let model = EncoderParams::init_random(cs.dim(), 40, 5, 2, 4).unwrap();
    let before = model.tensors().concat();
    let cfg = TrainConfig {
        epochs: 5,
        seed: 2,
        ..TrainConfig::default()
    };
    let mining = MiningConfig {
        t_close: 5.0,
        t_far: 15.0,
        sample_rate: cs.sample_rate,
        per_anchor: 2,
        seed: 3,
    };
    let report = train(model, &cs, &cfg, &mining).unwrap();
    assert_eq!(report.epoch_losses.len(), 5);
    assert!(report.epoch_losses[4] < report.epoch_losses[0], "{:?}", report.epoch_losses);
    assert_ne!(report.model.tensors().concat(), before);
    assert_eq!(report.train_indices.len() + report.eval_indices.len(), cs.len());
}
