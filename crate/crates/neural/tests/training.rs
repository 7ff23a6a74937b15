use cnml_core::datagen::{generate_pairs, FilterMode, PairGenConfig, PairRecord};
use cnml_neural::{load_checkpoint, save_checkpoint, train, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy_pairs(n: usize, seed: u64) -> Vec<PairRecord> {
    let config = PairGenConfig { count: n, ..PairGenConfig::default() };
    generate_pairs(&config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().0
}

fn smoke_config(steps: usize) -> TrainConfig {
    let mut c = TrainConfig::desk();
    c.total_steps = steps;
    c.warmup_steps = steps * 2 / 5;
    c.batch_size = 64;
    c.lr = 4e-3;
    c.batch_filter = FilterMode::None;
    c.model.encoder.layers = 1;
    c.log_every = 0;
    c
}

#[test]
fn smoke_train_halves_the_loss() {
    let pairs = toy_pairs(64, 11);
    let config = smoke_config(50);
    let t0 = std::time::Instant::now();
    let out = train(&pairs, &config, |_| {}).unwrap();
    eprintln!("50 steps in {:?}", t0.elapsed());
    let ln_n = (config.batch_size as f64).ln();
    let first = out.log[0].l_ce;
    assert!((first - ln_n).abs() < 0.5, "initial loss {first} should be near ln N = {ln_n}");
    let tail: f64 = out.log[45..].iter().map(|s| s.l_ce).sum::<f64>() / 5.0;
    assert!(tail <= 0.5 * ln_n, "final loss {tail} vs ln N {ln_n}");
    assert_eq!(out.log.len(), 50);
    assert_eq!(out.log[0].lr, 0.0);
}

#[test]
fn identical_seeds_give_identical_checkpoints() {
    let pairs = toy_pairs(40, 12);
    let mut config = smoke_config(8);
    config.batch_size = 16;
    let a = train(&pairs, &config, |_| {}).unwrap();
    let b = train(&pairs, &config, |_| {}).unwrap();
    assert_eq!(a.log, b.log);
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.ckpt"), dir.path().join("b.ckpt"));
    let extra = serde_json::to_value(&config).unwrap();
    save_checkpoint(&pa, &a.model, &extra).unwrap();
    save_checkpoint(&pb, &b.model, &extra).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let (back, meta) = load_checkpoint(&pa).unwrap();
    assert_eq!(back, a.model);
    assert_eq!(serde_json::from_value::<TrainConfig>(meta).unwrap(), config);
}

#[test]
fn oracle_filtered_training_runs() {
    let pairs = toy_pairs(24, 13);
    let mut config = smoke_config(6);
    config.batch_filter = FilterMode::Oracle;
    config.batch_size = 8;
    config.accumulation = 2;
    config.model.encoder.d_model = 16;
    let out = train(&pairs, &config, |_| {}).unwrap();
    assert_eq!(out.log.len(), 6);
    assert!(out.log.iter().all(|s| s.loss.is_finite()));
}
