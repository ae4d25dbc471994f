#![cfg(feature = "parallel")]

use camp_core::attack::{attack_csv, attack_suite, AttackConfig, InnerAttack};
use camp_core::certify::{certify_curve, collect_returns, BoundMode};
use camp_core::env::EnvKind;
use camp_core::nn::QNetwork;
use camp_core::rng;
use camp_core::trainer::{train, Method, TrainConfig};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn net() -> QNetwork {
    QNetwork::new(&[4, 32, 2], &mut rng::stream(11, "test-net", 0)).unwrap()
}

#[test]
fn certification_ignores_thread_count() {
    let net = net();
    let run = || {
        let s = collect_returns(&net, EnvKind::Cartpole1, 0.2, 64, 3).unwrap();
        (s.to_csv(), certify_curve(&s, 0.05, 0.2, &[0.0, 0.4], BoundMode::Dkw).unwrap().to_csv("x"))
    };
    let one = in_pool(1, run);
    assert_eq!(one, in_pool(4, run));
    assert_eq!(one, in_pool(8, run));
}

#[test]
fn attacks_ignore_thread_count() {
    let net = net();
    let cfg = AttackConfig::new(0.0, InnerAttack::Apgd, 0.1, 12, 5);
    let run = || attack_csv(&attack_suite(&net, EnvKind::Cartpole1, &cfg, &[0.0, 0.3]).unwrap(), &cfg);
    assert_eq!(in_pool(1, run), in_pool(8, run));
}

#[test]
fn training_ignores_thread_count() {
    let cfg = TrainConfig {
        total_steps: 700,
        burn_in: 100,
        batch_size: 16,
        train_freq: 64,
        grad_steps_per_train: 2,
        validation_every: 300,
        validation_episodes: 4,
        ..TrainConfig::desk(EnvKind::Cartpole5, Method::Camp, 0.2, 1.0, 8)
    };
    let run = || {
        let out = train(&cfg).unwrap();
        (out.primary, out.reference, out.report.log_csv())
    };
    assert_eq!(in_pool(1, run), in_pool(3, run));
}
