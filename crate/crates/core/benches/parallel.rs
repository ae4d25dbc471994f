//! Parallel versus sequential episode work, and batched versus per-sample loss
//! gradients. Run with `cargo bench -p camp-core`; on a single core the two
//! episode paths should time the same.

use camp_core::attack::{attack_episode, episode_stream, AttackConfig, InnerAttack};
use camp_core::certify::collect_returns;
use camp_core::env::EnvKind;
use camp_core::losses::{camp_loss, loss_im, loss_ro, loss_ut, EtaMode, LossConfig};
use camp_core::nn::{GradientSet, QNetwork};
use camp_core::par::{current_threads, map_indexed, map_indexed_seq};
use camp_core::replay::Transition;
use camp_core::rng;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

const EPISODES: usize = 16;

fn net(tag: u64) -> QNetwork {
    QNetwork::mlp(4, 2, &mut rng::stream(tag, "bench-net", 0)).unwrap()
}

fn attack_episodes(c: &mut Criterion) {
    let net = net(1);
    let cfg = AttackConfig::new(0.5, InnerAttack::Pgd, 0.2, EPISODES, 3);
    let one = |i: usize| {
        let mut s = episode_stream(cfg.seed, i);
        attack_episode(&net, EnvKind::Cartpole1, &cfg, &mut s).unwrap().episode_return
    };
    let mut g = c.benchmark_group("attack_episodes");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("rayon", current_threads()), |b| b.iter(|| black_box(map_indexed(EPISODES, one))));
    g.bench_function("sequential", |b| b.iter(|| black_box(map_indexed_seq(EPISODES, one))));
    g.finish();
}

fn certification_rollouts(c: &mut Criterion) {
    let net = net(2);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let run = || collect_returns(&net, EnvKind::Cartpole1, 0.2, 64, 7).unwrap();
    let mut g = c.benchmark_group("collect_returns_64");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("pool", current_threads()), |b| b.iter(|| black_box(run())));
    g.bench_function("pool_1", |b| b.iter(|| black_box(single.install(run))));
    g.finish();
}

fn transitions(n: usize) -> Vec<Transition> {
    let mut r = rng::stream(4, "bench-batch", 0);
    let v = |r: &mut rng::Stream| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    (0..n)
        .map(|_| Transition {
            s: v(&mut r),
            eps: v(&mut r),
            s_next: v(&mut r),
            eps_next: v(&mut r),
            action: r.gen_range(0..2),
            reward: 1.0,
            done: false,
        })
        .collect()
}

fn loss_gradients(c: &mut Criterion) {
    let (primary, reference, target) = (net(5), net(6), net(7));
    let z = transitions(256);
    let batch: Vec<&Transition> = z.iter().collect();
    let cfg = LossConfig::new(0.99, 1.0, EtaMode::Fixed(1.0)).unwrap();
    let mut g = c.benchmark_group("camp_loss_256");
    g.bench_function("batched", |b| {
        b.iter(|| black_box(camp_loss(&primary, &reference, &target, &batch, &batch, &cfg).unwrap()))
    });
    g.bench_function("per_sample", |b| {
        b.iter(|| {
            let mut gr = GradientSet::zeros_like(&reference);
            let mut gp = GradientSet::zeros_like(&primary);
            for t in &z {
                gr.add_assign(&loss_ut(&reference, &target, t, &cfg).unwrap().1).unwrap();
                let x = t.noisy_obs();
                gp.add_assign(&loss_ro(&primary, &reference, &x, &cfg, 1.0).unwrap().1).unwrap();
                gp.add_assign(&loss_im(&primary, &reference, &x).unwrap().1).unwrap();
            }
            black_box((gr, gp))
        })
    });
    g.finish();
}

criterion_group!(benches, attack_episodes, certification_rollouts, loss_gradients);
criterion_main!(benches);
