//! Loss gradients against central finite differences of losses recomputed here
//! from raw Q-values.

use camp_core::losses::{camp_loss, loss_im, loss_ro, loss_ut, EtaMode, LossConfig};
use camp_core::nn::QNetwork;
use camp_core::replay::Transition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

fn random_pair(r: &mut ChaCha8Rng) -> (QNetwork, QNetwork) {
    let mut dims = vec![r.gen_range(1..=6)];
    for _ in 0..r.gen_range(1..=2) {
        dims.push(r.gen_range(2..=8));
    }
    dims.push(r.gen_range(2..=4));
    let a = QNetwork::new(&dims, r).unwrap();
    let b = QNetwork::new(&dims, r).unwrap();
    (a, b)
}

fn random_transition(r: &mut ChaCha8Rng, dim: usize, actions: usize) -> Transition {
    let v = |r: &mut ChaCha8Rng| (0..dim).map(|_| r.gen_range(-1.5..1.5)).collect::<Vec<f64>>();
    Transition {
        s: v(r),
        eps: v(r),
        s_next: v(r),
        eps_next: v(r),
        action: r.gen_range(0..actions),
        reward: r.gen_range(-1.0..1.0),
        done: r.gen_bool(0.3),
    }
}

// Oracle losses, written directly from their definitions.

fn td_oracle(net: &QNetwork, target_net: &QNetwork, t: &Transition, gamma: f64) -> f64 {
    let q = net.forward(&t.noisy_obs()).unwrap();
    let next = target_net.forward(&t.noisy_next_obs()).unwrap();
    let best_next = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y = t.reward + if t.done { 0.0 } else { gamma * best_next };
    (q[t.action] - y).powi(2)
}

fn order(q: &[f64]) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..q.len()).collect();
    idx.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    (idx[0], idx[1])
}

fn hinge_oracle(primary: &QNetwork, reference: &QNetwork, x: &[f64], lambda: f64, eta: f64) -> f64 {
    let q = primary.forward(x).unwrap();
    let q_ref = reference.forward(x).unwrap();
    let (a1, a2) = order(&q);
    if q_ref[a1] >= q_ref[a2] {
        lambda * (eta - (q[a1] - q[a2])).max(0.0)
    } else {
        0.0
    }
}

fn imitation_oracle(primary: &QNetwork, reference: &QNetwork, x: &[f64]) -> f64 {
    let q = primary.forward(x).unwrap();
    let q_ref = reference.forward(x).unwrap();
    let lse = |v: &[f64]| {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|z| (z - m).exp()).sum::<f64>().ln()
    };
    let (lp, lr) = (lse(&q), lse(&q_ref));
    q.iter().zip(&q_ref).map(|(p, r)| -(r - lr).exp() * (p - lp)).sum()
}

fn check_fd<F: Fn(&QNetwork) -> f64>(net: &QNetwork, grad: &[f64], f: F, what: &str) {
    assert_eq!(grad.len(), net.num_params(), "{what}");
    for (i, &g) in grad.iter().enumerate() {
        let mut plus = net.clone();
        plus.params_mut()[i] += H;
        let mut minus = net.clone();
        minus.params_mut()[i] -= H;
        let fd = (f(&plus) - f(&minus)) / (2.0 * H);
        assert!(rel_err(fd, g) <= 1e-6, "{what} param {i}: fd {fd} vs analytic {g}");
    }
}

#[test]
fn per_sample_loss_gradients_match_finite_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let (primary, reference) = random_pair(&mut r);
        let target = QNetwork::new(reference.dims(), &mut r).unwrap();
        let t = random_transition(&mut r, primary.input_dim(), primary.action_dim());
        let x = t.noisy_obs();
        let cfg = LossConfig::new(0.99, r.gen_range(0.5..4.0), EtaMode::Adaptive).unwrap();

        let (l, g) = loss_ut(&reference, &target, &t, &cfg).unwrap();
        assert!((l - td_oracle(&reference, &target, &t, cfg.gamma)).abs() < 1e-12);
        check_fd(&reference, g.values(), |n| td_oracle(n, &target, &t, cfg.gamma), "utility");

        // Keep the hinge active so its gradient is exercised.
        let q = primary.forward(&x).unwrap();
        let (a1, a2) = order(&q);
        let eta = q[a1] - q[a2] + r.gen_range(0.1..1.0);
        let (l, g) = loss_ro(&primary, &reference, &x, &cfg, eta).unwrap();
        assert!((l - hinge_oracle(&primary, &reference, &x, cfg.lambda, eta)).abs() < 1e-12);
        check_fd(&primary, g.values(), |n| hinge_oracle(n, &reference, &x, cfg.lambda, eta), "robustness");

        let (l, g) = loss_im(&primary, &reference, &x).unwrap();
        assert!((l - imitation_oracle(&primary, &reference, &x)).abs() < 1e-10);
        check_fd(&primary, g.values(), |n| imitation_oracle(n, &reference, &x), "imitation");
    }
}

#[test]
fn batched_objective_gradients_match_finite_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let (primary, reference) = random_pair(&mut r);
        let target = QNetwork::new(reference.dims(), &mut r).unwrap();
        let (d, a) = (primary.input_dim(), primary.action_dim());
        let zr: Vec<Transition> = (0..6).map(|_| random_transition(&mut r, d, a)).collect();
        let zp: Vec<Transition> = (0..6).map(|_| random_transition(&mut r, d, a)).collect();
        let (br, bp): (Vec<&Transition>, Vec<&Transition>) = (zr.iter().collect(), zp.iter().collect());
        // A fixed offset keeps eta constant under perturbation.
        let cfg = LossConfig::new(0.9, 1.5, EtaMode::Fixed(3.0)).unwrap();
        let out = camp_loss(&primary, &reference, &target, &br, &bp, &cfg).unwrap();

        let utility = |n: &QNetwork| zr.iter().map(|t| td_oracle(n, &target, t, cfg.gamma)).sum::<f64>();
        let primary_obj = |n: &QNetwork| {
            zp.iter()
                .map(|t| {
                    let x = t.noisy_obs();
                    hinge_oracle(n, &reference, &x, cfg.lambda, 3.0) + imitation_oracle(n, &reference, &x)
                })
                .sum::<f64>()
        };
        assert!(rel_err(out.utility, utility(&reference)) < 1e-12);
        assert!(rel_err(out.robustness + out.imitation, primary_obj(&primary)) < 1e-12);
        check_fd(&reference, out.reference_grad.values(), utility, "batched utility");
        check_fd(&primary, out.primary_grad.values(), primary_obj, "batched primary");
    }
}

#[test]
fn gradient_channels_are_separate() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let (primary, reference) = random_pair(&mut r);
    let target = reference.clone();
    let (d, a) = (primary.input_dim(), primary.action_dim());
    let z: Vec<Transition> = (0..8).map(|_| random_transition(&mut r, d, a)).collect();
    let batch: Vec<&Transition> = z.iter().collect();
    let cfg = LossConfig::default();
    let out = camp_loss(&primary, &reference, &target, &batch, &batch, &cfg).unwrap();

    // Moving the primary leaves the utility term and its gradient unchanged.
    let mut moved = primary.clone();
    for p in moved.params_mut() {
        *p += 0.1;
    }
    let again = camp_loss(&moved, &reference, &target, &batch, &batch, &cfg).unwrap();
    assert_eq!(out.utility, again.utility);
    assert_eq!(out.reference_grad, again.reference_grad);

    // The target network and the reference batch feed the utility term only.
    let other_target = QNetwork::new(reference.dims(), &mut r).unwrap();
    let swapped = camp_loss(&primary, &reference, &other_target, &batch[..3], &batch, &cfg).unwrap();
    assert_eq!(out.primary_grad, swapped.primary_grad);
    assert_eq!(out.robustness, swapped.robustness);
    assert_eq!(out.imitation, swapped.imitation);
    assert_ne!(out.reference_grad, swapped.reference_grad);
}
