//! Budget-carrying observation attacks on a greedy Q-policy.
//!
//! One ℓ2 budget `tau` covers the whole episode. At each step the attacker
//! searches, for every alternative action, a perturbation that makes the network
//! pick it, keeps the successful one whose clean Q-value is lowest, and pays for
//! its norm. Unspent budget carries over: `c <- sqrt(c^2 - |delta|^2)`.

use serde::{Deserialize, Serialize};

use crate::env::{self, Action, EnvKind, NoiseSpec, StackedCartpole};
use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::nn::{argmax, softmax_cross_entropy, QNetwork};
use crate::rng::{self, purpose};
use crate::trainer::check_net;
use crate::par;

pub const PGD_STEP: f64 = 0.01;
pub const BETA: f64 = 2.0;
pub const APGD_STEP_FRACTION: f64 = 0.05;
pub const APGD_MOMENTUM: f64 = 0.75;
pub const APGD_PATIENCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerAttack {
    Pgd,
    Apgd,
}

impl InnerAttack {
    pub fn name(self) -> &'static str {
        match self {
            InnerAttack::Pgd => "pgd",
            InnerAttack::Apgd => "apgd",
        }
    }
}

impl std::str::FromStr for InnerAttack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgd" => Ok(InnerAttack::Pgd),
            "apgd" => Ok(InnerAttack::Apgd),
            other => Err(Error::config("attack.inner", format!("unknown attack `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub tau: f64,
    pub inner: InnerAttack,
    /// PGD step size. APGD starts from `APGD_STEP_FRACTION * tau` instead.
    pub step_size: f64,
    pub beta: f64,
    /// Minimum `|Q(a') - Q(a*)|` for a target action to be tried.
    pub q_gap_filter: f64,
    pub sigma: f64,
    pub episodes: usize,
    pub seed: u64,
}

impl AttackConfig {
    pub fn new(tau: f64, inner: InnerAttack, sigma: f64, episodes: usize, seed: u64) -> Self {
        Self {
            tau,
            inner,
            step_size: PGD_STEP,
            beta: BETA,
            q_gap_filter: 0.0,
            sigma,
            episodes,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, r: String| Err(Error::config(k, r));
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad("attack.tau", format!("must be >= 0, got {}", self.tau));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("attack.beta", format!("must be > 0, got {}", self.beta));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("attack.step_size", format!("must be > 0, got {}", self.step_size));
        }
        if !(self.q_gap_filter >= 0.0) {
            return bad("attack.q_gap_filter", format!("must be >= 0, got {}", self.q_gap_filter));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma", format!("must be >= 0, got {}", self.sigma));
        }
        if self.episodes == 0 {
            return bad("attack.episodes", "must be at least 1".into());
        }
        Ok(())
    }

    /// Step size the inner loop starts from.
    pub fn initial_step(&self) -> f64 {
        match self.inner {
            InnerAttack::Pgd => self.step_size,
            InnerAttack::Apgd => APGD_STEP_FRACTION * self.tau,
        }
    }
}

/// Remaining budget plus the norms already spent.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackBudget {
    tau: f64,
    remaining: f64,
    spent: Vec<f64>,
}

impl AttackBudget {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            remaining: tau,
            spent: Vec::new(),
        }
    }

    pub fn remaining(&self) -> f64 {
        self.remaining
    }

    /// Per-step perturbation norms, including zeros for unperturbed steps.
    pub fn spent_log(&self) -> &[f64] {
        &self.spent
    }

    pub fn total_spent(&self) -> f64 {
        self.spent.iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// `|c^2 + sum |delta|^2 - tau^2|`.
    pub fn conservation_error(&self) -> f64 {
        let used: f64 = self.spent.iter().map(|d| d * d).sum();
        (self.remaining * self.remaining + used - self.tau * self.tau).abs()
    }

    /// Record a perturbation of norm `norm`. Returns false, leaving the budget
    /// untouched, when it does not fit.
    pub fn charge(&mut self, norm: f64) -> bool {
        let left = self.remaining * self.remaining - norm * norm;
        if left < 0.0 {
            // Rounding at the ball's surface is forgiven; anything larger is refused.
            if left < -1e-12 * self.tau.max(1.0) {
                return false;
            }
        }
        self.remaining = left.max(0.0).sqrt();
        self.spent.push(norm);
        true
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Project `x` onto the ℓ2 ball of radius `radius` around `center`.
fn project(x: &mut [f64], center: &[f64], radius: f64) {
    let d = distance(x, center);
    if d > radius {
        let scale = if d > 0.0 { radius / d } else { 0.0 };
        for (xi, ci) in x.iter_mut().zip(center) {
            *xi = ci + (*xi - ci) * scale;
        }
    }
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Cross-entropy toward `target` and its gradient with respect to the observation.
pub fn targeted_ce(net: &QNetwork, obs: &[f64], target: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let t = one_hot(net.action_dim(), target);
    let mut loss = 0.0;
    let (q, grad) = net.input_gradient_with(obs, |q| {
        let (l, g) = softmax_cross_entropy(q, &t)?;
        loss = l;
        Ok(g)
    })?;
    Ok((loss, q, grad))
}

/// State of one inner loop: current point, momentum memory and APGD schedule.
#[derive(Debug, Clone)]
pub struct InnerState {
    pub inner: InnerAttack,
    pub step_size: f64,
    prev: Option<Vec<f64>>,
    best_loss: f64,
    since_improvement: usize,
}

impl InnerState {
    pub fn new(inner: InnerAttack, step_size: f64) -> Self {
        Self {
            inner,
            step_size,
            prev: None,
            best_loss: f64::INFINITY,
            since_improvement: 0,
        }
    }
}

/// One descent step on the targeted cross-entropy, projected onto the ball of
/// radius `budget` around `base`. `loss` and `grad` are evaluated at `current`.
pub fn perturb_step(
    current: &[f64],
    base: &[f64],
    grad: &[f64],
    loss: f64,
    budget: f64,
    state: &mut InnerState,
) -> Vec<f64> {
    let g = norm(grad);
    if budget <= 0.0 {
        return base.to_vec();
    }
    if !(g > 0.0) || !g.is_finite() {
        return current.to_vec();
    }
    let mut z: Vec<f64> = current.iter().zip(grad).map(|(x, d)| x - state.step_size * d / g).collect();
    project(&mut z, base, budget);
    match state.inner {
        InnerAttack::Pgd => z,
        InnerAttack::Apgd => {
            let next = match &state.prev {
                None => z,
                Some(prev) => {
                    let mut x: Vec<f64> = current
                        .iter()
                        .zip(&z)
                        .zip(prev)
                        .map(|((c, zi), p)| c + APGD_MOMENTUM * (zi - c) + (1.0 - APGD_MOMENTUM) * (c - p))
                        .collect();
                    project(&mut x, base, budget);
                    x
                }
            };
            if loss < state.best_loss {
                state.best_loss = loss;
                state.since_improvement = 0;
            } else {
                state.since_improvement += 1;
                if state.since_improvement >= APGD_PATIENCE {
                    state.step_size *= 0.5;
                    state.since_improvement = 0;
                }
            }
            state.prev = Some(current.to_vec());
            next
        }
    }
}

/// `floor(beta * c / step_size)`.
pub fn attack_step_count(c: f64, beta: f64, step_size: f64) -> usize {
    if !(c > 0.0) || !(step_size > 0.0) {
        return 0;
    }
    (beta * c / step_size).floor() as usize
}

/// Result of one attacked step search.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAttack {
    /// Adversarial observation, equal to `base` when no target was reached.
    pub observation: Vec<f64>,
    pub target: Option<usize>,
    pub delta_norm: f64,
}

/// Search the perturbation for one observation. `base` is what the agent would
/// see unperturbed; the search stays within `budget` of it.
pub fn attack_observation(net: &QNetwork, base: &[f64], budget: f64, cfg: &AttackConfig) -> Result<StepAttack> {
    let q_base = net.forward(base)?;
    let best_action = argmax(&q_base);
    let mut q_star = q_base[best_action];
    let mut chosen = StepAttack {
        observation: base.to_vec(),
        target: None,
        delta_norm: 0.0,
    };
    let steps = attack_step_count(budget, cfg.beta, cfg.initial_step());
    if steps == 0 {
        return Ok(chosen);
    }
    for target in 0..net.action_dim() {
        if target == best_action || (q_base[target] - q_base[best_action]).abs() < cfg.q_gap_filter {
            continue;
        }
        let mut state = InnerState::new(cfg.inner, cfg.initial_step());
        let mut current = base.to_vec();
        for _ in 0..steps {
            let (loss, q, grad) = targeted_ce(net, &current, target)?;
            if argmax(&q) == target {
                if q_base[target] < q_star {
                    q_star = q_base[target];
                    chosen = StepAttack {
                        delta_norm: distance(&current, base),
                        observation: current,
                        target: Some(target),
                    };
                }
                break;
            }
            current = perturb_step(&current, base, &grad, loss, budget, &mut state);
        }
    }
    Ok(chosen)
}

/// One attacked episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeAttack {
    pub episode_return: f64,
    pub budget: AttackBudget,
    pub actions: Vec<usize>,
    /// Perturbation applied at each step (all zeros where none was made).
    pub deltas: Vec<Vec<f64>>,
    pub flipped_steps: usize,
}

/// Play one episode against the attacker. Reset and smoothing noise come from
/// `stream`, consumed exactly as an unattacked evaluation episode would.
pub fn attack_episode(net: &QNetwork, env: EnvKind, cfg: &AttackConfig, stream: &mut rng::Stream) -> Result<EpisodeAttack> {
    cfg.validate()?;
    check_net(net, env)?;
    let noise = NoiseSpec::new(cfg.sigma)?;
    let mut game = StackedCartpole::reset(env, stream);
    let mut budget = AttackBudget::new(cfg.tau);
    let mut out = EpisodeAttack {
        episode_return: 0.0,
        budget: AttackBudget::new(cfg.tau),
        actions: Vec::new(),
        deltas: Vec::new(),
        flipped_steps: 0,
    };
    while !game.is_done() {
        let base = env::observe(game.stack(), noise, stream).noisy();
        let step = attack_observation(net, &base, budget.remaining(), cfg)?;
        let observed = if step.target.is_some() && budget.charge(step.delta_norm) {
            out.flipped_steps += 1;
            step.observation
        } else {
            budget.charge(0.0);
            base.clone()
        };
        out.deltas.push(observed.iter().zip(&base).map(|(a, b)| a - b).collect());
        let action = argmax(&net.forward(&observed)?);
        out.actions.push(action);
        out.episode_return += game.step(Action::from_index(action)?)?.reward;
    }
    out.budget = budget;
    Ok(out)
}

/// Stream for attacked episode `i`; shared with evaluation so that a zero budget
/// replays the clean evaluation episode.
pub fn episode_stream(seed: u64, i: usize) -> rng::Stream {
    rng::stream(seed, purpose::EVALUATION, i as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackRow {
    pub tau: f64,
    pub mean_return: f64,
    pub std_return: f64,
    pub returns: Vec<f64>,
    /// Largest `|c^2 + sum |delta|^2 - tau^2|` over the episodes.
    pub worst_conservation_error: f64,
    /// Largest total spent norm over the episodes.
    pub max_total_spent: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Attack `cfg.episodes` episodes at every budget in `taus` (overriding `cfg.tau`).
pub fn attack_suite(net: &QNetwork, env: EnvKind, cfg: &AttackConfig, taus: &[f64]) -> Result<Vec<AttackRow>> {
    cfg.validate()?;
    taus.iter()
        .map(|&tau| {
            let cfg = AttackConfig { tau, ..cfg.clone() };
            cfg.validate()?;
            let episodes = par::map_indexed(cfg.episodes, |i| attack_episode(net, env, &cfg, &mut episode_stream(cfg.seed, i)))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let returns: Vec<f64> = episodes.iter().map(|e| e.episode_return).collect();
            let (mean_return, std_return) = mean_std(&returns);
            Ok(AttackRow {
                tau,
                mean_return,
                std_return,
                returns,
                worst_conservation_error: episodes.iter().map(|e| e.budget.conservation_error()).fold(0.0, f64::max),
                max_total_spent: episodes.iter().map(|e| e.budget.total_spent()).fold(0.0, f64::max),
            })
        })
        .collect()
}

/// CSV with header `tau,mean_return,std_return,attack,sigma,episodes,seed`.
pub fn attack_csv(rows: &[AttackRow], cfg: &AttackConfig) -> String {
    let mut out = String::from("tau,mean_return,std_return,attack,sigma,episodes,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig(r.tau, 9),
            sig(r.mean_return, 9),
            sig(r.std_return, 9),
            cfg.inner.name(),
            sig(cfg.sigma, 9),
            cfg.episodes,
            cfg.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::evaluate;

    fn affine(w: Vec<f64>, b: Vec<f64>) -> QNetwork {
        let inputs = w.len() / b.len();
        QNetwork::from_layers(&[inputs, b.len()], &[(w, b)]).unwrap()
    }

    #[test]
    fn step_counts() {
        assert_eq!(attack_step_count(1.0, 2.0, 0.01), 200);
        assert_eq!(attack_step_count(0.0, 2.0, 0.01), 0);
        assert_eq!(attack_step_count(0.37, 4.0, 0.01), 2 * attack_step_count(0.37, 2.0, 0.01));
    }

    #[test]
    fn perturb_step_edge_cases() {
        let base = [0.1, -0.2];
        let mut st = InnerState::new(InnerAttack::Pgd, 0.01);
        assert_eq!(perturb_step(&base, &base, &[0.0, 0.0], 1.0, 1.0, &mut st), base.to_vec());
        assert_eq!(perturb_step(&base, &base, &[1.0, 0.0], 1.0, 0.0, &mut st), base.to_vec());
    }

    #[test]
    fn normalized_step_on_affine_net() {
        let net = affine(vec![1.0, 2.0, -0.5, 0.3], vec![0.0, 0.1]);
        let obs = [0.2, -0.4];
        let (loss, _, grad) = targeted_ce(&net, &obs, 1).unwrap();
        // Closed form: d CE / d x = W^T (softmax - onehot).
        let q = net.forward(&obs).unwrap();
        let p = crate::nn::softmax(&q);
        let expect = [p[0] * 1.0 + (p[1] - 1.0) * -0.5, p[0] * 2.0 + (p[1] - 1.0) * 0.3];
        let g = norm(&expect);
        let mut st = InnerState::new(InnerAttack::Pgd, 0.01);
        let next = perturb_step(&obs, &obs, &grad, loss, 1.0, &mut st);
        for i in 0..2 {
            assert!((next[i] - (obs[i] - 0.01 * expect[i] / g)).abs() < 1e-12);
        }
        assert!((distance(&next, &obs) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn projection_keeps_budget() {
        let base = [0.0, 0.0];
        let mut st = InnerState::new(InnerAttack::Pgd, 5.0);
        let next = perturb_step(&base, &base, &[3.0, 4.0], 1.0, 0.5, &mut st);
        assert!((distance(&next, &base) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn apgd_step_never_grows() {
        let net = affine(vec![1.0, 0.0, -1.0, 0.0], vec![5.0, 0.0]);
        let base = [0.0, 0.0];
        let mut st = InnerState::new(InnerAttack::Apgd, 0.05);
        let mut cur = base.to_vec();
        let mut last = st.step_size;
        for _ in 0..60 {
            let (loss, _, grad) = targeted_ce(&net, &cur, 1).unwrap();
            cur = perturb_step(&cur, &base, &grad, loss, 0.3, &mut st);
            assert!(st.step_size <= last);
            assert!(distance(&cur, &base) <= 0.3 + 1e-12);
            last = st.step_size;
        }
    }

    #[test]
    fn budget_bookkeeping() {
        let mut b = AttackBudget::new(1.0);
        assert!(b.charge(0.6));
        assert!((b.remaining() - 0.8).abs() < 1e-12);
        assert!(!b.charge(0.9));
        assert!(b.charge(0.8));
        assert_eq!(b.remaining(), 0.0);
        assert!(b.conservation_error() < 1e-12);
        assert!((b.total_spent() - 1.0).abs() < 1e-12);
    }

    // Q0 - Q1 = 2 x0 + 1 on a one-frame observation; the boundary is x0 = -0.5.
    fn boundary_net() -> QNetwork {
        affine(vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0], vec![0.5, -0.5])
    }

    #[test]
    fn flips_when_boundary_is_within_budget() {
        let net = boundary_net();
        let base = [0.02, 0.0, 0.0, 0.0];
        let d = 0.52;
        let near = AttackConfig::new(0.6, InnerAttack::Pgd, 0.0, 1, 0);
        let hit = attack_observation(&net, &base, near.tau, &near).unwrap();
        assert_eq!(hit.target, Some(1));
        assert!(hit.delta_norm >= d - 1e-9 && hit.delta_norm <= d + 0.01 + 1e-9);
        let far = AttackConfig::new(0.5, InnerAttack::Pgd, 0.0, 1, 0);
        assert_eq!(attack_observation(&net, &base, far.tau, &far).unwrap().target, None);
    }

    #[test]
    fn zero_budget_matches_clean_evaluation() {
        let mut r = rng::stream(1, "test", 0);
        let net = QNetwork::new(&[4, 8, 2], &mut r).unwrap();
        for sigma in [0.0, 0.2] {
            let cfg = AttackConfig::new(0.0, InnerAttack::Pgd, sigma, 6, 9);
            let rows = attack_suite(&net, EnvKind::Cartpole1, &cfg, &[0.0]).unwrap();
            let clean = evaluate(&net, EnvKind::Cartpole1, sigma, 6, 9).unwrap();
            assert_eq!(rows[0].returns, clean.returns);
            assert_eq!(rows[0].max_total_spent, 0.0);
        }
        let one = AttackConfig::new(0.0, InnerAttack::Pgd, 0.0, 1, 9);
        assert_eq!(attack_suite(&net, EnvKind::Cartpole1, &one, &[0.0]).unwrap()[0].std_return, 0.0);
    }

    #[test]
    fn episodes_conserve_budget() {
        let mut r = rng::stream(2, "test", 0);
        let net = QNetwork::new(&[4, 16, 2], &mut r).unwrap();
        for inner in [InnerAttack::Pgd, InnerAttack::Apgd] {
            let cfg = AttackConfig::new(0.5, inner, 0.1, 4, 3);
            for i in 0..cfg.episodes {
                let ep = attack_episode(&net, EnvKind::Cartpole1, &cfg, &mut episode_stream(3, i)).unwrap();
                assert!(ep.budget.total_spent() <= cfg.tau + 1e-9);
                assert!(ep.budget.conservation_error() < 1e-9);
                assert_eq!(ep.deltas.len(), ep.actions.len());
                assert!((1.0..=200.0).contains(&ep.episode_return));
            }
        }
    }

    #[test]
    fn config_checks_and_csv() {
        let mut cfg = AttackConfig::new(1.0, InnerAttack::Apgd, 0.2, 10, 5);
        assert!((cfg.initial_step() - 0.05).abs() < 1e-15);
        cfg.beta = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = AttackConfig::new(1.0, InnerAttack::Pgd, 0.2, 10, 5);
        let rows = vec![AttackRow {
            tau: 0.2,
            mean_return: 150.5,
            std_return: 3.25,
            returns: vec![],
            worst_conservation_error: 0.0,
            max_total_spent: 0.0,
        }];
        assert_eq!(
            attack_csv(&rows, &cfg),
            "tau,mean_return,std_return,attack,sigma,episodes,seed\n0.2,150.5,3.25,pgd,0.2,10,5\n"
        );
    }
}
