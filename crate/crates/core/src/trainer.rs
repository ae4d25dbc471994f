//! Training loops: CAMP (policy imitation with two networks and two replay
//! buffers) and the Gaussian-augmentation DQN baseline.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvKind, NoiseSpec, StackedCartpole, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::losses::{camp_loss, utility_batch, EtaMode, LossConfig};
use crate::nn::{argmax, top_two, AdamState, Checkpoint, CheckpointMeta, QNetwork};
use crate::replay::{ReplayBuffer, Transition};
use crate::rng::{self, purpose};
use crate::{env, par};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Camp,
    Gaussian,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Camp => "camp",
            Method::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "camp" => Ok(Method::Camp),
            "gaussian" => Ok(Method::Gaussian),
            other => Err(Error::config("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Linear exploration schedule from `start` to `end` over the first `fraction`
/// of training, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsSchedule {
    pub start: f64,
    pub end: f64,
    pub fraction: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.0,
            fraction: 0.16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub env: EnvKind,
    pub method: Method,
    pub total_steps: u64,
    pub burn_in: u64,
    pub buffer_size: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub train_freq: u64,
    pub grad_steps_per_train: usize,
    pub target_update_freq: u64,
    pub polyak: f64,
    pub sigma: f64,
    pub loss: LossConfig,
    pub eps: EpsSchedule,
    pub validation_every: u64,
    pub validation_episodes: usize,
    pub seed: u64,
    /// Stop as soon as a validation round averages the maximum return.
    pub early_stop: bool,
}

impl TrainConfig {
    /// Settings used for the published cart-pole agents.
    pub fn paper(env: EnvKind, method: Method, sigma: f64, lambda: f64, seed: u64) -> Self {
        Self {
            env,
            method,
            total_steps: 500_000,
            burn_in: 1_000,
            buffer_size: 100_000,
            batch_size: 1024,
            lr: 5e-5,
            train_freq: 256,
            grad_steps_per_train: 128,
            target_update_freq: 10,
            polyak: 1.0,
            sigma,
            loss: LossConfig {
                gamma: 0.99,
                lambda,
                eta: EtaMode::Adaptive,
            },
            eps: EpsSchedule::default(),
            validation_every: 2_000,
            validation_episodes: 10,
            seed,
            early_stop: true,
        }
    }

    /// CPU-sized variant: smaller batches, fewer steps, a learning rate tuned for them.
    pub fn desk(env: EnvKind, method: Method, sigma: f64, lambda: f64, seed: u64) -> Self {
        Self {
            total_steps: 150_000,
            batch_size: 256,
            lr: 5e-4,
            train_freq: 256,
            grad_steps_per_train: 64,
            ..Self::paper(env, method, sigma, lambda, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, r: String| Err(Error::config(k, r));
        if self.total_steps > 0 && self.burn_in >= self.total_steps {
            return bad("train.burn_in", format!("{} must be below total_steps {}", self.burn_in, self.total_steps));
        }
        if self.batch_size == 0 {
            return bad("train.batch_size", "must be at least 1".into());
        }
        if self.buffer_size == 0 {
            return bad("train.buffer_size", "must be at least 1".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("train.lr", format!("must be >= 0, got {}", self.lr));
        }
        if self.train_freq == 0 {
            return bad("train.train_freq", "must be at least 1".into());
        }
        if self.target_update_freq == 0 {
            return bad("train.target_update_freq", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.polyak) {
            return bad("train.polyak", format!("must lie in [0,1], got {}", self.polyak));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma", format!("must be >= 0, got {}", self.sigma));
        }
        if !(self.eps.fraction > 0.0 && self.eps.fraction <= 1.0) {
            return bad("train.eps_fraction", format!("must lie in (0,1], got {}", self.eps.fraction));
        }
        for (k, v) in [("train.eps_start", self.eps.start), ("train.eps_end", self.eps.end)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(k, format!("must lie in [0,1], got {v}"));
            }
        }
        if self.validation_every > 0 && self.validation_episodes == 0 {
            return bad("train.validation_episodes", "must be at least 1 when validating".into());
        }
        LossConfig::new(self.loss.gamma, self.loss.lambda, self.loss.eta)?;
        Ok(())
    }
}

/// Exploration probability at step `t`.
pub fn epsilon_at(t: u64, cfg: &TrainConfig) -> f64 {
    let horizon = cfg.eps.fraction * cfg.total_steps as f64;
    let progress = if horizon > 0.0 { (t as f64 / horizon).min(1.0) } else { 1.0 };
    cfg.eps.start + (cfg.eps.end - cfg.eps.start) * progress
}

/// `target <- k * online + (1 - k) * target`.
pub fn polyak_update(target: &mut QNetwork, online: &QNetwork, k: f64) -> Result<()> {
    target.polyak_from(online, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub step: u64,
    pub mean_return: f64,
    pub epsilon: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub validations: Vec<ValidationPoint>,
    pub steps_run: u64,
    pub stopped_early: bool,
    pub checkpoint_paths: Vec<PathBuf>,
}

impl TrainReport {
    pub fn final_validation(&self) -> Option<f64> {
        self.validations.last().map(|v| v.mean_return)
    }

    pub fn log_csv(&self) -> String {
        let mut out = String::from("step,mean_validation_return,epsilon,eta\n");
        for v in &self.validations {
            out.push_str(&format!(
                "{},{},{},{}\n",
                v.step,
                crate::fmt::sig(v.mean_return, 9),
                crate::fmt::sig(v.epsilon, 9),
                crate::fmt::sig(v.eta, 9)
            ));
        }
        out
    }
}

/// Trained networks plus their training record. `reference` is set for CAMP only.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub primary: QNetwork,
    pub reference: Option<QNetwork>,
    pub report: TrainReport,
    pub wall_clock_secs: f64,
    meta: CheckpointMeta,
}

impl TrainOutcome {
    pub fn meta(&self) -> &CheckpointMeta {
        &self.meta
    }

    pub fn primary_checkpoint(&self) -> Checkpoint {
        Checkpoint::from_network(&self.primary, self.meta.clone())
    }

    /// Write `<stem>.json` (the acting policy), `<stem>_reference.json` for CAMP,
    /// and `<stem>_train.csv`.
    pub fn write(&mut self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut paths = vec![dir.join(format!("{stem}.json"))];
        self.primary_checkpoint().save(&paths[0])?;
        if let Some(reference) = &self.reference {
            let mut meta = self.meta.clone();
            meta.method = format!("{}-reference", meta.method);
            let p = dir.join(format!("{stem}_reference.json"));
            Checkpoint::from_network(reference, meta).save(&p)?;
            paths.push(p);
        }
        std::fs::write(dir.join(format!("{stem}_train.csv")), self.report.log_csv())?;
        self.report.checkpoint_paths = paths;
        Ok(())
    }
}

/// Greedy play statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mean_return: f64,
    pub returns: Vec<f64>,
    /// Smallest top-1 minus runner-up Q-value seen at any step of any episode.
    pub min_q_gap: f64,
}

/// Play `episodes` greedy episodes on noisy observations. Episode `i` draws its
/// reset and noise from stream `(seed, "evaluation", i)`.
pub fn evaluate(net: &QNetwork, env: EnvKind, sigma: f64, episodes: usize, seed: u64) -> Result<EvalResult> {
    evaluate_tagged(net, env, sigma, episodes, seed, purpose::EVALUATION)
}

pub(crate) fn evaluate_tagged(
    net: &QNetwork,
    env: EnvKind,
    sigma: f64,
    episodes: usize,
    seed: u64,
    tag: &str,
) -> Result<EvalResult> {
    if episodes == 0 {
        return Err(Error::usage("evaluation needs at least one episode"));
    }
    let noise = NoiseSpec::new(sigma)?;
    check_net(net, env)?;
    let per_episode = par::map_indexed(episodes, |i| -> Result<(f64, f64)> {
        let mut stream = rng::stream(seed, tag, i as u64);
        let mut game = StackedCartpole::reset(env, &mut stream);
        let mut ret = 0.0;
        let mut min_gap = f64::INFINITY;
        while !game.is_done() {
            let obs = env::observe(game.stack(), noise, &mut stream).noisy();
            let q = net.forward(&obs)?;
            let (a1, a2) = top_two(&q)?;
            min_gap = min_gap.min(q[a1] - q[a2]);
            ret += game.step(Action::from_index(a1)?)?.reward;
        }
        Ok((ret, min_gap))
    });
    let mut returns = Vec::with_capacity(episodes);
    let mut min_q_gap = f64::INFINITY;
    for r in per_episode {
        let (ret, gap) = r?;
        returns.push(ret);
        min_q_gap = min_q_gap.min(gap);
    }
    let mean_return = returns.iter().sum::<f64>() / episodes as f64;
    Ok(EvalResult {
        mean_return,
        returns,
        min_q_gap,
    })
}

pub(crate) fn check_net(net: &QNetwork, env: EnvKind) -> Result<()> {
    if net.input_dim() != env.obs_dim() || net.action_dim() != NUM_ACTIONS {
        return Err(Error::usage(format!(
            "network {:?} does not fit {} (needs {} inputs, {} actions)",
            net.dims(),
            env.name(),
            env.obs_dim(),
            NUM_ACTIONS
        )));
    }
    Ok(())
}

/// Which buffer a transition recorded at step `t` belongs to: even steps feed the
/// primary policy's buffer, odd steps the reference policy's.
pub fn buffer_for_step(t: u64) -> usize {
    (t % 2) as usize
}

struct Rollout {
    game: StackedCartpole,
    env: EnvKind,
    noise: NoiseSpec,
    env_stream: rng::Stream,
    noise_stream: rng::Stream,
    action_stream: rng::Stream,
}

impl Rollout {
    fn new(cfg: &TrainConfig) -> Result<Self> {
        let mut env_stream = rng::stream(cfg.seed, purpose::TRAIN_ENV, 0);
        Ok(Self {
            game: StackedCartpole::reset(cfg.env, &mut env_stream),
            env: cfg.env,
            noise: NoiseSpec::new(cfg.sigma)?,
            env_stream,
            noise_stream: rng::stream(cfg.seed, purpose::TRAIN_NOISE, 0),
            action_stream: rng::stream(cfg.seed, purpose::TRAIN_ACTION, 0),
        })
    }

    /// One environment step. `policy` is `None` during burn-in (uniform actions).
    fn step(&mut self, policy: Option<&QNetwork>, epsilon: f64) -> Result<Transition> {
        let dim = self.env.obs_dim();
        let s = self.game.stack().to_vec();
        let eps = self.noise.sample(dim, &mut self.noise_stream);
        let eps_next = self.noise.sample(dim, &mut self.noise_stream);
        let explore = self.action_stream.gen::<f64>() < epsilon;
        let random_action = self.action_stream.gen_range(0..NUM_ACTIONS);
        let action = match policy {
            Some(net) if !explore => {
                let noisy: Vec<f64> = s.iter().zip(&eps).map(|(a, b)| a + b).collect();
                argmax(&net.forward(&noisy)?)
            }
            _ => random_action,
        };
        let out = self.game.step(Action::from_index(action)?)?;
        let s_next = self.game.stack().to_vec();
        if out.done {
            self.game = StackedCartpole::reset(self.env, &mut self.env_stream);
        }
        Ok(Transition {
            s,
            eps,
            s_next,
            eps_next,
            action,
            reward: out.reward,
            done: out.done,
        })
    }
}

fn init_net(cfg: &TrainConfig, index: u64) -> Result<QNetwork> {
    let mut r = rng::stream(cfg.seed, purpose::NET_INIT, index);
    QNetwork::mlp(cfg.env.obs_dim(), NUM_ACTIONS, &mut r)
}

fn meta_for(cfg: &TrainConfig, steps: u64) -> CheckpointMeta {
    CheckpointMeta {
        method: cfg.method.name().to_string(),
        sigma: cfg.sigma,
        lambda: if cfg.method == Method::Camp { cfg.loss.lambda } else { 0.0 },
        seed: cfg.seed,
        train_steps: steps,
    }
}

fn validation_due(cfg: &TrainConfig, t: u64) -> bool {
    cfg.validation_every > 0 && t > cfg.burn_in && (t + 1).is_multiple_of(cfg.validation_every)
}

fn validate_net(cfg: &TrainConfig, net: &QNetwork, round: u64) -> Result<f64> {
    let seed = rng::derive_seed(cfg.seed, purpose::VALIDATION, round);
    Ok(evaluate_tagged(net, cfg.env, cfg.sigma, cfg.validation_episodes, seed, purpose::VALIDATION)?.mean_return)
}

/// Optional observer of every stored transition: `(step, buffer index, transition)`.
pub type TransitionHook<'a> = &'a mut dyn FnMut(u64, usize, &Transition);

/// CAMP training: the reference network learns by noisy TD on the primary's
/// buffer, the primary imitates the reference on the reference's buffer while
/// the hinge term widens its Q-gap.
pub fn train_camp(cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_camp_observed(cfg, None)
}

pub fn train_camp_observed(cfg: &TrainConfig, mut hook: Option<TransitionHook<'_>>) -> Result<TrainOutcome> {
    if cfg.method != Method::Camp {
        return Err(Error::config("method", "train_camp needs method = camp"));
    }
    cfg.validate()?;
    let started = Instant::now();
    let mut primary = init_net(cfg, 0)?;
    let mut reference = init_net(cfg, 1)?;
    let mut reference_target = reference.clone();
    let mut adam_primary = AdamState::new(&primary, cfg.lr);
    let mut adam_reference = AdamState::new(&reference, cfg.lr);
    let dim = cfg.env.obs_dim();
    // buffers[0] gathers the primary's steps (utility loss), buffers[1] the reference's.
    let mut buffers = [
        ReplayBuffer::new(cfg.buffer_size, dim)?,
        ReplayBuffer::new(cfg.buffer_size, dim)?,
    ];
    let mut sample_stream = rng::stream(cfg.seed, purpose::REPLAY, 0);
    let mut rollout = Rollout::new(cfg)?;
    let mut report = TrainReport::default();
    let mut last_eta = 0.0;
    let mut round = 0;

    let mut t = 0;
    while t < cfg.total_steps {
        let which = buffer_for_step(t);
        let epsilon = epsilon_at(t, cfg);
        let policy = if t < cfg.burn_in {
            None
        } else if which == 0 {
            Some(&primary)
        } else {
            Some(&reference)
        };
        let tr = rollout.step(policy, epsilon)?;
        if let Some(h) = hook.as_mut() {
            h(t, which, &tr);
        }
        buffers[which].push(tr)?;

        if t >= cfg.burn_in && t % cfg.train_freq == 0 && !buffers[0].is_empty() && !buffers[1].is_empty() {
            for _ in 0..cfg.grad_steps_per_train {
                let batch_ref = buffers[0].sample_batch(cfg.batch_size, &mut sample_stream)?;
                let batch_primary = buffers[1].sample_batch(cfg.batch_size, &mut sample_stream)?;
                let out = camp_loss(&primary, &reference, &reference_target, &batch_ref, &batch_primary, &cfg.loss)?;
                adam_reference.step(&mut reference, &out.reference_grad)?;
                adam_primary.step(&mut primary, &out.primary_grad)?;
                last_eta = out.eta;
            }
        }
        if t % cfg.target_update_freq == 0 {
            polyak_update(&mut reference_target, &reference, cfg.polyak)?;
        }
        t += 1;
        if validation_due(cfg, t - 1) {
            let mean = validate_net(cfg, &primary, round)?;
            round += 1;
            report.validations.push(ValidationPoint {
                step: t,
                mean_return: mean,
                epsilon: epsilon_at(t, cfg),
                eta: last_eta,
            });
            if cfg.early_stop && mean >= env::MAX_STEPS as f64 {
                report.stopped_early = true;
                break;
            }
        }
    }
    report.steps_run = t;
    Ok(TrainOutcome {
        primary,
        reference: Some(reference),
        report,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        meta: meta_for(cfg, t),
    })
}

/// Gaussian-augmentation baseline: one network trained by noisy TD only.
pub fn train_gaussian(cfg: &TrainConfig) -> Result<TrainOutcome> {
    if cfg.method != Method::Gaussian {
        return Err(Error::config("method", "train_gaussian needs method = gaussian"));
    }
    cfg.validate()?;
    let started = Instant::now();
    let mut net = init_net(cfg, 0)?;
    let mut target = net.clone();
    let mut adam = AdamState::new(&net, cfg.lr);
    let mut buffer = ReplayBuffer::new(cfg.buffer_size, cfg.env.obs_dim())?;
    let mut sample_stream = rng::stream(cfg.seed, purpose::REPLAY, 0);
    let mut rollout = Rollout::new(cfg)?;
    let mut report = TrainReport::default();
    let mut round = 0;

    let mut t = 0;
    while t < cfg.total_steps {
        let policy = if t < cfg.burn_in { None } else { Some(&net) };
        let tr = rollout.step(policy, epsilon_at(t, cfg))?;
        buffer.push(tr)?;
        if t >= cfg.burn_in && t % cfg.train_freq == 0 {
            for _ in 0..cfg.grad_steps_per_train {
                let batch = buffer.sample_batch(cfg.batch_size, &mut sample_stream)?;
                let (_, grad) = utility_batch(&net, &target, &batch, cfg.loss.gamma)?;
                adam.step(&mut net, &grad)?;
            }
        }
        if t % cfg.target_update_freq == 0 {
            polyak_update(&mut target, &net, cfg.polyak)?;
        }
        t += 1;
        if validation_due(cfg, t - 1) {
            let mean = validate_net(cfg, &net, round)?;
            round += 1;
            report.validations.push(ValidationPoint {
                step: t,
                mean_return: mean,
                epsilon: epsilon_at(t, cfg),
                eta: 0.0,
            });
            if cfg.early_stop && mean >= env::MAX_STEPS as f64 {
                report.stopped_early = true;
                break;
            }
        }
    }
    report.steps_run = t;
    Ok(TrainOutcome {
        primary: net,
        reference: None,
        report,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        meta: meta_for(cfg, t),
    })
}

/// Dispatch on `cfg.method`.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    match cfg.method {
        Method::Camp => train_camp(cfg),
        Method::Gaussian => train_gaussian(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(method: Method) -> TrainConfig {
        TrainConfig {
            total_steps: 600,
            burn_in: 100,
            buffer_size: 1000,
            batch_size: 8,
            train_freq: 50,
            grad_steps_per_train: 2,
            validation_every: 200,
            validation_episodes: 2,
            ..TrainConfig::desk(EnvKind::Cartpole1, method, 0.1, 1.0, 3)
        }
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = TrainConfig::desk(EnvKind::Cartpole1, Method::Camp, 0.0, 1.0, 0);
        assert_eq!(epsilon_at(0, &cfg), 1.0);
        let half = (0.08 * cfg.total_steps as f64) as u64;
        assert!((epsilon_at(half, &cfg) - 0.5).abs() < 1e-12);
        assert_eq!(epsilon_at((0.16 * cfg.total_steps as f64) as u64, &cfg), 0.0);
        assert_eq!(epsilon_at(cfg.total_steps, &cfg), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny(Method::Camp);
        assert!(cfg.validate().is_ok());
        cfg.burn_in = cfg.total_steps;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny(Method::Camp);
        cfg.sigma = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "sigma"));
        let mut cfg = tiny(Method::Camp);
        cfg.eps.fraction = 0.0;
        assert!(cfg.validate().is_err());
        assert!(train_gaussian(&tiny(Method::Camp)).is_err());
    }

    #[test]
    fn zero_steps_leaves_initial_networks() {
        let mut cfg = tiny(Method::Camp);
        cfg.total_steps = 0;
        cfg.burn_in = 0;
        let out = train_camp(&cfg).unwrap();
        assert_eq!(out.primary, init_net(&cfg, 0).unwrap());
        assert_eq!(out.reference.unwrap(), init_net(&cfg, 1).unwrap());
        assert!(out.report.validations.is_empty());
        assert_eq!(out.report.steps_run, 0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        for method in [Method::Camp, Method::Gaussian] {
            let a = train(&tiny(method)).unwrap();
            let b = train(&tiny(method)).unwrap();
            assert_eq!(a.primary, b.primary);
            assert_eq!(a.reference, b.reference);
            assert_eq!(a.report, b.report);
            assert_eq!(a.report.log_csv(), b.report.log_csv());
            assert!(!a.report.validations.is_empty());
        }
        let mut other = tiny(Method::Gaussian);
        other.seed = 4;
        assert_ne!(train(&other).unwrap().primary, train(&tiny(Method::Gaussian)).unwrap().primary);
    }

    #[test]
    fn transitions_route_by_step_parity() {
        let cfg = tiny(Method::Camp);
        let mut seen = Vec::new();
        let mut hook = |t: u64, which: usize, tr: &Transition| seen.push((t, which, tr.clone()));
        train_camp_observed(&cfg, Some(&mut hook)).unwrap();
        assert_eq!(seen.len() as u64, cfg.total_steps);
        for (t, which, tr) in &seen {
            assert_eq!(*which as u64, t % 2);
            assert_eq!(tr.s.len(), 4);
            let noisy = tr.noisy_obs();
            for ((n, s), e) in noisy.iter().zip(&tr.s).zip(&tr.eps) {
                assert_eq!(*n, s + e);
            }
        }
    }

    #[test]
    fn validation_returns_are_in_range() {
        let out = train(&tiny(Method::Gaussian)).unwrap();
        for v in &out.report.validations {
            assert!((1.0..=200.0).contains(&v.mean_return));
        }
        let steps: Vec<u64> = out.report.validations.iter().map(|v| v.step).collect();
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_gap_network_reports_that_gap() {
        // Zero weights: Q = bias everywhere, so the gap is the bias difference.
        let layers = vec![(vec![0.0; 8], vec![1.25, 0.5])];
        let net = QNetwork::from_layers(&[4, 2], &layers).unwrap();
        let res = evaluate(&net, EnvKind::Cartpole1, 0.3, 3, 1).unwrap();
        assert!((res.min_q_gap - 0.75).abs() < 1e-15);
        assert_eq!(res.returns.len(), 3);
        assert!(res.returns.iter().all(|r| (1.0..=200.0).contains(r)));
        assert!(evaluate(&net, EnvKind::Cartpole5, 0.0, 1, 1).is_err());
    }
}
