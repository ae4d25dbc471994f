//! The three terms of the CAMP objective and their gradients.
//!
//! Each term is first expressed as a function of Q-value vectors returning the
//! loss and its gradient with respect to those Q-values ("logits"); the network
//! backward passes then turn logit gradients into parameter gradients. The
//! per-sample functions and the batched [`camp_loss`] share those kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{softmax, softmax_cross_entropy, top_two, GradientSet, QNetwork};
use crate::replay::Transition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaMode {
    /// Spread (max - min) of the primary Q-values over the current batch.
    Adaptive,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub eta: EtaMode,
}

impl LossConfig {
    pub fn new(gamma: f64, lambda: f64, eta: EtaMode) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::config("gamma", format!("must lie in [0,1], got {gamma}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config("lambda", format!("must be >= 0, got {lambda}")));
        }
        if let EtaMode::Fixed(v) = eta {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config("eta", format!("must be >= 0, got {v}")));
            }
        }
        Ok(Self { gamma, lambda, eta })
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 1.0,
            eta: EtaMode::Adaptive,
        }
    }
}

fn max_of(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Bootstrapped TD target `r + (1 - d) * gamma * max_a' Q'(s' + eps', a')`.
pub fn td_target(reward: f64, done: bool, gamma: f64, next_q: &[f64]) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * max_of(next_q)
    }
}

/// Squared TD error on Q-values `q` and its logit gradient.
pub fn td_logit_grad(q: &[f64], action: usize, target: f64) -> Result<(f64, Vec<f64>)> {
    if action >= q.len() {
        return Err(Error::usage(format!("action {action} out of range")));
    }
    let err = q[action] - target;
    let mut g = vec![0.0; q.len()];
    g[action] = 2.0 * err;
    Ok((err * err, g))
}

/// Hinge robustness term on primary Q-values `q_primary` with the reference
/// Q-values `q_reference` supplying the indicator.
pub fn robustness_logit_grad(
    q_primary: &[f64],
    q_reference: &[f64],
    lambda: f64,
    eta: f64,
) -> Result<(f64, Vec<f64>)> {
    if q_primary.len() != q_reference.len() {
        return Err(Error::usage("primary and reference disagree on action count"));
    }
    let (a1, a2) = top_two(q_primary)?;
    let mut g = vec![0.0; q_primary.len()];
    if lambda == 0.0 || q_reference[a1] < q_reference[a2] {
        return Ok((0.0, g));
    }
    let slack = eta - (q_primary[a1] - q_primary[a2]);
    if slack <= 0.0 {
        return Ok((0.0, g));
    }
    g[a1] = -lambda;
    g[a2] = lambda;
    Ok((lambda * slack, g))
}

/// Cross-entropy of the primary softmax against the reference softmax.
pub fn imitation_logit_grad(q_primary: &[f64], q_reference: &[f64]) -> Result<(f64, Vec<f64>)> {
    if q_primary.len() != q_reference.len() {
        return Err(Error::usage("primary and reference disagree on action count"));
    }
    softmax_cross_entropy(q_primary, &softmax(q_reference))
}

/// Utility (noisy TD) loss of one transition; the gradient is for `reference` only.
pub fn loss_ut(
    reference: &QNetwork,
    reference_target: &QNetwork,
    t: &Transition,
    cfg: &LossConfig,
) -> Result<(f64, GradientSet)> {
    let obs = t.noisy_obs();
    let q = reference.forward(&obs)?;
    let next_q = reference_target.forward(&t.noisy_next_obs())?;
    let target = td_target(t.reward, t.done, cfg.gamma, &next_q);
    let (loss, up) = td_logit_grad(&q, t.action, target)?;
    Ok((loss, reference.backward_params(&obs, &up)?))
}

/// Robustness hinge loss at `obs_noisy`; the gradient is for `primary` only.
pub fn loss_ro(
    primary: &QNetwork,
    reference: &QNetwork,
    obs_noisy: &[f64],
    cfg: &LossConfig,
    eta: f64,
) -> Result<(f64, GradientSet)> {
    if primary.action_dim() < 2 {
        return Err(Error::usage("robustness loss needs at least two actions"));
    }
    let q = primary.forward(obs_noisy)?;
    let q_ref = reference.forward(obs_noisy)?;
    let (loss, up) = robustness_logit_grad(&q, &q_ref, cfg.lambda, eta)?;
    Ok((loss, primary.backward_params(obs_noisy, &up)?))
}

/// Imitation loss at `obs_noisy`; the gradient is for `primary` only.
pub fn loss_im(primary: &QNetwork, reference: &QNetwork, obs_noisy: &[f64]) -> Result<(f64, GradientSet)> {
    if primary.action_dim() != reference.action_dim() {
        return Err(Error::usage("primary and reference disagree on action count"));
    }
    let q = primary.forward(obs_noisy)?;
    let q_ref = reference.forward(obs_noisy)?;
    let (loss, up) = imitation_logit_grad(&q, &q_ref)?;
    Ok((loss, primary.backward_params(obs_noisy, &up)?))
}

/// `max - min` over every Q-value in the batch.
pub fn adaptive_eta<'a, I>(batch_q: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for row in batch_q {
        for &q in row {
            any = true;
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    if !any {
        return Err(Error::usage("adaptive eta of an empty batch"));
    }
    Ok(hi - lo)
}

/// Batch totals and gradients of the CAMP objective.
#[derive(Debug, Clone)]
pub struct CampLoss {
    pub utility: f64,
    pub robustness: f64,
    pub imitation: f64,
    pub eta: f64,
    /// Gradient of the summed utility loss, for the reference network.
    pub reference_grad: GradientSet,
    /// Gradient of the summed robustness and imitation losses, for the primary network.
    pub primary_grad: GradientSet,
}

impl CampLoss {
    pub fn total(&self) -> f64 {
        self.utility + self.robustness + self.imitation
    }
}

fn stack_rows<'a>(rows: impl Iterator<Item = Vec<f64>> + 'a, cap: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cap);
    for r in rows {
        out.extend(r);
    }
    out
}

/// Summed utility loss over `batch` and its reference-network gradient.
pub fn utility_batch(
    reference: &QNetwork,
    reference_target: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
) -> Result<(f64, GradientSet)> {
    let n = batch.len();
    let d = reference.input_dim();
    let a = reference.action_dim();
    let obs = stack_rows(batch.iter().map(|t| t.noisy_obs()), n * d);
    let next = stack_rows(batch.iter().map(|t| t.noisy_next_obs()), n * d);
    let cache = reference.forward_batch(&obs, n)?;
    let next_q = reference_target.forward_batch(&next, n)?;
    let mut upstream = vec![0.0; n * a];
    let mut total = 0.0;
    for (i, t) in batch.iter().enumerate() {
        let target = td_target(t.reward, t.done, gamma, next_q.output_row(i));
        let (l, g) = td_logit_grad(cache.output_row(i), t.action, target)?;
        total += l;
        upstream[i * a..(i + 1) * a].copy_from_slice(&g);
    }
    Ok((total, reference.backward_batch(&cache, &upstream)?))
}

/// Summed robustness and imitation losses over `batch` with their primary gradient.
/// Returns `(robustness, imitation, eta, gradient)`.
pub fn primary_batch(
    primary: &QNetwork,
    reference: &QNetwork,
    batch: &[&Transition],
    lambda: f64,
    eta_mode: EtaMode,
) -> Result<(f64, f64, f64, GradientSet)> {
    if primary.action_dim() < 2 {
        return Err(Error::usage("robustness loss needs at least two actions"));
    }
    if primary.action_dim() != reference.action_dim() {
        return Err(Error::usage("primary and reference disagree on action count"));
    }
    let n = batch.len();
    let d = primary.input_dim();
    let a = primary.action_dim();
    let obs = stack_rows(batch.iter().map(|t| t.noisy_obs()), n * d);
    let cache = primary.forward_batch(&obs, n)?;
    let ref_q = reference.forward_batch(&obs, n)?;
    let eta = match eta_mode {
        EtaMode::Adaptive => adaptive_eta((0..n).map(|i| cache.output_row(i)))?,
        EtaMode::Fixed(v) => v,
    };
    let mut upstream = vec![0.0; n * a];
    let (mut ro, mut im) = (0.0, 0.0);
    for i in 0..n {
        let (q, q_ref) = (cache.output_row(i), ref_q.output_row(i));
        let (l_ro, g_ro) = robustness_logit_grad(q, q_ref, lambda, eta)?;
        let (l_im, g_im) = imitation_logit_grad(q, q_ref)?;
        ro += l_ro;
        im += l_im;
        for (u, (x, y)) in upstream[i * a..(i + 1) * a].iter_mut().zip(g_ro.iter().zip(&g_im)) {
            *u = x + y;
        }
    }
    Ok((ro, im, eta, primary.backward_batch(&cache, &upstream)?))
}

/// Full CAMP objective. `batch_reference` feeds the utility loss (reference
/// update), `batch_primary` the robustness and imitation losses (primary update).
pub fn camp_loss(
    primary: &QNetwork,
    reference: &QNetwork,
    reference_target: &QNetwork,
    batch_reference: &[&Transition],
    batch_primary: &[&Transition],
    cfg: &LossConfig,
) -> Result<CampLoss> {
    if batch_reference.is_empty() || batch_primary.is_empty() {
        return Err(Error::usage("CAMP loss needs nonempty batches"));
    }
    let (utility, reference_grad) = utility_batch(reference, reference_target, batch_reference, cfg.gamma)?;
    let (robustness, imitation, eta, primary_grad) =
        primary_batch(primary, reference, batch_primary, cfg.lambda, cfg.eta)?;
    Ok(CampLoss {
        utility,
        robustness,
        imitation,
        eta,
        reference_grad,
        primary_grad,
    })
}
