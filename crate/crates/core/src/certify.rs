//! Policy-smoothing certification of expected return.
//!
//! Returns are collected from episodes in which every observation carries fresh
//! Gaussian noise. Their empirical CDF, deflated by a confidence band, gives a
//! lower bound on the survival probabilities `P(R >= r)`, and shifting each of
//! those through the Gaussian quantile yields a bound valid for every ℓ2-bounded
//! perturbation sequence of total size `tau`.

use serde::{Deserialize, Serialize};

use crate::env::{EnvKind, RETURN_RANGE};
use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::nn::{top_two, QNetwork};
use crate::rng::purpose;
use crate::stats::{
    clopper_pearson_lower, dkw_half_width, ecdf_at, normal_cdf_unchecked, std_normal_quantile,
    ConfidenceParams,
};
use crate::trainer::{check_net, evaluate_tagged};
use crate::{env, par, rng};

/// Probabilities are kept this far from 0 and 1 before taking normal quantiles.
pub const PROB_CLAMP: f64 = 1e-12;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    Dkw,
    ClopperPearson,
}

impl BoundMode {
    pub fn name(self) -> &'static str {
        match self {
            BoundMode::Dkw => "dkw",
            BoundMode::ClopperPearson => "clopper_pearson",
        }
    }
}

impl std::str::FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dkw" => Ok(BoundMode::Dkw),
            "clopper_pearson" | "cp" => Ok(BoundMode::ClopperPearson),
            other => Err(Error::config("certify.mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// Episode returns under smoothing noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSample {
    sorted: Vec<f64>,
    by_episode: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl ReturnSample {
    /// Wrap returns listed in episode order.
    pub fn new(returns: Vec<f64>, sigma: f64, seed: u64) -> Result<Self> {
        if returns.len() < 2 {
            return Err(Error::usage("a return sample needs at least two episodes"));
        }
        if let Some(bad) = returns.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::domain(format!("returns must be finite and nonnegative, got {bad}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
        }
        let mut sorted = returns.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            sorted,
            by_episode: returns,
            sigma,
            seed,
        })
    }

    pub fn m(&self) -> usize {
        self.sorted.len()
    }

    /// Ascending.
    pub fn returns(&self) -> &[f64] {
        &self.sorted
    }

    pub fn by_episode(&self) -> &[f64] {
        &self.by_episode
    }

    pub fn mean(&self) -> f64 {
        self.by_episode.iter().sum::<f64>() / self.m() as f64
    }

    /// Distinct values, ascending.
    pub fn thresholds(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &r in &self.sorted {
            if out.last() != Some(&r) {
                out.push(r);
            }
        }
        out
    }

    /// `episode,return` rows in episode order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,return\n");
        for (i, r) in self.by_episode.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", sig(*r, 9)));
        }
        out
    }

    pub fn from_csv(text: &str, sigma: f64, seed: u64) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("episode,return") {
            return Err(Error::Format("returns CSV must start with `episode,return`".into()));
        }
        let mut returns = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let value = line
                .split(',')
                .nth(1)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Format(format!("bad returns row {}: `{line}`", n + 2)))?;
            returns.push(value);
        }
        Self::new(returns, sigma, seed)
    }
}

/// Play `m` smoothed greedy episodes; episode `i` uses stream `(seed, "certify", i)`.
pub fn collect_returns(net: &QNetwork, env: EnvKind, sigma: f64, m: usize, seed: u64) -> Result<ReturnSample> {
    if m < 2 {
        return Err(Error::usage("certification needs at least two episodes"));
    }
    let res = evaluate_tagged(net, env, sigma, m, seed, purpose::CERTIFY)?;
    ReturnSample::new(res.returns, sigma, seed)
}

/// One lower-bounded survival probability `P(R >= threshold) >= prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalBound {
    pub threshold: f64,
    pub prob: f64,
}

/// Lower confidence bounds on `P(R >= r)` for every distinct return `r`, jointly
/// valid with probability at least `1 - alpha`.
pub fn lower_confidence_probs(sample: &ReturnSample, alpha: f64, mode: BoundMode) -> Result<Vec<SurvivalBound>> {
    let params = ConfidenceParams::new(alpha, sample.m())?;
    match mode {
        BoundMode::Dkw => dkw_lower_probs(sample, dkw_half_width(params.alpha(), params.m())),
        BoundMode::ClopperPearson => {
            let thresholds = sample.thresholds();
            let per_test = alpha / thresholds.len() as f64;
            let m = sample.m() as u64;
            thresholds
                .into_iter()
                .map(|v| {
                    let at_least = sample.returns().len() - sample.returns().partition_point(|&r| r < v);
                    Ok(SurvivalBound {
                        threshold: v,
                        prob: clopper_pearson_lower(at_least as u64, m, per_test)?,
                    })
                })
                .collect()
        }
    }
}

pub(crate) fn dkw_lower_probs(sample: &ReturnSample, half_width: f64) -> Result<Vec<SurvivalBound>> {
    sample
        .thresholds()
        .into_iter()
        .map(|v| {
            let below = ecdf_at(sample.returns(), v)?;
            Ok(SurvivalBound {
                threshold: v,
                prob: (1.0 - below - half_width).clamp(0.0, 1.0),
            })
        })
        .collect()
}

/// Empirical survival probabilities with no confidence correction.
pub fn plug_in_probs(sample: &ReturnSample) -> Result<Vec<SurvivalBound>> {
    dkw_lower_probs(sample, 0.0)
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `Phi(Phi^-1(p) - shift)`, with the conventions that `p = 0` stays 0 and a zero
/// shift returns `p` untouched.
fn shifted_prob(p: f64, shift: f64) -> Result<f64> {
    if p <= 0.0 {
        return Ok(0.0);
    }
    if shift == 0.0 {
        return Ok(p);
    }
    let z = std_normal_quantile(clamp_prob(p))? - shift;
    Ok(if z == f64::NEG_INFINITY { 0.0 } else { normal_cdf_unchecked(z) })
}

fn shift_for(tau: f64, sigma: f64) -> Result<f64> {
    if !(tau >= 0.0) || tau.is_nan() {
        return Err(Error::domain(format!("budget tau must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(format!(
            "a positive budget (tau = {tau}) needs smoothing noise sigma > 0"
        )));
    }
    Ok(tau / sigma)
}

/// Lower bound on expected return from precomputed survival bounds.
pub fn bound_from_probs(probs: &[SurvivalBound], sigma: f64, tau: f64) -> Result<f64> {
    let shift = shift_for(tau, sigma)?;
    let mut total = 0.0;
    let mut prev = 0.0;
    for b in probs {
        total += (b.threshold - prev) * shifted_prob(b.prob, shift)?;
        prev = b.threshold;
    }
    Ok(total.max(0.0))
}

/// Certified expected return at budget `tau`.
pub fn certified_expected_return(
    sample: &ReturnSample,
    alpha: f64,
    sigma: f64,
    tau: f64,
    mode: BoundMode,
) -> Result<f64> {
    let probs = lower_confidence_probs(sample, alpha, mode)?;
    bound_from_probs(&probs, sigma, tau)
}

/// Smallest-return radius: the largest `tau` at which the first bound term alone
/// still reaches `xi`.
pub fn theorem1_radius(sample: &ReturnSample, alpha: f64, sigma: f64, xi: f64, mode: BoundMode) -> Result<f64> {
    let probs = lower_confidence_probs(sample, alpha, mode)?;
    let first = probs[0];
    radius_from_first(first, sigma, xi)
}

fn radius_from_first(first: SurvivalBound, sigma: f64, xi: f64) -> Result<f64> {
    let r1 = first.threshold;
    if !(r1 > 0.0) {
        return Err(Error::domain("the smallest return must be positive to certify a radius"));
    }
    let ceiling = r1 * first.prob;
    if !(xi > 0.0 && xi <= ceiling) {
        return Err(Error::domain(format!(
            "target return {xi} is not certifiable; it must lie in (0, {ceiling}]"
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    let tau = sigma * (std_normal_quantile(clamp_prob(first.prob))? - std_normal_quantile(clamp_prob(xi / r1))?);
    Ok(tau.max(0.0))
}

/// Radius from the Lipschitz continuity of the smoothed expected return, for
/// returns confined to `[a, b]`.
pub fn soft_radius(expected_return: f64, a: f64, b: f64, xi: f64, sigma: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::domain(format!("return range needs A < B, got [{a}, {b}]")));
    }
    if !(a <= xi && xi <= expected_return && expected_return <= b) {
        return Err(Error::domain(format!(
            "soft radius needs A <= xi <= E <= B, got A={a} xi={xi} E={expected_return} B={b}"
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    let width = b - a;
    let hi = std_normal_quantile(clamp_prob((expected_return - a) / width))?;
    let lo = std_normal_quantile(clamp_prob((xi - a) / width))?;
    Ok((sigma * (hi - lo)).max(0.0))
}

/// Per-step radius within which the greedy action cannot change, for smoothed
/// Q-values confined to `[l, u]`.
pub fn local_radius(q_top1: f64, q_top2: f64, l: f64, u: f64, sigma: f64) -> Result<f64> {
    if !(l < u) {
        return Err(Error::domain(format!("Q range needs l < u, got [{l}, {u}]")));
    }
    if !(l <= q_top2 && q_top2 <= q_top1 && q_top1 <= u) {
        return Err(Error::domain(format!(
            "local radius needs l <= q2 <= q1 <= u, got l={l} q2={q_top2} q1={q_top1} u={u}"
        )));
    }
    if q_top1 == q_top2 {
        return Ok(0.0);
    }
    let width = u - l;
    let hi = std_normal_quantile(clamp_prob((q_top1 - l) / width))?;
    let lo = std_normal_quantile(clamp_prob((q_top2 - l) / width))?;
    Ok((0.5 * sigma * (hi - lo)).max(0.0))
}

/// `∫ (F_X(c) - F_Y(c)) dc` over the joint support, for empirical CDFs.
///
/// Accumulated over the common denominator `|X|·|Y|` so that integer samples give
/// the same rational as `mean(Y) - mean(X)`.
pub fn cdf_expectation_gap(samples_x: &[f64], samples_y: &[f64]) -> Result<f64> {
    if samples_x.is_empty() || samples_y.is_empty() {
        return Err(Error::usage("both samples must be nonempty"));
    }
    for v in samples_x.iter().chain(samples_y) {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::domain(format!("samples must be finite and nonnegative, got {v}")));
        }
    }
    let mut x = samples_x.to_vec();
    let mut y = samples_y.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let mut knots: Vec<f64> = x.iter().chain(&y).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    // On [knot_k, knot_{k+1}) both CDFs are constant.
    let mut numerator = 0.0;
    let (mut ix, mut iy) = (0, 0);
    for w in knots.windows(2) {
        while ix < x.len() && x[ix] <= w[0] {
            ix += 1;
        }
        while iy < y.len() && y[iy] <= w[0] {
            iy += 1;
        }
        numerator += (ix as f64 * ny - iy as f64 * nx) * (w[1] - w[0]);
    }
    Ok(numerator / (nx * ny))
}

/// Certified bound over a grid of budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct CertCurve {
    pub points: Vec<(f64, f64)>,
    pub alpha: f64,
    pub sigma: f64,
    pub episodes: usize,
    pub mode: BoundMode,
}

impl CertCurve {
    /// CSV with header `tau,certified_return,method,sigma,alpha,episodes,mode`.
    pub fn to_csv(&self, method: &str) -> String {
        let mut out = String::from("tau,certified_return,method,sigma,alpha,episodes,mode\n");
        for (tau, bound) in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig(*tau, 9),
                sig(*bound, 9),
                method,
                sig(self.sigma, 9),
                sig(self.alpha, 9),
                self.episodes,
                self.mode.name()
            ));
        }
        out
    }

    /// Linear interpolation of the budget at which the bound first drops to `level`.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let first = self.points.first()?;
        if first.1 < level {
            return None;
        }
        for w in self.points.windows(2) {
            let ((t0, b0), (t1, b1)) = (w[0], w[1]);
            if b1 < level {
                return Some(if b0 == b1 { t0 } else { t0 + (b0 - level) / (b0 - b1) * (t1 - t0) });
            }
        }
        None
    }
}

pub fn certify_curve(
    sample: &ReturnSample,
    alpha: f64,
    sigma: f64,
    tau_grid: &[f64],
    mode: BoundMode,
) -> Result<CertCurve> {
    if tau_grid.is_empty() {
        return Err(Error::usage("tau grid is empty"));
    }
    if tau_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::usage("tau grid must be sorted ascending"));
    }
    let probs = lower_confidence_probs(sample, alpha, mode)?;
    let points = tau_grid
        .iter()
        .map(|&tau| Ok((tau, bound_from_probs(&probs, sigma, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertCurve {
        points,
        alpha,
        sigma,
        episodes: sample.m(),
        mode,
    })
}

/// Per-step smoothed top-two Q-values and the radius derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalStep {
    pub episode: usize,
    pub step: usize,
    pub q_top1: f64,
    pub q_top2: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusReport {
    /// `None` when the target return is above what the sample can certify.
    pub theorem1: Option<f64>,
    pub soft: Option<f64>,
    pub xi: f64,
    pub return_range: (f64, f64),
    pub q_range: (f64, f64),
    pub local: Vec<LocalStep>,
}

impl RadiusReport {
    pub fn summary_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| sig(x, 9)).unwrap_or_else(|| "nan".into());
        format!(
            "xi,theorem1_radius,soft_radius,return_low,return_high,q_low,q_high\n{},{},{},{},{},{},{}\n",
            sig(self.xi, 9),
            opt(self.theorem1),
            opt(self.soft),
            sig(self.return_range.0, 9),
            sig(self.return_range.1, 9),
            sig(self.q_range.0, 9),
            sig(self.q_range.1, 9)
        )
    }

    pub fn local_csv(&self) -> String {
        let mut out = String::from("episode,step,q_top1,q_top2,local_radius\n");
        for s in &self.local {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.episode,
                s.step,
                sig(s.q_top1, 9),
                sig(s.q_top2, 9),
                sig(s.radius, 9)
            ));
        }
        out
    }
}

/// Settings for [`radius_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub xi: f64,
    pub mode: BoundMode,
    pub return_range: (f64, f64),
    /// Episodes rolled out for the per-step radii.
    pub local_episodes: usize,
    /// Noise draws averaged per step to estimate the smoothed Q-values.
    pub smoothing_samples: usize,
    pub seed: u64,
}

impl RadiusConfig {
    pub fn new(sigma: f64, xi: f64, seed: u64) -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            sigma,
            xi,
            mode: BoundMode::Dkw,
            return_range: RETURN_RANGE,
            local_episodes: 10,
            smoothing_samples: 32,
            seed,
        }
    }
}

/// Smoothed Q-values along greedy rollouts of the smoothed policy. Each step's
/// Q-vector is the average over `samples` noisy copies of the clean observation.
pub fn smoothed_q_rollouts(
    net: &QNetwork,
    env: EnvKind,
    sigma: f64,
    episodes: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_net(net, env)?;
    let noise = env::NoiseSpec::new(sigma)?;
    let samples = if sigma == 0.0 { 1 } else { samples.max(1) };
    par::map_indexed(episodes, |i| -> Result<Vec<Vec<f64>>> {
        let mut stream = rng::stream(seed, purpose::CERTIFY, i as u64);
        let mut game = env::StackedCartpole::reset(env, &mut stream);
        let mut steps = Vec::new();
        while !game.is_done() {
            let mut mean = vec![0.0; net.action_dim()];
            for _ in 0..samples {
                let q = net.forward(&env::observe(game.stack(), noise, &mut stream).noisy())?;
                for (m, v) in mean.iter_mut().zip(&q) {
                    *m += v / samples as f64;
                }
            }
            let action = crate::nn::argmax(&mean);
            steps.push(mean);
            game.step(env::Action::from_index(action)?)?;
        }
        Ok(steps)
    })
    .into_iter()
    .collect()
}

/// All three radii for one agent. `sample` supplies the return distribution for
/// the global radii; the local radii come from fresh smoothed rollouts, with
/// `[l, u]` set to the extreme smoothed Q-values seen across them.
pub fn radius_report(net: &QNetwork, env: EnvKind, sample: &ReturnSample, cfg: &RadiusConfig) -> Result<RadiusReport> {
    let probs = lower_confidence_probs(sample, cfg.alpha, cfg.mode)?;
    let theorem1 = radius_from_first(probs[0], cfg.sigma, cfg.xi).ok();
    let (a, b) = cfg.return_range;
    let soft = soft_radius(sample.mean(), a, b, cfg.xi, cfg.sigma).ok();
    let rollouts = smoothed_q_rollouts(net, env, cfg.sigma, cfg.local_episodes, cfg.smoothing_samples, cfg.seed)?;
    let (mut l, mut u) = (f64::INFINITY, f64::NEG_INFINITY);
    for q in rollouts.iter().flatten().flatten() {
        l = l.min(*q);
        u = u.max(*q);
    }
    let mut local = Vec::new();
    if l < u {
        for (episode, steps) in rollouts.iter().enumerate() {
            for (step, q) in steps.iter().enumerate() {
                let (i1, i2) = top_two(q)?;
                local.push(LocalStep {
                    episode,
                    step,
                    q_top1: q[i1],
                    q_top2: q[i2],
                    radius: local_radius(q[i1], q[i2], l, u, cfg.sigma)?,
                });
            }
        }
    }
    Ok(RadiusReport {
        theorem1,
        soft,
        xi: cfg.xi,
        return_range: cfg.return_range,
        q_range: (l, u),
        local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, m: usize) -> ReturnSample {
        ReturnSample::new(vec![v; m], 0.2, 0).unwrap()
    }

    #[test]
    fn all_max_returns_dkw() {
        let s = constant(200.0, 10_000);
        let p = lower_confidence_probs(&s, 0.05, BoundMode::Dkw).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].prob - 0.9864189).abs() < 1e-6);
        let b0 = certified_expected_return(&s, 0.05, 0.2, 0.0, BoundMode::Dkw).unwrap();
        assert!((b0 - 197.2838).abs() < 1e-3);
        let tau = 0.2 * std_normal_quantile(p[0].prob).unwrap();
        let mid = certified_expected_return(&s, 0.05, 0.2, tau, BoundMode::Dkw).unwrap();
        assert!((mid - 100.0).abs() < 0.1);
        let far = certified_expected_return(&s, 0.05, 0.2, 1e6, BoundMode::Dkw).unwrap();
        assert!(far < 1e-9);
    }

    #[test]
    fn half_width_zero_is_plain_survival() {
        let s = ReturnSample::new(vec![1.0, 2.0, 2.0, 5.0], 0.1, 0).unwrap();
        let p = dkw_lower_probs(&s, dkw_half_width(2.0, s.m())).unwrap();
        let got: Vec<f64> = p.iter().map(|b| b.prob).collect();
        assert_eq!(got, vec![1.0, 0.75, 0.25]);
        let plug = plug_in_probs(&s).unwrap();
        assert_eq!(plug, p);
    }

    #[test]
    fn max_threshold_sits_below_one() {
        let mut returns = vec![100.0; 999];
        returns.push(200.0);
        let s = ReturnSample::new(returns, 0.2, 0).unwrap();
        let p = lower_confidence_probs(&s, 0.05, BoundMode::Dkw).unwrap();
        let eps = dkw_half_width(0.05, 1000);
        assert_eq!(p.last().unwrap().prob, 0.0f64.max(1.0 - 0.999 - eps));
    }

    #[test]
    fn positive_budget_needs_noise() {
        let s = constant(10.0, 5);
        assert!(matches!(
            certified_expected_return(&s, 0.05, 0.0, 0.1, BoundMode::Dkw),
            Err(Error::Domain(_))
        ));
        assert!(certified_expected_return(&s, 0.05, 0.0, 0.0, BoundMode::Dkw).is_ok());
    }

    #[test]
    fn clopper_pearson_mode_is_bonferroni() {
        let s = ReturnSample::new(vec![1.0, 1.0, 2.0, 3.0, 3.0, 3.0], 0.1, 0).unwrap();
        let p = lower_confidence_probs(&s, 0.05, BoundMode::ClopperPearson).unwrap();
        let k = [6, 4, 3];
        for (b, k) in p.iter().zip(k) {
            assert_eq!(b.prob, clopper_pearson_lower(k, 6, 0.05 / 3.0).unwrap());
        }
    }

    #[test]
    fn theorem1_examples() {
        let first = SurvivalBound { threshold: 100.0, prob: 0.9 };
        let tau = radius_from_first(first, 0.2, 50.0).unwrap();
        assert!((tau - 0.2563103).abs() < 1e-6);
        assert_eq!(radius_from_first(first, 0.2, 90.0).unwrap(), 0.0);
        let doubled = radius_from_first(first, 0.4, 50.0).unwrap();
        assert!((doubled - 2.0 * tau).abs() < 1e-12);
        let err = radius_from_first(first, 0.2, 95.0).unwrap_err().to_string();
        assert!(err.contains("90"), "{err}");
    }

    #[test]
    fn soft_and_local_examples() {
        assert!((soft_radius(150.0, 0.0, 200.0, 100.0, 0.2).unwrap() - 0.1348980).abs() < 1e-6);
        assert_eq!(soft_radius(150.0, 0.0, 200.0, 150.0, 0.2).unwrap(), 0.0);
        let capped = soft_radius(200.0, 0.0, 200.0, 100.0, 0.2).unwrap();
        assert!(capped.is_finite() && capped > 1.0);
        assert!(soft_radius(150.0, 0.0, 200.0, 160.0, 0.2).is_err());
        assert!(soft_radius(150.0, 200.0, 0.0, 100.0, 0.2).is_err());

        assert!((local_radius(0.8, 0.6, 0.0, 1.0, 0.2).unwrap() - 0.0588274).abs() < 1e-6);
        assert_eq!(local_radius(0.7, 0.7, 0.0, 1.0, 0.2).unwrap(), 0.0);
        let wide = local_radius(0.6, 0.5, 0.0, 1.0, 0.2).unwrap();
        let narrow = local_radius(0.6, 0.5, 0.4, 0.7, 0.2).unwrap();
        assert!(narrow > wide);
        assert!(local_radius(0.5, 0.6, 0.0, 1.0, 0.2).is_err());
    }

    #[test]
    fn cdf_gap_examples() {
        assert_eq!(cdf_expectation_gap(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(cdf_expectation_gap(&[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0]).unwrap(), 0.0);
        assert!(cdf_expectation_gap(&[-1.0], &[1.0]).is_err());
        assert!(cdf_expectation_gap(&[], &[1.0]).is_err());
    }

    #[test]
    fn curve_and_csv() {
        let s = ReturnSample::new((1..=50).map(|i| i as f64 * 4.0).collect(), 0.2, 7).unwrap();
        let c = certify_curve(&s, 0.05, 0.2, &[0.0], BoundMode::Dkw).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].1, certified_expected_return(&s, 0.05, 0.2, 0.0, BoundMode::Dkw).unwrap());
        let grid = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let c = certify_curve(&s, 0.05, 0.2, &grid, BoundMode::Dkw).unwrap();
        assert!(c.points.windows(2).all(|w| w[1].1 <= w[0].1));
        let csv = c.to_csv("camp");
        assert!(csv.starts_with("tau,certified_return,method,sigma,alpha,episodes,mode\n0,"));
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().nth(2).unwrap().ends_with(",camp,0.2,0.05,50,dkw"));
        assert!(certify_curve(&s, 0.05, 0.2, &[0.4, 0.2], BoundMode::Dkw).is_err());
        let crossing = c.crossing(c.points[0].1 / 2.0).unwrap();
        assert!(crossing > 0.0 && crossing <= 1.0);
    }

    #[test]
    fn returns_csv_round_trip() {
        let s = ReturnSample::new(vec![12.0, 200.0, 37.0], 0.2, 1).unwrap();
        let text = s.to_csv();
        assert_eq!(text, "episode,return\n0,12\n1,200\n2,37\n");
        assert_eq!(ReturnSample::from_csv(&text, 0.2, 1).unwrap(), s);
        assert!(ReturnSample::from_csv("x\n", 0.2, 1).is_err());
        assert!(ReturnSample::new(vec![1.0], 0.2, 1).is_err());
    }
}
