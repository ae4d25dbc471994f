//! TOML run configuration.
//!
//! Every section is optional. Missing training keys fall back to the chosen
//! preset (`desk` or `paper`); everything else has a fixed default.

use std::path::{Path, PathBuf};

use camp_core::attack::{AttackConfig, InnerAttack, BETA, PGD_STEP};
use camp_core::certify::{BoundMode, RadiusConfig, DEFAULT_ALPHA};
use camp_core::env::EnvKind;
use camp_core::losses::{EtaMode, LossConfig};
use camp_core::stats::ConfidenceParams;
use camp_core::trainer::{EpsSchedule, Method, TrainConfig};
use serde::Deserialize;

use crate::CliError;

/// Environment variable consulted when neither `--out` nor `out_dir` is given.
pub const OUT_DIR_ENV: &str = "CAMP_OUT_DIR";

pub const DEFAULT_TAU_GRID: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub env: Option<RawEnv>,
    pub method: Option<Method>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub train: Option<RawTrain>,
    pub certify: Option<RawCertify>,
    pub attack: Option<RawAttack>,
    pub eval: Option<RawEval>,
    pub radii: Option<RawRadii>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnv {
    pub name: EnvKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTrain {
    pub preset: Option<Preset>,
    pub total_steps: Option<u64>,
    pub burn_in: Option<u64>,
    pub buffer_size: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub train_freq: Option<u64>,
    pub grad_steps_per_train: Option<usize>,
    pub target_update_freq: Option<u64>,
    pub polyak: Option<f64>,
    pub gamma: Option<f64>,
    /// Fixed hinge offset; omitted means adaptive.
    pub eta: Option<f64>,
    pub eps_start: Option<f64>,
    pub eps_end: Option<f64>,
    pub eps_fraction: Option<f64>,
    pub validation_every: Option<u64>,
    pub validation_episodes: Option<usize>,
    pub early_stop: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCertify {
    pub episodes: Option<usize>,
    pub alpha: Option<f64>,
    pub tau_grid: Option<Vec<f64>>,
    pub mode: Option<BoundMode>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAttack {
    pub inner: Option<InnerAttack>,
    pub tau_grid: Option<Vec<f64>>,
    pub step_size: Option<f64>,
    pub beta: Option<f64>,
    pub q_gap_filter: Option<f64>,
    pub episodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEval {
    pub episodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRadii {
    pub xi: Option<f64>,
    pub return_low: Option<f64>,
    pub return_high: Option<f64>,
    pub local_episodes: Option<usize>,
    pub smoothing_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifySettings {
    pub episodes: usize,
    pub alpha: f64,
    pub tau_grid: Vec<f64>,
    pub mode: BoundMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSettings {
    pub base: AttackConfig,
    pub tau_grid: Vec<f64>,
}

/// Validated configuration with every default resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    pub method: Method,
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub train: TrainConfig,
    pub certify: CertifySettings,
    pub attack: AttackSettings,
    pub eval_episodes: usize,
    pub radii: RadiusConfig,
}

fn bad(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{key}: {}", reason.into()))
}

fn check_grid(key: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(bad(key, "must not be empty"));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(bad(key, "budgets must be finite and >= 0"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(bad(key, "must be sorted ascending"));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        Self::resolve(raw, None)
    }

    /// Read and validate `path`. A missing file is a configuration error.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let raw: RawConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        Self::resolve(raw, seed_override)
    }

    pub fn resolve(raw: RawConfig, seed_override: Option<u64>) -> Result<Self, CliError> {
        let env = raw.env.map(|e| e.name).unwrap_or(EnvKind::Cartpole1);
        let method = raw.method.unwrap_or(Method::Camp);
        let sigma = raw.sigma.unwrap_or(0.0);
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(bad("sigma", format!("must be >= 0, got {sigma}")));
        }
        let lambda = raw.lambda.unwrap_or(1.0);
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(bad("lambda", format!("must be >= 0, got {lambda}")));
        }
        let seed = seed_override.or(raw.seed).unwrap_or(0);
        let out_dir = match raw.out_dir {
            Some(p) => p,
            None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
        };

        let t = raw.train.unwrap_or_default();
        let mut train = match t.preset.unwrap_or_default() {
            Preset::Desk => TrainConfig::desk(env, method, sigma, lambda, seed),
            Preset::Paper => TrainConfig::paper(env, method, sigma, lambda, seed),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = t.$field { train.$field = v; } )* };
        }
        set!(total_steps, burn_in, buffer_size, batch_size, lr, train_freq, grad_steps_per_train,
             target_update_freq, polyak, validation_every, validation_episodes, early_stop);
        if let Some(eta) = t.eta {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(bad("train.eta", format!("must be >= 0, got {eta}")));
            }
        }
        train.loss = LossConfig::new(
            t.gamma.unwrap_or(train.loss.gamma),
            lambda,
            t.eta.map(EtaMode::Fixed).unwrap_or(EtaMode::Adaptive),
        )
        .map_err(|e| bad("train.gamma", e.to_string()))?;
        let d = EpsSchedule::default();
        train.eps = EpsSchedule {
            start: t.eps_start.unwrap_or(d.start),
            end: t.eps_end.unwrap_or(d.end),
            fraction: t.eps_fraction.unwrap_or(d.fraction),
        };
        train.validate().map_err(CliError::from)?;

        let c = raw.certify.unwrap_or_default();
        let certify = CertifySettings {
            episodes: c.episodes.unwrap_or(10_000),
            alpha: c.alpha.unwrap_or(DEFAULT_ALPHA),
            // Without smoothing noise only the zero budget is certifiable.
            tau_grid: c.tau_grid.unwrap_or_else(|| {
                if sigma > 0.0 { DEFAULT_TAU_GRID.to_vec() } else { vec![0.0] }
            }),
            mode: c.mode.unwrap_or(BoundMode::Dkw),
        };
        if certify.episodes < 2 {
            return Err(bad("certify.episodes", "must be at least 2"));
        }
        ConfidenceParams::new(certify.alpha, certify.episodes).map_err(|e| bad("certify.alpha", e.to_string()))?;
        check_grid("certify.tau_grid", &certify.tau_grid)?;
        if sigma == 0.0 && certify.tau_grid.iter().any(|t| *t > 0.0) {
            return Err(bad("certify.tau_grid", "positive budgets need sigma > 0"));
        }

        let a = raw.attack.unwrap_or_default();
        let attack = AttackSettings {
            base: AttackConfig {
                tau: 0.0,
                inner: a.inner.unwrap_or(InnerAttack::Pgd),
                step_size: a.step_size.unwrap_or(PGD_STEP),
                beta: a.beta.unwrap_or(BETA),
                q_gap_filter: a.q_gap_filter.unwrap_or(0.0),
                sigma,
                episodes: a.episodes.unwrap_or(1000),
                seed,
            },
            tau_grid: a.tau_grid.unwrap_or_else(|| DEFAULT_TAU_GRID.to_vec()),
        };
        attack.base.validate().map_err(CliError::from)?;
        check_grid("attack.tau_grid", &attack.tau_grid)?;

        let eval_episodes = raw.eval.and_then(|e| e.episodes).unwrap_or(100);
        if eval_episodes == 0 {
            return Err(bad("eval.episodes", "must be at least 1"));
        }

        let r = raw.radii.unwrap_or_default();
        let mut radii = RadiusConfig::new(sigma, r.xi.unwrap_or(100.0), seed);
        radii.alpha = certify.alpha;
        radii.mode = certify.mode;
        radii.return_range = (
            r.return_low.unwrap_or(radii.return_range.0),
            r.return_high.unwrap_or(radii.return_range.1),
        );
        if let Some(n) = r.local_episodes {
            radii.local_episodes = n;
        }
        if let Some(n) = r.smoothing_samples {
            radii.smoothing_samples = n;
        }
        if !(radii.return_range.0 < radii.return_range.1) {
            return Err(bad("radii.return_low", "must be below radii.return_high"));
        }
        if !(radii.xi.is_finite() && radii.xi > 0.0) {
            return Err(bad("radii.xi", format!("must be > 0, got {}", radii.xi)));
        }
        if radii.local_episodes == 0 {
            return Err(bad("radii.local_episodes", "must be at least 1"));
        }

        Ok(Self {
            env,
            method,
            sigma,
            lambda,
            seed,
            out_dir,
            checkpoint: raw.checkpoint,
            train,
            certify,
            attack,
            eval_episodes,
            radii,
        })
    }

    /// Shared file-name stem for this run's artifacts.
    pub fn stem(&self) -> String {
        format!("{}_{}_sigma{}_seed{}", self.method.name(), self.env.name(), self.sigma, self.seed)
    }

    /// Where `train` writes the acting network and other commands read it.
    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join(format!("{}.json", self.stem())))
    }
}
