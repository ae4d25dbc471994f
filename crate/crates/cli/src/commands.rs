//! Subcommand bodies. Each writes its artifacts under the run's output
//! directory and returns the lines to print.

use std::path::{Path, PathBuf};

use camp_core::attack::{attack_csv, attack_suite};
use camp_core::certify::{certify_curve, collect_returns, radius_report, ReturnSample};
use camp_core::fmt::sig;
use camp_core::nn::{Checkpoint, QNetwork};
use camp_core::trainer::{evaluate, train};

use crate::{CliError, RunConfig};

/// What a command produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

fn load_net(path: &Path) -> Result<(QNetwork, Checkpoint), CliError> {
    let ckpt = Checkpoint::load(path).map_err(|e| match e {
        camp_core::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::from(other),
    })?;
    Ok((ckpt.to_network()?, ckpt))
}

fn artifact(cfg: &RunConfig, suffix: &str) -> PathBuf {
    cfg.out_dir.join(format!("{}_{suffix}", cfg.stem()))
}

pub fn train_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut outcome = train(&cfg.train)?;
    let ckpt = cfg.checkpoint_path();
    let dir = ckpt.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = ckpt
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Config(format!("bad checkpoint path {}", ckpt.display())))?
        .to_string();
    outcome
        .write(&dir, &stem)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let last = outcome
        .report
        .final_validation()
        .map(|v| sig(v, 9))
        .unwrap_or_else(|| "none".into());
    Ok(Report {
        files: outcome.report.checkpoint_paths.clone(),
        lines: vec![
            format!(
                "trained {} on {} for {} steps{}",
                cfg.method.name(),
                cfg.env.name(),
                outcome.report.steps_run,
                if outcome.report.stopped_early { " (early stop)" } else { "" }
            ),
            format!("final validation return: {last}"),
        ],
    })
}

pub fn certify_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let (net, ckpt) = load_net(&cfg.checkpoint_path())?;
    let c = &cfg.certify;
    let sample = collect_returns(&net, cfg.env, cfg.sigma, c.episodes, cfg.seed)?;
    let curve = certify_curve(&sample, c.alpha, cfg.sigma, &c.tau_grid, c.mode)?;
    let mut files = Vec::new();
    write(artifact(cfg, "certify.csv"), &curve.to_csv(&ckpt.meta.method), &mut files)?;
    write(artifact(cfg, "returns.csv"), &sample.to_csv(), &mut files)?;
    let half = camp_core::env::RETURN_RANGE.1 / 2.0;
    let crossing = curve
        .crossing(half)
        .map(|t| sig(t, 9))
        .unwrap_or_else(|| "not reached on grid".into());
    Ok(Report {
        files,
        lines: vec![
            format!("mean smoothed return: {}", sig(sample.mean(), 9)),
            format!("certified return falls below {half} at tau = {crossing}"),
        ],
    })
}

pub fn attack_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let (net, _) = load_net(&cfg.checkpoint_path())?;
    let a = &cfg.attack;
    let rows = attack_suite(&net, cfg.env, &a.base, &a.tau_grid)?;
    let mut files = Vec::new();
    let name = format!("attack_{}.csv", a.base.inner.name());
    write(artifact(cfg, &name), &attack_csv(&rows, &a.base), &mut files)?;
    let lines = rows
        .iter()
        .map(|r| format!("tau {}: mean return {} (std {})", sig(r.tau, 9), sig(r.mean_return, 9), sig(r.std_return, 9)))
        .collect();
    Ok(Report { files, lines })
}

pub fn eval_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let (net, _) = load_net(&cfg.checkpoint_path())?;
    let res = evaluate(&net, cfg.env, cfg.sigma, cfg.eval_episodes, cfg.seed)?;
    let mut csv = String::from("episode,return\n");
    for (i, r) in res.returns.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", sig(*r, 9)));
    }
    let mut files = Vec::new();
    write(artifact(cfg, "eval.csv"), &csv, &mut files)?;
    Ok(Report {
        files,
        lines: vec![format!(
            "mean return over {} episodes: {}",
            cfg.eval_episodes,
            sig(res.mean_return, 9)
        )],
    })
}

pub fn qgap_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let (net, _) = load_net(&cfg.checkpoint_path())?;
    let res = evaluate(&net, cfg.env, cfg.sigma, cfg.eval_episodes, cfg.seed)?;
    let csv = format!(
        "episodes,sigma,min_q_gap,mean_return\n{},{},{},{}\n",
        cfg.eval_episodes,
        sig(cfg.sigma, 9),
        sig(res.min_q_gap, 9),
        sig(res.mean_return, 9)
    );
    let mut files = Vec::new();
    write(artifact(cfg, "qgap.csv"), &csv, &mut files)?;
    // Reported at 1e-9 resolution, matching how the gap is tabulated.
    let shown = if res.min_q_gap < 1e-9 { "0".to_string() } else { sig(res.min_q_gap, 3) };
    Ok(Report {
        files,
        lines: vec![format!("min Q-gap over {} episodes: {shown}", cfg.eval_episodes)],
    })
}

pub fn radii_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let (net, _) = load_net(&cfg.checkpoint_path())?;
    let returns_path = artifact(cfg, "returns.csv");
    // Reuse the certification sample when it is already on disk.
    let sample = match std::fs::read_to_string(&returns_path) {
        Ok(text) => ReturnSample::from_csv(&text, cfg.sigma, cfg.seed)?,
        Err(_) => collect_returns(&net, cfg.env, cfg.sigma, cfg.certify.episodes, cfg.seed)?,
    };
    let report = radius_report(&net, cfg.env, &sample, &cfg.radii)?;
    let mut files = Vec::new();
    write(artifact(cfg, "radii.csv"), &report.summary_csv(), &mut files)?;
    write(artifact(cfg, "local_radii.csv"), &report.local_csv(), &mut files)?;
    let show = |v: Option<f64>| v.map(|x| sig(x, 9)).unwrap_or_else(|| "infeasible".into());
    Ok(Report {
        files,
        lines: vec![
            format!("theorem-1 radius at xi = {}: {}", sig(cfg.radii.xi, 9), show(report.theorem1)),
            format!("soft radius: {}", show(report.soft)),
            format!("local radii computed for {} steps", report.local.len()),
        ],
    })
}
