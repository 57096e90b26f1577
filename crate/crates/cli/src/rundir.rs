//! Run-directory layout. Every directory carries its config echo so it can
//! be reported on or re-plotted without any other state.
//!
//! ```text
//! <run>/config.toml           config echo
//! <run>/run.toml              what was run (evaluation only)
//! <run>/metrics.csv           one record per episode
//! <run>/summary.csv           mean and std per metric
//! <run>/episodes/ep_000/      log.csv rewards.csv density.csv density.svg trajectories.svg
//! <run>/reward_curve.csv      training only, with checkpoints/ and final.ckpt
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use weavelane::config::{RunConfig, ECHO_FILE};
use weavelane::metrics::{read_records_csv, MetricsRecord};

use crate::Fail;

pub const RUN_FILE: &str = "run.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const EPISODES_DIR: &str = "episodes";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub policy: String,
    pub checkpoint: Option<String>,
    pub inflow_vphpl: f64,
    pub episodes: usize,
    pub seed: u64,
}

pub fn episode_dir(run: &Path, k: usize) -> PathBuf {
    run.join(EPISODES_DIR).join(format!("ep_{k:03}"))
}

pub fn io_fail(path: &Path, e: impl std::fmt::Display) -> Fail {
    Fail::Runtime(format!("{}: {e}", path.display()))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Fail> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_fail(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_fail(path, e))
}

pub fn write_echo(run: &Path, cfg: &RunConfig) -> Result<(), Fail> {
    write(&run.join(ECHO_FILE), cfg.echo())
}

/// Config echo of an existing run directory.
pub fn read_echo(run: &Path) -> Result<RunConfig, Fail> {
    let path = run.join(ECHO_FILE);
    if !path.exists() {
        return Err(Fail::Data(format!("{} is not a run directory (no {ECHO_FILE})", run.display())));
    }
    RunConfig::load(&path).map_err(|e| Fail::Data(format!("{}: {e}", path.display())))
}

pub struct EvalRun {
    pub dir: PathBuf,
    pub meta: RunMeta,
    pub config: RunConfig,
    pub records: Vec<MetricsRecord>,
}

pub fn read_eval_run(run: &Path) -> Result<EvalRun, Fail> {
    let config = read_echo(run)?;
    let meta_path = run.join(RUN_FILE);
    let text = fs::read_to_string(&meta_path)
        .map_err(|_| Fail::Data(format!("{} is not an evaluation run (no {RUN_FILE})", run.display())))?;
    let meta: RunMeta = toml::from_str(&text).map_err(|e| Fail::Data(format!("{}: {e}", meta_path.display())))?;
    let metrics_path = run.join(METRICS_FILE);
    let file = fs::File::open(&metrics_path).map_err(|e| Fail::Data(format!("{}: {e}", metrics_path.display())))?;
    let records = read_records_csv(file).map_err(|e| Fail::Data(format!("{}: {e}", metrics_path.display())))?;
    if records.len() != meta.episodes {
        return Err(Fail::Data(format!(
            "{}: {} records for {} episodes",
            metrics_path.display(),
            records.len(),
            meta.episodes
        )));
    }
    Ok(EvalRun {
        dir: run.to_path_buf(),
        meta,
        config,
        records,
    })
}

/// `(iteration, mean_system_reward)` rows of a reward-curve file.
pub fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>, Fail> {
    let text = fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            match (f.first().and_then(|x| x.parse().ok()), f.get(2).and_then(|x| x.parse().ok())) {
                (Some(it), Some(r)) => Ok((it, r)),
                _ => Err(Fail::Data(format!("{}: bad row {l:?}", path.display()))),
            }
        })
        .collect()
}
