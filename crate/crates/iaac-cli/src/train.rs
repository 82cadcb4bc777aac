//! `train`: one actor-critic run per (critic variant, seed) pair.
//!
//! Each run streams its log to `<variant>/seed<seed>.csv` as updates
//! happen and snapshots a resumable checkpoint alongside it. Interrupted
//! runs restart with `resume: true`: the trainer state (networks, step
//! counters, rollout stream position) comes back from the snapshot, the
//! log is truncated to the snapshot's update index, and the continuation
//! is step-for-step identical to a run that was never interrupted.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use iaac::actor_critic::{
    format_log_row, read_log_csv, ArchConfig, CriticVariant, HyperParams, TrainCheckpoint,
    TrainConfig, Trainer, LOG_HEADER,
};

use crate::config::{build_env, overlay, EnvSpec};
use crate::error::{io_err, CliError};
use crate::manifest::{config_hash, write_manifest, RunManifest};
use crate::pool;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainCmdConfig {
    pub env: EnvSpec,
    /// Replace the privileged signal with the ground state before training.
    pub state_as_info: bool,
    pub variants: Vec<CriticVariant>,
    pub seeds: Vec<u64>,
    /// Partial override of the per-environment hyperparameter preset.
    pub hyper: Option<Value>,
    pub arch: ArchConfig,
    pub total_steps: u64,
    /// Snapshot interval in updates; 0 snapshots only at the end.
    pub checkpoint_every_updates: u64,
    /// Stop each run after this many updates in this invocation; 0 runs
    /// to the step budget. With `resume` this time-boxes long runs.
    pub stop_after_updates: u64,
    pub resume: bool,
    pub out_dir: String,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        TrainCmdConfig {
            env: EnvSpec::HeavenHell { max_steps: 100 },
            state_as_info: false,
            variants: vec![CriticVariant::HistoryInformation],
            seeds: vec![0],
            hyper: None,
            arch: ArchConfig::default(),
            total_steps: 300_000,
            checkpoint_every_updates: 0,
            stop_after_updates: 0,
            resume: false,
            out_dir: "out/train".into(),
        }
    }
}

impl TrainCmdConfig {
    /// Preset for the configured environment with the config's partial
    /// overrides applied.
    pub fn resolve_hyper(&self) -> Result<HyperParams, CliError> {
        let hyper: HyperParams = overlay(&self.env.preset_hyper(), self.hyper.as_ref())?;
        hyper
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(hyper)
    }
}

pub fn log_name(variant: CriticVariant, seed: u64) -> PathBuf {
    PathBuf::from(variant.name()).join(format!("seed{seed}.csv"))
}

pub fn checkpoint_name(variant: CriticVariant, seed: u64) -> PathBuf {
    PathBuf::from(variant.name()).join(format!("seed{seed}.ckpt.json"))
}

pub fn run(config: &TrainCmdConfig) -> Result<RunManifest, CliError> {
    if config.variants.is_empty() || config.seeds.is_empty() {
        return Err(CliError::Config("variants and seeds must not be empty".into()));
    }
    let hyper = config.resolve_hyper()?;
    let dir = PathBuf::from(&config.out_dir);
    for variant in &config.variants {
        let sub = dir.join(variant.name());
        fs::create_dir_all(&sub).map_err(|e| io_err(&sub, e))?;
    }

    let mut outputs = Vec::new();
    let mut tasks: Vec<Box<dyn FnOnce() -> Result<(), CliError> + Send + '_>> = Vec::new();
    for &variant in &config.variants {
        for &seed in &config.seeds {
            outputs.push(log_name(variant, seed));
            outputs.push(checkpoint_name(variant, seed));
            let run_cfg = TrainConfig {
                variant,
                hyper: hyper.clone(),
                arch: config.arch.clone(),
                total_steps: config.total_steps,
                seed,
            };
            let dir = dir.clone();
            tasks.push(Box::new(move || {
                one_run(&dir, config, run_cfg, variant, seed)
            }));
        }
    }
    pool::run_tasks(tasks)?;

    let seeds_hash_seed = config.seeds.first().copied().unwrap_or(0);
    write_manifest(
        &dir,
        "train",
        config_hash(config)?,
        seeds_hash_seed,
        &outputs,
    )
}

fn one_run(
    dir: &Path,
    config: &TrainCmdConfig,
    run_cfg: TrainConfig,
    variant: CriticVariant,
    seed: u64,
) -> Result<(), CliError> {
    let mut env = build_env(&config.env, config.state_as_info)?;
    let log_path = dir.join(log_name(variant, seed));
    let ckpt_path = dir.join(checkpoint_name(variant, seed));

    let (mut trainer, fresh) = if config.resume && ckpt_path.exists() {
        let ck = read_checkpoint(&ckpt_path)?;
        check_resume_matches(&ck, &run_cfg)?;
        truncate_log(&log_path, ck.update_index)?;
        (
            Trainer::restore(&ck).map_err(|e| CliError::Runtime(e.to_string()))?,
            false,
        )
    } else {
        (
            Trainer::new(env.dims(), &run_cfg).map_err(|e| CliError::Config(e.to_string()))?,
            true,
        )
    };

    let mut log = open_log(&log_path, fresh)?;
    let interval = config.checkpoint_every_updates;
    let mut since_snapshot = 0u64;
    let mut this_invocation = 0u64;
    loop {
        if config.stop_after_updates > 0 && this_invocation >= config.stop_after_updates {
            break;
        }
        let row = match trainer
            .update_once(env.as_mut())
            .map_err(|e| CliError::Runtime(e.to_string()))?
        {
            Some(row) => row,
            None => break,
        };
        this_invocation += 1;
        writeln!(log, "{}", format_log_row(&row)).map_err(|e| io_err(&log_path, e))?;
        log.flush().map_err(|e| io_err(&log_path, e))?;
        since_snapshot += 1;
        if interval > 0 && since_snapshot >= interval {
            write_checkpoint(&ckpt_path, &trainer.checkpoint())?;
            since_snapshot = 0;
        }
    }
    write_checkpoint(&ckpt_path, &trainer.checkpoint())?;
    Ok(())
}

fn open_log(path: &Path, fresh: bool) -> Result<std::io::BufWriter<fs::File>, CliError> {
    let file = if fresh || !path.exists() {
        let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
        writeln!(f, "{LOG_HEADER}").map_err(|e| io_err(path, e))?;
        f
    } else {
        fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?
    };
    Ok(std::io::BufWriter::new(file))
}

pub fn read_checkpoint(path: &Path) -> Result<TrainCheckpoint, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_checkpoint(path: &Path, ck: &TrainCheckpoint) -> Result<(), CliError> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string(ck).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&tmp, text.as_bytes()).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// A snapshot may only continue the run it came from.
fn check_resume_matches(ck: &TrainCheckpoint, cfg: &TrainConfig) -> Result<(), CliError> {
    if ck.variant != cfg.variant
        || ck.hyper != cfg.hyper
        || ck.total_steps != cfg.total_steps
    {
        return Err(CliError::Config(
            "checkpoint does not match the configured run (variant, hyperparameters, or step budget differ); \
             start fresh with resume: false"
                .into(),
        ));
    }
    Ok(())
}

/// Drops log rows past the snapshot; the trainer recomputes them exactly.
fn truncate_log(path: &Path, update_index: u64) -> Result<(), CliError> {
    if !path.exists() {
        let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
        writeln!(f, "{LOG_HEADER}").map_err(|e| io_err(path, e))?;
        return Ok(());
    }
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let rows = read_log_csv(std::io::BufReader::new(file))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    writeln!(f, "{LOG_HEADER}").map_err(|e| io_err(path, e))?;
    for row in rows.iter().filter(|r| r.update_index <= update_index) {
        writeln!(f, "{}", format_log_row(row)).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}
