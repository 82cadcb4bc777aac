//! `evaluate`: roll a trained actor greedily-stochastically through an
//! environment and summarize the returns.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use iaac::actor_critic::{evaluate_policy, Trainer};
use iaac::rng::stream;

use crate::config::{build_env, EnvSpec};
use crate::error::{io_err, CliError};
use crate::manifest::{config_hash, write_manifest, RunManifest};
use crate::train::read_checkpoint;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub env: EnvSpec,
    pub state_as_info: bool,
    pub checkpoint: String,
    pub episodes: usize,
    pub seed: u64,
    pub out_dir: String,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            env: EnvSpec::HeavenHell { max_steps: 100 },
            state_as_info: false,
            checkpoint: "out/train/history-information/seed0.ckpt.json".into(),
            episodes: 100,
            seed: 0,
            out_dir: "out/evaluate".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    pub env: String,
    pub variant: String,
    pub episodes: usize,
    pub seed: u64,
    pub mean_return: f64,
    pub std_return: f64,
    pub min_return: f64,
    pub max_return: f64,
    pub returns: Vec<f64>,
}

pub fn run(config: &EvaluateConfig) -> Result<RunManifest, CliError> {
    if config.episodes == 0 {
        return Err(CliError::Config("episodes must be positive".into()));
    }
    let mut env = build_env(&config.env, config.state_as_info)?;
    let ck = read_checkpoint(std::path::Path::new(&config.checkpoint))?;
    let trainer =
        Trainer::restore(&ck).map_err(|e| CliError::Runtime(e.to_string()))?;
    let cap = ck.hyper.episode_cap.min(env.max_steps());

    let mut rng = stream(config.seed, "evaluate/rollouts");
    let trajectories =
        evaluate_policy(env.as_mut(), &trainer.actor, config.episodes, cap, &mut rng);
    let returns: Vec<f64> = trajectories.iter().map(|t| t.total_reward()).collect();

    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let report = Evaluation {
        env: config.env.id(),
        variant: ck.variant.name().to_string(),
        episodes: config.episodes,
        seed: config.seed,
        mean_return: mean,
        std_return: var.sqrt(),
        min_return: returns.iter().copied().fold(f64::INFINITY, f64::min),
        max_return: returns.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        returns,
    };

    let dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let out = dir.join("evaluation.json");
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&out, text).map_err(|e| io_err(&out, e))?;

    write_manifest(
        &dir,
        "evaluate",
        config_hash(config)?,
        config.seed,
        &[PathBuf::from("evaluation.json")],
    )
}
