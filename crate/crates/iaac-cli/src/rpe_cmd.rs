//! `rpe-test`: compare two trained critics' return predictions on fresh
//! rollouts and bound the informed one's advantage from below.
//!
//! The behaviour policy is the symmetric checkpoint's actor, so both
//! critics are scored on the same trajectory distribution. Outputs:
//! `rows.csv` (one bound per episode and delta, plus pooled rows with an
//! empty episode column), `summary.csv` (per-delta aggregates), and
//! `report.json` (everything, machine-readable).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use iaac::actor_critic::Trainer;
use iaac::rng::stream;
use iaac::rpe::{evaluate_signal, CriticBridge, EpsilonRow, RpeConfig, RpeReport, Verdict};

use crate::config::{build_env, EnvSpec};
use crate::error::{io_err, CliError};
use crate::manifest::{config_hash, write_manifest, RunManifest};
use crate::train::read_checkpoint;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpeCmdConfig {
    pub env: EnvSpec,
    pub state_as_info: bool,
    /// Checkpoint whose critic plays the uninformed side; its actor
    /// generates the evaluation episodes.
    pub symmetric_checkpoint: String,
    pub informed_checkpoint: String,
    pub episodes: usize,
    /// Episode cap during evaluation rollouts.
    pub horizon: usize,
    pub deltas: Vec<f64>,
    pub seed: u64,
    /// Exit with a check failure unless every pooled verdict rejects.
    pub fail_on_negative: bool,
    pub out_dir: String,
}

impl Default for RpeCmdConfig {
    fn default() -> Self {
        RpeCmdConfig {
            env: EnvSpec::HeavenHell { max_steps: 100 },
            state_as_info: false,
            symmetric_checkpoint: "out/train/history/seed0.ckpt.json".into(),
            informed_checkpoint: "out/train/history-information/seed0.ckpt.json".into(),
            episodes: 200,
            horizon: 50,
            deltas: vec![0.01, 0.05, 0.1],
            seed: 0,
            fail_on_negative: false,
            out_dir: "out/rpe".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpeRunReport {
    pub env: String,
    pub symmetric_variant: String,
    pub informed_variant: String,
    pub episodes: usize,
    pub horizon: usize,
    pub deltas: Vec<f64>,
    pub discount: f64,
    pub seed: u64,
    pub report: RpeReport,
}

pub fn run(config: &RpeCmdConfig) -> Result<RunManifest, CliError> {
    if config.episodes == 0 || config.horizon == 0 {
        return Err(CliError::Config("episodes and horizon must be positive".into()));
    }
    if config.deltas.is_empty() || config.deltas.iter().any(|d| !(0.0 < *d && *d < 1.0)) {
        return Err(CliError::Config(
            "deltas must be a nonempty list of values in (0, 1)".into(),
        ));
    }
    let sym_ck = read_checkpoint(Path::new(&config.symmetric_checkpoint))?;
    let inf_ck = read_checkpoint(Path::new(&config.informed_checkpoint))?;
    if sym_ck.hyper.discount != inf_ck.hyper.discount {
        return Err(CliError::Config(format!(
            "checkpoints trained with different discounts ({} vs {})",
            sym_ck.hyper.discount, inf_ck.hyper.discount
        )));
    }
    let discount = sym_ck.hyper.discount;
    let sym = Trainer::restore(&sym_ck).map_err(|e| CliError::Runtime(e.to_string()))?;
    let inf = Trainer::restore(&inf_ck).map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut env = build_env(&config.env, config.state_as_info)?;
    let rpe_cfg = RpeConfig {
        episodes: config.episodes,
        horizon: config.horizon,
        deltas: config.deltas.clone(),
        discount,
    };
    let sym_bridge = CriticBridge {
        critic: &sym.critic,
        variant: sym_ck.variant,
        discount,
    };
    let inf_bridge = CriticBridge {
        critic: &inf.critic,
        variant: inf_ck.variant,
        discount,
    };
    let mut rng = stream(config.seed, "rpe/rollouts");
    let report = evaluate_signal(
        env.as_mut(),
        &sym.actor,
        &sym_bridge,
        &inf_bridge,
        &rpe_cfg,
        &mut rng,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    let dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let mut rows_csv = String::from("episode,delta,t,mean,variance,c,epsilon,verdict\n");
    for row in report.rows.iter().chain(report.pooled.iter()) {
        rows_csv.push_str(&format_row(row));
    }
    let rows_path = dir.join("rows.csv");
    fs::write(&rows_path, rows_csv).map_err(|e| io_err(&rows_path, e))?;

    let mut summary_csv = String::from(
        "delta,episodes,mean_epsilon,median_epsilon,reject_fraction,pooled_epsilon,pooled_verdict\n",
    );
    for (k, &delta) in report.deltas.iter().enumerate() {
        let eps = report.epsilons_at(delta);
        let mean = eps.iter().sum::<f64>() / eps.len() as f64;
        let median = median_of(&eps);
        let rejects = report
            .rows
            .iter()
            .filter(|r| r.delta == delta && r.verdict == Verdict::Reject)
            .count();
        let frac = rejects as f64 / report.episodes as f64;
        let pooled = &report.pooled[k];
        summary_csv.push_str(&format!(
            "{delta},{},{mean},{median},{frac},{},{}\n",
            report.episodes, pooled.epsilon, pooled.verdict
        ));
    }
    let summary_path = dir.join("summary.csv");
    fs::write(&summary_path, summary_csv).map_err(|e| io_err(&summary_path, e))?;

    let full = RpeRunReport {
        env: config.env.id(),
        symmetric_variant: sym_ck.variant.name().to_string(),
        informed_variant: inf_ck.variant.name().to_string(),
        episodes: config.episodes,
        horizon: config.horizon,
        deltas: config.deltas.clone(),
        discount,
        seed: config.seed,
        report: report.clone(),
    };
    let report_path = dir.join("report.json");
    let text =
        serde_json::to_string_pretty(&full).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&report_path, text).map_err(|e| io_err(&report_path, e))?;

    let manifest = write_manifest(
        &dir,
        "rpe-test",
        config_hash(config)?,
        config.seed,
        &[
            PathBuf::from("rows.csv"),
            PathBuf::from("summary.csv"),
            PathBuf::from("report.json"),
        ],
    )?;

    if config.fail_on_negative {
        let negative: Vec<String> = report
            .pooled
            .iter()
            .filter(|r| r.verdict != Verdict::Reject)
            .map(|r| format!("delta={}", r.delta))
            .collect();
        if !negative.is_empty() {
            return Err(CliError::Check(format!(
                "pooled bound not positive at {}",
                negative.join(", ")
            )));
        }
    }
    Ok(manifest)
}

fn format_row(row: &EpsilonRow) -> String {
    let episode = row
        .episode
        .map(|e| e.to_string())
        .unwrap_or_default();
    format!(
        "{episode},{},{},{},{},{},{},{}\n",
        row.delta, row.t, row.mean, row.variance, row.c, row.epsilon, row.verdict
    )
}

fn median_of(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
