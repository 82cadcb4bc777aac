//! `gen`: write seeded synthetic instance documents.
//!
//! Instance `k` shares its dynamics (transitions, rewards, state
//! embeddings, observation map) across the whole noise ladder: generation
//! draws from a k-indexed stream and only the stored channel noise differs
//! between ladder entries. Row comparisons across noise levels therefore
//! compare the same underlying problem.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use iaac::pomdp::model_to_json;
use iaac::rng::indexed_stream;
use iaac::synthetic::{generate, SyntheticConfig};

use crate::error::{io_err, CliError};
use crate::manifest::{config_hash, write_manifest, RunManifest};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub instances: usize,
    /// Information channel noise levels; every instance is written once per
    /// entry.
    pub info_noise_ladder: Vec<f64>,
    pub base: SyntheticConfig,
    pub seed: u64,
    pub out_dir: String,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            instances: 12,
            info_noise_ladder: vec![0.0, 0.1, 0.5, 0.9],
            base: SyntheticConfig::default(),
            seed: 0,
            out_dir: "out/instances".into(),
        }
    }
}

/// `inst03-noise0.5.json` style names; lexicographic order groups ladder
/// entries of one instance together.
pub fn instance_file_name(index: usize, noise: f64) -> String {
    format!("inst{index:02}-noise{noise}.json")
}

pub fn run(config: &GenConfig) -> Result<RunManifest, CliError> {
    if config.info_noise_ladder.is_empty() {
        return Err(CliError::Config("info_noise_ladder must not be empty".into()));
    }
    if config
        .info_noise_ladder
        .iter()
        .any(|&s| !(s >= 0.0) || !s.is_finite())
    {
        return Err(CliError::Config(
            "info_noise_ladder entries must be nonnegative".into(),
        ));
    }
    let dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let mut outputs = Vec::new();
    for k in 0..config.instances {
        for &noise in &config.info_noise_ladder {
            // Same stream for every ladder entry of instance k: the noise
            // level changes only the stored channel parameter.
            let mut rng = indexed_stream(config.seed, "gen/instance", k as u64);
            let cfg = SyntheticConfig {
                info_noise: noise,
                ..config.base.clone()
            };
            let (model, _) = generate(&cfg, &mut rng);
            let rel = PathBuf::from(instance_file_name(k, noise));
            let full = dir.join(&rel);
            fs::write(&full, model_to_json(&model)).map_err(|e| io_err(&full, e))?;
            outputs.push(rel);
        }
    }
    write_manifest(&dir, "gen", config_hash(config)?, config.seed, &outputs)
}
