//! Versioned JSON layout for models.
//!
//! Loading re-runs full model validation, so a model parsed from disk is as
//! trustworthy as one built in code. f64 values roundtrip exactly through
//! the JSON writer (shortest-representation float formatting).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{InfoChannel, InformedPomdp, ModelError, ObsChannel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format version {got} (this build reads {MODEL_FORMAT_VERSION})")]
    Version { got: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    num_states: usize,
    num_actions: usize,
    /// `[s][a][s']` row-major.
    transition: Vec<f64>,
    /// `[s][a]` row-major.
    reward: Vec<f64>,
    initial_dist: Vec<f64>,
    discount: f64,
    info_channel: InfoChannel,
    obs_channel: ObsChannel,
    terminal: Vec<bool>,
}

pub fn model_to_json(pomdp: &InformedPomdp) -> String {
    let doc = ModelDoc {
        version: MODEL_FORMAT_VERSION,
        num_states: pomdp.num_states(),
        num_actions: pomdp.num_actions(),
        transition: pomdp.transition_table().to_vec(),
        reward: pomdp.reward_table().to_vec(),
        initial_dist: pomdp.initial_dist().to_vec(),
        discount: pomdp.discount(),
        info_channel: pomdp.info_channel().clone(),
        obs_channel: pomdp.obs_channel().clone(),
        terminal: pomdp.terminal_flags().to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("model document serialises")
}

pub fn model_from_json(text: &str) -> Result<InformedPomdp, DocumentError> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(DocumentError::Version { got: doc.version });
    }
    Ok(InformedPomdp::new(
        doc.num_states,
        doc.num_actions,
        doc.transition,
        doc.reward,
        doc.initial_dist,
        doc.discount,
        doc.info_channel,
        doc.obs_channel,
        doc.terminal,
    )?)
}
