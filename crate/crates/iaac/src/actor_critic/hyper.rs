use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::EnvDims;
use crate::nn::{CellKind, CheckpointError, EncoderSpec, NetSpec};

/// What the critic sees. The actor always sees observations and past
/// actions only, whatever the critic's wiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticVariant {
    /// Same inputs as the actor.
    History,
    /// Ground state only, no recurrence.
    State,
    /// History plus ground state.
    HistoryState,
    /// History plus the privileged signal.
    HistoryInformation,
}

impl CriticVariant {
    pub const ALL: [CriticVariant; 4] = [
        CriticVariant::History,
        CriticVariant::State,
        CriticVariant::HistoryState,
        CriticVariant::HistoryInformation,
    ];

    pub fn uses_encoder(self) -> bool {
        !matches!(self, CriticVariant::State)
    }

    /// Which trajectory column feeds the critic's side input.
    pub fn side_input(self) -> Option<SideInput> {
        match self {
            CriticVariant::History => None,
            CriticVariant::State | CriticVariant::HistoryState => Some(SideInput::State),
            CriticVariant::HistoryInformation => Some(SideInput::Information),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CriticVariant::History => "history",
            CriticVariant::State => "state",
            CriticVariant::HistoryState => "history-state",
            CriticVariant::HistoryInformation => "history-information",
        }
    }
}

impl fmt::Display for CriticVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriticVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CriticVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown critic variant {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideInput {
    State,
    Information,
}

impl SideInput {
    pub fn column_name(self) -> &'static str {
        match self {
            SideInput::State => "state",
            SideInput::Information => "information",
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("the {variant} critic needs the {column} column, which is empty here")]
    MissingInput {
        variant: CriticVariant,
        column: &'static str,
    },
    #[error("episode carries no post-episode point to bootstrap from")]
    MissingFinalPoint,
    #[error("batch contains an empty episode")]
    EmptyEpisode,
    #[error("bad hyperparameter: {0}")]
    BadHyper(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Training knobs. Defaults follow the benchmark setup: discount 0.99,
/// two episodes per update, 100-step episode cap, target refresh every
/// 10k steps, entropy weight decaying linearly to a tenth over 2M steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub entropy_weight_init: f64,
    pub entropy_decay_horizon: u64,
    pub entropy_final_fraction: f64,
    pub discount: f64,
    pub episodes_per_update: usize,
    pub target_sync_period: u64,
    pub episode_cap: usize,
    /// Weight step t of the policy-gradient sum by discount^t; switching
    /// this off uses the common undiscounted-sum variant.
    pub discounted_gradient: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            entropy_weight_init: 0.1,
            entropy_decay_horizon: 2_000_000,
            entropy_final_fraction: 0.1,
            discount: 0.99,
            episodes_per_update: 2,
            target_sync_period: 10_000,
            episode_cap: 100,
            discounted_gradient: true,
        }
    }
}

impl HyperParams {
    pub fn heaven_hell() -> Self {
        HyperParams::default()
    }

    pub fn shopping() -> Self {
        HyperParams {
            critic_lr: 3e-4,
            entropy_weight_init: 3.0,
            ..HyperParams::default()
        }
    }

    pub fn car_flag() -> Self {
        HyperParams {
            entropy_weight_init: 0.03,
            ..HyperParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::BadHyper(msg.to_string()));
        if !(self.actor_lr > 0.0 && self.actor_lr.is_finite()) {
            return bad("actor_lr must be positive");
        }
        if !(self.critic_lr > 0.0 && self.critic_lr.is_finite()) {
            return bad("critic_lr must be positive");
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1)");
        }
        if self.entropy_weight_init < 0.0 || !self.entropy_weight_init.is_finite() {
            return bad("entropy_weight_init must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.entropy_final_fraction) {
            return bad("entropy_final_fraction must lie in [0, 1]");
        }
        if self.entropy_decay_horizon == 0 {
            return bad("entropy_decay_horizon must be positive");
        }
        if self.episodes_per_update == 0 {
            return bad("episodes_per_update must be positive");
        }
        if self.target_sync_period == 0 {
            return bad("target_sync_period must be positive");
        }
        if self.episode_cap == 0 {
            return bad("episode_cap must be positive");
        }
        Ok(())
    }

    /// Entropy weight after `env_steps` of training: linear from the
    /// initial value down to `initial * final_fraction` at the decay
    /// horizon, constant afterwards.
    pub fn entropy_weight_at(&self, env_steps: u64) -> f64 {
        let h = self.entropy_decay_horizon as f64;
        let frac = (env_steps as f64).min(h) / h;
        self.entropy_weight_init * (1.0 - (1.0 - self.entropy_final_fraction) * frac)
    }
}

/// One-step TD error; pass `v_next = 0` at terminal steps.
pub fn td_error(r: f64, v_next: f64, v_cur: f64, discount: f64) -> f64 {
    r + discount * v_next - v_cur
}

/// Network shapes shared by actor and critics. The full benchmark setup
/// uses a 128-wide GRU with 512/256 heads; the default here is desk-sized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    pub cell: CellKind,
    pub encoder_width: usize,
    pub obs_embed: Option<usize>,
    pub action_embed: Option<usize>,
    pub extra_embed: Option<usize>,
    pub head: Vec<usize>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            cell: CellKind::Gru,
            encoder_width: 32,
            obs_embed: None,
            action_embed: None,
            extra_embed: None,
            head: vec![64],
        }
    }
}

impl ArchConfig {
    fn encoder(&self) -> Option<EncoderSpec> {
        Some(EncoderSpec {
            kind: self.cell,
            width: self.encoder_width,
        })
    }

    pub fn actor_spec(&self) -> NetSpec {
        NetSpec {
            encoder: self.encoder(),
            obs_embed: self.obs_embed,
            action_embed: self.action_embed,
            extra_embed: None,
            head: self.head.clone(),
        }
    }

    pub fn critic_spec(&self, variant: CriticVariant) -> NetSpec {
        let has_side = variant.side_input().is_some();
        NetSpec {
            encoder: if variant.uses_encoder() {
                self.encoder()
            } else {
                None
            },
            obs_embed: if variant.uses_encoder() {
                self.obs_embed
            } else {
                None
            },
            action_embed: if variant.uses_encoder() {
                self.action_embed
            } else {
                None
            },
            extra_embed: if has_side { self.extra_embed } else { None },
            head: self.head.clone(),
        }
    }
}

/// Width of the critic's side input under `variant`, given env dimensions.
pub fn side_input_dim(variant: CriticVariant, dims: &EnvDims) -> Option<usize> {
    variant.side_input().map(|s| match s {
        SideInput::State => dims.state,
        SideInput::Information => dims.info,
    })
}
