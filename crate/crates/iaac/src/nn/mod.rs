//! Small dense/recurrent networks with exact reverse-mode gradients.
//!
//! Everything is f64 and hand-differentiated; `gradcheck` verifies the
//! backward passes against central differences. Parameters live in a
//! [`ParamStore`] so optimizers, checkpoints, and target-network copies
//! work on flat named arrays rather than on layer objects.

mod categorical;
mod checkpoint;
mod gradcheck;
mod layers;
mod net;
mod recurrent;
mod store;

pub use categorical::Categorical;
pub use checkpoint::{CheckpointError, NetCheckpoint, SavedArray, NET_FORMAT_VERSION};
pub use gradcheck::max_rel_gradient_error;
pub use layers::{relu, relu_backward, Linear};
pub use net::{EncoderSpec, EpisodeInput, EpisodeTrace, IoDims, NetSpec, SequenceNet, StepState};
pub use recurrent::{CellKind, Recurrent};
pub use store::{Init, ParamId, ParamStore};
