//! Experiment runner around the `iaac` library.
//!
//! Every subcommand reads a JSON config (with `--set` dotted-path
//! overrides), writes its outputs under the config's `out_dir`, and
//! finishes by writing `manifest.json` with a SHA-256 of every output
//! file. The manifest is written last, so its presence marks a run that
//! completed; `verify` re-hashes a directory against it.
//!
//! Runs are deterministic byte-for-byte given the same config, including
//! under `IAAC_WORKERS` parallelism: workers only decide when a file is
//! produced, never what lands in it.

pub mod config;
pub mod error;
pub mod evaluate;
pub mod gen;
pub mod hscic_cmd;
pub mod manifest;
pub mod plot;
pub mod pool;
pub mod rpe_cmd;
pub mod train;
