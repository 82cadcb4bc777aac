use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::net::{IoDims, NetSpec, SequenceNet};
use super::store::{AdamSnapshot, ParamStore};
use crate::rng::stream;

pub const NET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("unsupported net format version {0}")]
    Version(u32),
    #[error("array {name}: {msg}")]
    Array { name: String, msg: String },
    #[error("{0}")]
    Layout(String),
}

/// One parameter matrix, values base64-encoded as little-endian f64 so the
/// JSON roundtrip is bit-exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedArray {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: String,
}

/// Adam moment buffers, flat over the store in array order, base64-encoded
/// like [`SavedArray`] data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedAdam {
    pub t: u64,
    pub m: String,
    pub v: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetCheckpoint {
    pub version: u32,
    pub spec: NetSpec,
    pub dims: IoDims,
    pub arrays: Vec<SavedArray>,
    /// Present only for nets trained with Adam.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam: Option<SavedAdam>,
}

fn encode_f64s(xs: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode_f64s(s: &str, expect: usize, name: &str) -> Result<Vec<f64>, CheckpointError> {
    let bytes = B64.decode(s).map_err(|e| CheckpointError::Array {
        name: name.to_string(),
        msg: e.to_string(),
    })?;
    if bytes.len() != expect * 8 {
        return Err(CheckpointError::Array {
            name: name.to_string(),
            msg: format!("expected {} bytes, got {}", expect * 8, bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn arrays_from_store(store: &ParamStore) -> Vec<SavedArray> {
    store
        .export()
        .into_iter()
        .map(|(name, rows, cols, data)| SavedArray {
            data: encode_f64s(&data),
            name,
            rows,
            cols,
        })
        .collect()
}

impl NetCheckpoint {
    pub fn capture(net: &SequenceNet) -> Self {
        NetCheckpoint {
            version: NET_FORMAT_VERSION,
            spec: net.spec().clone(),
            dims: net.dims(),
            arrays: arrays_from_store(&net.store),
            adam: net.store.adam_snapshot().map(|s| SavedAdam {
                t: s.t,
                m: encode_f64s(&s.m),
                v: encode_f64s(&s.v),
            }),
        }
    }

    /// Rebuilds the net and overwrites its parameters with the saved ones.
    pub fn restore(&self) -> Result<SequenceNet, CheckpointError> {
        if self.version != NET_FORMAT_VERSION {
            return Err(CheckpointError::Version(self.version));
        }
        // The init RNG is immediately overwritten; any seed works.
        let mut net = SequenceNet::new(&self.spec, self.dims, &mut stream(0, "restore"));
        let mut decoded = Vec::with_capacity(self.arrays.len());
        for a in &self.arrays {
            let data = decode_f64s(&a.data, a.rows * a.cols, &a.name)?;
            decoded.push((a.name.clone(), a.rows, a.cols, data));
        }
        net.store.import(&decoded).map_err(CheckpointError::Layout)?;
        if let Some(adam) = &self.adam {
            let n = net.store.param_count();
            let snap = AdamSnapshot {
                t: adam.t,
                m: decode_f64s(&adam.m, n, "adam.m")?,
                v: decode_f64s(&adam.v, n, "adam.v")?,
            };
            net.store
                .restore_adam(&snap)
                .map_err(CheckpointError::Layout)?;
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::net::{EncoderSpec, EpisodeInput};
    use crate::nn::recurrent::CellKind;
    use rand::Rng;

    #[test]
    fn json_roundtrip_reproduces_outputs_bit_for_bit() {
        let spec = NetSpec {
            encoder: Some(EncoderSpec {
                kind: CellKind::Gru,
                width: 4,
            }),
            obs_embed: Some(3),
            action_embed: None,
            extra_embed: None,
            head: vec![5],
        };
        let dims = IoDims {
            obs: 3,
            num_actions: 2,
            extra: None,
            out: 2,
        };
        let net = SequenceNet::new(&spec, dims, &mut stream(11, "ckpt"));

        let json = serde_json::to_string(&NetCheckpoint::capture(&net)).unwrap();
        let restored: NetCheckpoint = serde_json::from_str(&json).unwrap();
        let net2 = restored.restore().unwrap();

        let mut rng = stream(12, "ckpt-in");
        let input = EpisodeInput {
            obs: (0..5)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            prev_actions: vec![None, Some(0), Some(1), Some(0), Some(1)],
            extra: None,
        };
        let a = net.forward(&input).outputs;
        let b = net2.forward(&input).outputs;
        for (ya, yb) in a.iter().flatten().zip(b.iter().flatten()) {
            assert_eq!(ya.to_bits(), yb.to_bits());
        }
    }

    #[test]
    fn version_and_layout_are_checked() {
        let spec = NetSpec {
            encoder: None,
            obs_embed: None,
            action_embed: None,
            extra_embed: None,
            head: vec![],
        };
        let dims = IoDims {
            obs: 0,
            num_actions: 1,
            extra: Some(2),
            out: 1,
        };
        let net = SequenceNet::new(&spec, dims, &mut stream(13, "ckpt"));
        let mut ckpt = NetCheckpoint::capture(&net);
        ckpt.version = 99;
        assert!(matches!(
            ckpt.restore(),
            Err(CheckpointError::Version(99))
        ));

        let mut bad = NetCheckpoint::capture(&net);
        bad.arrays[0].rows += 1;
        assert!(bad.restore().is_err());
    }
}
