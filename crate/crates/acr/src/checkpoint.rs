//! Binary checkpoint of the online and target networks, plus a JSON
//! sidecar with the trainer counters.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "ACRCKPT\0"
//! version u32
//! count   u32      number of networks
//! per network:
//!   name    u16 length + UTF-8 bytes
//!   context u32
//!   layers  u32
//!   per layer: inputs u32, outputs u32, activation u8
//!   per layer: weights (outputs x inputs, row-major) then bias, f64 LE
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use acr_core::training::TrainerNetworks;
use acr_core::{Activation, ActorNetworks, DenseLayer, Network, Scheme};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::HarnessError;

pub const MAGIC: &[u8; 8] = b"ACRCKPT\0";
pub const VERSION: u32 = 1;

const NAMES: [&str; 6] = [
    "actor.commnet",
    "actor.dnn",
    "target_actor.commnet",
    "target_actor.dnn",
    "critic",
    "target_critic",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("unexpected network {found:?} (expected {expected:?})")]
    UnexpectedNetwork { expected: String, found: String },
    #[error("unknown activation code {0}")]
    UnknownActivation(u8),
    #[error("invalid network {name}: {reason}")]
    InvalidNetwork { name: String, reason: String },
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("dimension fits in u32").to_le_bytes());
}

fn encode_network(out: &mut Vec<u8>, name: &str, net: &Network) {
    put_u16(out, name.len() as u16);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, net.context());
    put_u32(out, net.layers().len());
    for layer in net.layers() {
        put_u32(out, layer.inputs);
        put_u32(out, layer.outputs);
        out.push(layer.activation.code());
    }
    for layer in net.layers() {
        for v in layer.weights.iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn encode(nets: &TrainerNetworks) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut out, NAMES.len());
    let ordered = [
        &nets.actors.commnet,
        &nets.actors.dnn,
        &nets.target_actors.commnet,
        &nets.target_actors.dnn,
        &nets.critic,
        &nets.target_critic,
    ];
    for (name, net) in NAMES.iter().zip(ordered) {
        encode_network(&mut out, name, net);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let len = n.checked_mul(8).ok_or(CheckpointError::Truncated)?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

fn decode_network(r: &mut Reader<'_>, expected: &str) -> Result<Network, CheckpointError> {
    let len = r.u16()? as usize;
    let name = String::from_utf8_lossy(r.take(len)?).into_owned();
    if name != expected {
        return Err(CheckpointError::UnexpectedNetwork {
            expected: expected.into(),
            found: name,
        });
    }
    let context = r.u32()? as usize;
    let count = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let inputs = r.u32()? as usize;
        let outputs = r.u32()? as usize;
        let code = r.take(1)?[0];
        let activation = Activation::from_code(code).ok_or(CheckpointError::UnknownActivation(code))?;
        shapes.push((inputs, outputs, activation));
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for (inputs, outputs, activation) in shapes {
        let weights = r.f64s(inputs.checked_mul(outputs).ok_or(CheckpointError::Truncated)?)?;
        let bias = r.f64s(outputs)?;
        layers.push(DenseLayer {
            inputs,
            outputs,
            activation,
            weights,
            bias,
        });
    }
    Network::new(layers, context).map_err(|e| CheckpointError::InvalidNetwork {
        name: expected.into(),
        reason: e.to_string(),
    })
}

pub fn decode(bytes: &[u8]) -> Result<TrainerNetworks, CheckpointError> {
    let mut r = Reader { bytes };
    if r.take(MAGIC.len()).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    if count != NAMES.len() {
        return Err(CheckpointError::InvalidNetwork {
            name: "checkpoint".into(),
            reason: format!("expected {} networks, found {count}", NAMES.len()),
        });
    }
    let mut nets = Vec::with_capacity(NAMES.len());
    for name in NAMES {
        nets.push(decode_network(&mut r, name)?);
    }
    if !r.bytes.is_empty() {
        return Err(CheckpointError::TrailingBytes(r.bytes.len()));
    }
    let mut it = nets.into_iter();
    let mut next = || it.next().expect("six networks");
    Ok(TrainerNetworks {
        actors: ActorNetworks {
            commnet: next(),
            dnn: next(),
        },
        target_actors: ActorNetworks {
            commnet: next(),
            dnn: next(),
        },
        critic: next(),
        target_critic: next(),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Trainer counters saved next to the checkpoint. Optimizer moments, random
/// streams and the replay buffer are not saved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSidecar {
    pub format_version: u32,
    pub scheme: Scheme,
    pub seed: u64,
    pub update_count: u64,
    pub epsilon: f64,
    pub observation_len: usize,
    pub agents: usize,
    pub checkpoint_sha256: String,
}

/// Path of the sidecar for a checkpoint: `trainer.json` in the same
/// directory.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_file_name("trainer.json")
}

pub fn save(path: &Path, nets: &TrainerNetworks, sidecar: &TrainerSidecar) -> Result<(), HarnessError> {
    fs::write(path, encode(nets)).map_err(|e| HarnessError::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar)?;
    fs::write(&side, json + "\n").map_err(|e| HarnessError::io(side, e))
}

pub fn load_networks(path: &Path) -> Result<(TrainerNetworks, String), HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok((decode(&bytes)?, sha256_hex(&bytes)))
}

pub fn load_sidecar(checkpoint: &Path) -> Result<Option<TrainerSidecar>, HarnessError> {
    let side = sidecar_path(checkpoint);
    match fs::read_to_string(&side) {
        Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(HarnessError::io(side, e)),
    }
}

/// Fail unless the actor networks accept the scenario's observations.
pub fn check_actor_width(actors: &ActorNetworks, observation_len: usize) -> Result<(), HarnessError> {
    for (name, net) in [("CommNet", &actors.commnet), ("DNN", &actors.dnn)] {
        if net.input_dim() != observation_len {
            return Err(HarnessError::CheckpointMismatch(format!(
                "{name} input width {} but the scenario observes {observation_len}",
                net.input_dim()
            )));
        }
        if net.output_dim() != acr_core::Action::COUNT {
            return Err(HarnessError::CheckpointMismatch(format!(
                "{name} output width is not the action count"
            )));
        }
    }
    Ok(())
}

/// [`check_actor_width`] for every network in a checkpoint.
pub fn check_compatible(nets: &TrainerNetworks, observation_len: usize) -> Result<(), HarnessError> {
    check_actor_width(&nets.actors, observation_len)?;
    check_actor_width(&nets.target_actors, observation_len)?;
    for net in [&nets.critic, &nets.target_critic] {
        if net.input_dim() != observation_len {
            return Err(HarnessError::CheckpointMismatch(format!(
                "critic input width {} but the scenario observes {observation_len}",
                net.input_dim()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use acr_core::{ScenarioConfig, Trainer, TrainerConfig};

    fn networks(seed: u64) -> TrainerNetworks {
        let scenario = ScenarioConfig {
            agents: 2,
            users: 3,
            non_agents: 1,
            ..ScenarioConfig::default()
        };
        Trainer::new(&scenario, Scheme::Proposed, TrainerConfig::default(), seed)
            .unwrap()
            .networks()
    }

    #[test]
    fn exact_round_trip() {
        let nets = networks(1);
        let bytes = encode(&nets);
        assert_eq!(decode(&bytes).unwrap(), nets);
        assert_eq!(encode(&decode(&bytes).unwrap()), bytes);
        assert_ne!(sha256_hex(&bytes), sha256_hex(&encode(&networks(2))));
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = encode(&networks(3));
        assert_eq!(decode(b"nope").unwrap_err(), CheckpointError::BadMagic);
        let mut v = bytes.clone();
        v[8] = 9;
        assert_eq!(decode(&v).unwrap_err(), CheckpointError::UnsupportedVersion(9));
        assert_eq!(decode(&bytes[..bytes.len() - 3]).unwrap_err(), CheckpointError::Truncated);
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(decode(&long).unwrap_err(), CheckpointError::TrailingBytes(1));
        let mut renamed = bytes;
        renamed[18] = b'X';
        assert!(matches!(decode(&renamed).unwrap_err(), CheckpointError::UnexpectedNetwork { .. }));
    }

    #[test]
    fn compatibility_check() {
        let nets = networks(4);
        let width = nets.actors.dnn.input_dim();
        assert!(check_compatible(&nets, width).is_ok());
        assert!(matches!(
            check_compatible(&nets, width + 3),
            Err(HarnessError::CheckpointMismatch(_))
        ));
    }
}
