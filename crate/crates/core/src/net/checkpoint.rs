//! Versioned JSON checkpoints.
//!
//! ```json
//! {
//!   "format": "dsqn-network",
//!   "version": 1,
//!   "kind": "spiking",
//!   "layers": [{"kind": {"type": "dense", "inputs": 25, "outputs": 64}, "spiking": true, "constant_input": false}, ...],
//!   "weights": [[...], ...],
//!   "neuron": {"model": "lif", "reset": "hard", "tau_m": 2.0, "v_th": 1.0, "v_r": 0.0},
//!   "surrogate": {"family": "arctan", "alpha": 2.0},
//!   "window": 64,
//!   "seed": 7
//! }
//! ```
//!
//! `kind: "relu"` documents carry `layers`, `weights`, `biases` and `seed`
//! instead of the neuron fields. Floats are written in shortest round-trip
//! form, so save/load is exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SpikingNetwork;
use crate::convert::ReluNetwork;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "dsqn-network";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checkpoint {
    Spiking(SpikingNetwork),
    Relu(ReluNetwork),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    #[serde(flatten)]
    network: Checkpoint,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            network: self.clone(),
        };
        Ok(serde_json::to_string(&env)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text)?;
        if env.format != CHECKPOINT_FORMAT {
            return Err(Error::contract(format!("unknown checkpoint format `{}`", env.format)));
        }
        if env.version != CHECKPOINT_VERSION {
            return Err(Error::contract(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                env.version
            )));
        }
        match &env.network {
            Checkpoint::Spiking(n) => n.validate()?,
            Checkpoint::Relu(n) => n.validate()?,
        }
        Ok(env.network)
    }

    pub fn into_spiking(self) -> Result<SpikingNetwork> {
        match self {
            Checkpoint::Spiking(n) => Ok(n),
            Checkpoint::Relu(_) => Err(Error::contract("expected a spiking network checkpoint")),
        }
    }

    pub fn into_relu(self) -> Result<ReluNetwork> {
        match self {
            Checkpoint::Relu(n) => Ok(n),
            Checkpoint::Spiking(_) => Err(Error::contract("expected a relu network checkpoint")),
        }
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    std::fs::write(path, checkpoint.to_json()?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::NeuronConfig;
    use crate::surrogate::SurrogateConfig;

    #[test]
    fn round_trip_is_exact() {
        let net = SpikingNetwork::dense(3, &[5], 2, NeuronConfig::default(), SurrogateConfig::default(), 16)
            .unwrap()
            .init_weights(9);
        let ck = Checkpoint::Spiking(net.clone());
        let text = ck.to_json().unwrap();
        assert!(text.contains("\"version\":1"));
        assert_eq!(Checkpoint::from_json(&text).unwrap().into_spiking().unwrap(), net);
    }

    #[test]
    fn rejects_other_versions() {
        let net = SpikingNetwork::dense(1, &[], 1, NeuronConfig::default(), SurrogateConfig::default(), 1).unwrap();
        let text = Checkpoint::Spiking(net).to_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(Checkpoint::from_json(&text).is_err());
    }
}
