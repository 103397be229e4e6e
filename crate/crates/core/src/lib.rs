//! Deep spiking Q-networks from scratch.
//!
//! LIF and IF neurons simulated in discrete time, spiking Q-networks with a
//! mean-rate readout, surrogate-gradient backpropagation through time, deep
//! Q-learning on small native environments, and a ReLU-to-IF conversion
//! baseline with fidelity and energy accounting.
//!
//! ```
//! use dsqn::neuron::{simulate_constant_input, NeuronConfig};
//!
//! // constant input 1.5 drives a default LIF neuron into a period-two cycle
//! let (rate, _) = simulate_constant_input(1.5, &NeuronConfig::default(), 64).unwrap();
//! assert_eq!(rate, 0.5);
//! ```
//!
//! The `examples/` directory has one runnable program per capability; the
//! `dsqn` binary exposes the same operations as subcommands.

pub mod commands;
pub mod convert;
pub mod energy;
pub mod envs;
pub mod error;
pub mod grad;
pub mod net;
pub mod neuron;
pub mod surrogate;
pub mod trainer;

pub use error::{Error, Result};
pub use grad::{backward, closed_form_grad, finite_diff_check, DepthRule, GradientSet, GradientTape};
pub use net::{Checkpoint, ForwardMode, ForwardRecord, LayerSpec, SpikingNetwork};
pub use neuron::{NeuronConfig, NeuronModel, ResetMode};
pub use surrogate::{SurrogateConfig, SurrogateFamily};
