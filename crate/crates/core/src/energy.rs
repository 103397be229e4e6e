//! Synaptic-operation cost of a decision for directly trained and converted nets.
//!
//! A hard-reset LIF update costs four operations per neuron per timestep and
//! an IF update costs one, so a decision costs `4 * N_D * T_D` against
//! `N_C * T_C`, where `N` counts spiking neurons and `T` is the window.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::net::SpikingNetwork;

pub const LIF_OPS_PER_STEP: u64 = 4;
pub const IF_OPS_PER_STEP: u64 = 1;
pub const DEFAULT_WINDOW_DIRECT: usize = 64;
pub const DEFAULT_WINDOW_CONVERTED: usize = 500;

/// Mean hidden spikes per decision for two networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeMeasurement {
    pub direct: f64,
    pub converted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub neurons_direct: usize,
    pub neurons_converted: usize,
    pub window_direct: usize,
    pub window_converted: usize,
    pub cost_direct: u64,
    pub cost_converted: u64,
    /// `cost_direct / cost_converted`.
    pub cost_ratio: f64,
    pub spikes: Option<SpikeMeasurement>,
    /// `spikes.direct / spikes.converted`.
    pub spike_ratio: Option<f64>,
}

/// `(4 N_D T_D, N_C T_C)`.
pub fn operation_costs(neurons_direct: usize, window_direct: usize, neurons_converted: usize, window_converted: usize) -> (u64, u64) {
    (
        LIF_OPS_PER_STEP * neurons_direct as u64 * window_direct as u64,
        IF_OPS_PER_STEP * neurons_converted as u64 * window_converted as u64,
    )
}

/// Costs from neuron counts; windows default to 64 and 500.
pub fn energy_from_counts(
    neurons_direct: usize,
    neurons_converted: usize,
    window_direct: Option<usize>,
    window_converted: Option<usize>,
) -> EnergyReport {
    let td = window_direct.unwrap_or(DEFAULT_WINDOW_DIRECT);
    let tc = window_converted.unwrap_or(DEFAULT_WINDOW_CONVERTED);
    let (cd, cc) = operation_costs(neurons_direct, td, neurons_converted, tc);
    EnergyReport {
        neurons_direct,
        neurons_converted,
        window_direct: td,
        window_converted: tc,
        cost_direct: cd,
        cost_converted: cc,
        cost_ratio: cd as f64 / cc as f64,
        spikes: None,
        spike_ratio: None,
    }
}

/// Costs of two networks at their own windows, with optional spike measurements.
pub fn energy_report(net_d: &SpikingNetwork, net_c: &SpikingNetwork, spikes: Option<SpikeMeasurement>) -> EnergyReport {
    let mut r = energy_from_counts(
        net_d.neuron_count(),
        net_c.neuron_count(),
        Some(net_d.window),
        Some(net_c.window),
    );
    r.spike_ratio = spikes.map(|s| s.direct / s.converted);
    r.spikes = spikes;
    r
}

/// Mean hidden spikes per decision of `net` over `states`.
pub fn mean_spikes_per_decision(net: &SpikingNetwork, states: &[Vec<f64>]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::contract("need at least one state to measure spikes"));
    }
    let mut total = 0u64;
    for s in states {
        total += net.decide(s)?.spikes;
    }
    Ok(total as f64 / states.len() as f64)
}
