//! Discrete-time LIF and IF neuron dynamics.
//!
//! One simulation step of a LIF layer is
//!
//! ```text
//! U[t] = V[t-1] + (I[t] - V[t-1] + v_r) / tau_m
//! S[t] = 1 if U[t] >= v_th else 0
//! V[t] = U[t] (1 - S[t]) + v_r S[t]        (hard reset)
//! V[t] = U[t] - v_th S[t]                  (soft reset)
//! ```
//!
//! and an IF layer replaces the first line with `U[t] = V[t-1] + I[t]`.
//! The step size is one tick, so the maximum firing rate is one spike per step.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronModel {
    Lif,
    If,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetMode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeuronConfig {
    pub model: NeuronModel,
    pub reset: ResetMode,
    /// Membrane time constant in steps. Ignored by IF neurons.
    pub tau_m: f64,
    pub v_th: f64,
    /// Reset and initial potential.
    pub v_r: f64,
}

impl Default for NeuronConfig {
    /// LIF with hard reset, `tau_m = 2`, `v_th = 1`, `v_r = 0`.
    fn default() -> Self {
        Self {
            model: NeuronModel::Lif,
            reset: ResetMode::Hard,
            tau_m: 2.0,
            v_th: 1.0,
            v_r: 0.0,
        }
    }
}

impl NeuronConfig {
    pub fn lif(reset: ResetMode, tau_m: f64, v_th: f64, v_r: f64) -> Self {
        Self {
            model: NeuronModel::Lif,
            reset,
            tau_m,
            v_th,
            v_r,
        }
    }

    pub fn integrate_and_fire(reset: ResetMode, v_th: f64, v_r: f64) -> Self {
        Self {
            model: NeuronModel::If,
            reset,
            tau_m: 1.0,
            v_th,
            v_r,
        }
    }

    /// Maximum firing rate in spikes per step.
    pub const fn r_max(&self) -> f64 {
        1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_th.is_finite() && self.v_th > 0.0) {
            return Err(Error::contract(format!("v_th must be positive, got {}", self.v_th)));
        }
        if !self.v_r.is_finite() {
            return Err(Error::contract("v_r must be finite"));
        }
        if self.model == NeuronModel::Lif && !(self.tau_m.is_finite() && self.tau_m >= 1.0) {
            return Err(Error::contract(format!("tau_m must be >= 1, got {}", self.tau_m)));
        }
        Ok(())
    }

    /// Potential update before the spike test.
    #[inline]
    pub(crate) fn charge(&self, v_prev: f64, input: f64) -> f64 {
        match self.model {
            NeuronModel::Lif => v_prev + (input - v_prev + self.v_r) / self.tau_m,
            NeuronModel::If => v_prev + input,
        }
    }

    /// Potential after the (possibly fractional, in smooth mode) spike `s`.
    #[inline]
    pub(crate) fn reset_potential(&self, u: f64, s: f64) -> f64 {
        match self.reset {
            ResetMode::Hard => u * (1.0 - s) + self.v_r * s,
            ResetMode::Soft => u - self.v_th * s,
        }
    }
}

/// Heaviside step with `heaviside(0) = 1`.
#[inline]
pub fn heaviside(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// State of one layer of neurons at one timestep.
///
/// `s` holds 0.0 or 1.0 per neuron. Networks run in smooth mode (used only
/// for gradient checking) store surrogate values in (0, 1) there instead.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    /// Pre-reset potential.
    pub u: Vec<f64>,
    /// Post-reset potential.
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub spike_count: Vec<u32>,
}

impl LayerState {
    /// Resting state: every potential at `cfg.v_r`, no spikes.
    pub fn new(width: usize, cfg: &NeuronConfig) -> Self {
        Self {
            u: vec![cfg.v_r; width],
            v: vec![cfg.v_r; width],
            s: vec![0.0; width],
            spike_count: vec![0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.v.len()
    }

    pub fn total_spikes(&self) -> u64 {
        self.spike_count.iter().map(|&c| u64::from(c)).sum()
    }

    /// Advances in place by one step with the Heaviside spike function.
    ///
    /// Does not validate; see [`lif_step`] / [`if_step`] for checked variants.
    pub(crate) fn advance(&mut self, input: &[f64], cfg: &NeuronConfig) {
        debug_assert_eq!(input.len(), self.width());
        for i in 0..input.len() {
            let u = cfg.charge(self.v[i], input[i]);
            let s = heaviside(u - cfg.v_th);
            self.u[i] = u;
            self.s[i] = s;
            self.v[i] = cfg.reset_potential(u, s);
            self.spike_count[i] += s as u32;
        }
    }

    /// Like [`advance`](Self::advance) but with a smooth spike function; spike
    /// counts are left untouched.
    pub(crate) fn advance_smooth(
        &mut self,
        input: &[f64],
        cfg: &NeuronConfig,
        spike: impl Fn(f64) -> f64,
    ) {
        for i in 0..input.len() {
            let u = cfg.charge(self.v[i], input[i]);
            let s = spike(u - cfg.v_th);
            self.u[i] = u;
            self.s[i] = s;
            self.v[i] = cfg.reset_potential(u, s);
        }
    }
}

fn checked_step(
    state: &LayerState,
    input: &[f64],
    cfg: &NeuronConfig,
    model: NeuronModel,
) -> Result<LayerState> {
    cfg.validate()?;
    if cfg.model != model {
        return Err(Error::contract(format!(
            "{model:?} step called with a {:?} config",
            cfg.model
        )));
    }
    if input.len() != state.width() {
        return Err(Error::contract(format!(
            "input width {} does not match layer width {}",
            input.len(),
            state.width()
        )));
    }
    ensure_finite(input, "input current")?;
    let mut next = state.clone();
    next.advance(input, cfg);
    Ok(next)
}

/// One LIF step.
pub fn lif_step(state: &LayerState, input: &[f64], cfg: &NeuronConfig) -> Result<LayerState> {
    checked_step(state, input, cfg, NeuronModel::Lif)
}

/// One IF step: the input is added to the potential without leak.
pub fn if_step(state: &LayerState, input: &[f64], cfg: &NeuronConfig) -> Result<LayerState> {
    checked_step(state, input, cfg, NeuronModel::If)
}

/// Runs a single neuron on constant input `z` for `window` steps from rest and
/// returns its firing rate with the final state.
pub fn simulate_constant_input(
    z: f64,
    cfg: &NeuronConfig,
    window: usize,
) -> Result<(f64, LayerState)> {
    let trace = MembraneTrace::record(z, cfg, window)?;
    let rate = trace.rate();
    Ok((rate, trace.final_state))
}

/// Post-reset potential trajectory of a single neuron on constant input.
#[derive(Debug, Clone)]
pub struct MembraneTrace {
    pub input: f64,
    pub config: NeuronConfig,
    /// `v[0]` is the initial potential, `v[t]` the potential after step `t`.
    pub v: Vec<f64>,
    pub spikes: u64,
    pub final_state: LayerState,
}

impl MembraneTrace {
    pub fn record(z: f64, cfg: &NeuronConfig, window: usize) -> Result<Self> {
        cfg.validate()?;
        if window == 0 {
            return Err(Error::contract("window must be at least 1"));
        }
        if !z.is_finite() {
            return Err(Error::NumericInput(format!("constant input {z}")));
        }
        let mut state = LayerState::new(1, cfg);
        let mut v = Vec::with_capacity(window + 1);
        v.push(state.v[0]);
        let input = [z];
        for _ in 0..window {
            state.advance(&input, cfg);
            v.push(state.v[0]);
        }
        Ok(Self {
            input: z,
            config: *cfg,
            v,
            spikes: u64::from(state.spike_count[0]),
            final_state: state,
        })
    }

    pub fn window(&self) -> usize {
        self.v.len() - 1
    }

    pub fn rate(&self) -> f64 {
        self.spikes as f64 / self.window() as f64
    }

    /// Soft-reset firing rate recovered from the potential trajectory alone:
    ///
    /// ```text
    /// r = ((z + v_r)/v_th - sum_{k<t} V[k] / (t v_th)) / tau_m - (V[t] - V[0]) / (t v_th)
    /// ```
    ///
    /// With `v_r = 0`, `z = v_th a` and `V[0] = 0` this is the usual
    /// `r = (a r_max - sum V[k-1] / (t v_th)) / tau_m - V[t] / (t v_th)`.
    /// IF neurons are covered by `tau_m = 1`.
    pub fn soft_reset_rate_identity(&self) -> Result<f64> {
        let cfg = &self.config;
        if cfg.reset != ResetMode::Soft {
            return Err(Error::contract("rate identity requires soft reset"));
        }
        let tau = match cfg.model {
            NeuronModel::Lif => cfg.tau_m,
            NeuronModel::If => 1.0,
        };
        let t = self.window() as f64;
        let history = neumaier_sum(&self.v[..self.window()]);
        let drift = self.v[self.window()] - self.v[0];
        Ok(((self.input + cfg.v_r) / cfg.v_th - history / (t * cfg.v_th)) / tau
            - drift / (t * cfg.v_th))
    }
}

/// Compensated summation; the rate identity differences large running sums.
fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Firing rate sampled over a range of constant inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub inputs: Vec<f64>,
    pub rates: Vec<f64>,
    pub config: NeuronConfig,
    pub window: usize,
}

impl RateCurve {
    /// CSV with header `input,rate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("input,rate\n");
        for (x, r) in self.inputs.iter().zip(&self.rates) {
            let _ = writeln!(out, "{x},{r}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Simulates every input independently and collects the rates.
pub fn sweep_rate_curve(inputs: &[f64], cfg: &NeuronConfig, window: usize) -> Result<RateCurve> {
    if inputs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::contract("rate curve inputs must be strictly ascending"));
    }
    let rates = inputs
        .iter()
        .map(|&z| simulate_constant_input(z, cfg, window).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateCurve {
        inputs: inputs.to_vec(),
        rates,
        config: *cfg,
        window,
    })
}
