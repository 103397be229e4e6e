//! Subcommand implementations behind the `dsqn` binary.
//!
//! Every command reads an optional JSON config, applies `--seed` and
//! `--set key=value` overrides, writes the resolved config to
//! `<out>/config.json`, its outputs beside it, and wall-clock metadata to
//! `<out>/manifest.json`. Outputs other than the manifest depend only on the
//! resolved config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::convert::{audit_csv, convert, fidelity_audit, ConversionConfig, ReluNetwork};
use crate::energy::{energy_from_counts, energy_report, mean_spikes_per_decision, SpikeMeasurement};
use crate::envs::{rollout, sample_states, trajectory_csv, EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::grad::{finite_diff_check_with, DepthRule};
use crate::net::{load_checkpoint, save_checkpoint, Checkpoint, LayerSpec, SpikingNetwork};
use crate::neuron::{sweep_rate_curve, NeuronConfig, ResetMode};
use crate::surrogate::SurrogateConfig;
use crate::trainer::{argmax, evaluate, train, EvalResult, QNetwork, TrainOptions, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Eval,
    Gradcheck,
    Ratecurve,
    Convert,
    Audit,
    Energy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Gradcheck => "gradcheck",
            Command::Ratecurve => "ratecurve",
            Command::Convert => "convert",
            Command::Audit => "audit",
            Command::Energy => "energy",
        }
    }
}

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// `key=value` with a dotted key; the value is parsed as JSON, or taken
    /// as a string if that fails.
    pub sets: Vec<String>,
}

/// Hidden-layer network description shared by commands that build networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSpec {
    /// `false` builds a ReLU network.
    pub spiking: bool,
    /// Dense hidden widths; ignored when `layers` is given.
    pub hidden: Vec<usize>,
    /// Explicit layer list ending in a readout.
    pub layers: Option<Vec<LayerSpec>>,
    pub window: usize,
    pub neuron: NeuronConfig,
    pub surrogate: SurrogateConfig,
    /// ReLU networks only.
    pub bias: bool,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            spiking: true,
            hidden: vec![64],
            layers: None,
            window: 64,
            neuron: NeuronConfig::default(),
            surrogate: SurrogateConfig::default(),
            bias: true,
        }
    }
}

impl NetworkSpec {
    fn layer_list(&self, inputs: usize, actions: usize) -> Result<Vec<LayerSpec>> {
        let layers = match &self.layers {
            Some(l) => l.clone(),
            None => {
                let mut v = Vec::new();
                let mut prev = inputs;
                for &h in &self.hidden {
                    v.push(LayerSpec::dense(prev, h));
                    prev = h;
                }
                v.push(LayerSpec::readout(prev, actions));
                v
            }
        };
        let first = layers.first().map_or(0, LayerSpec::input_len);
        let last = layers.last().map_or(0, LayerSpec::output_len);
        if first != inputs || last != actions {
            return Err(Error::Config {
                path: "network.layers".into(),
                message: format!("layers map {first} -> {last}, environment needs {inputs} -> {actions}"),
            });
        }
        Ok(layers)
    }

    pub fn build_spiking(&self, inputs: usize, actions: usize, seed: u64) -> Result<SpikingNetwork> {
        let layers = self.layer_list(inputs, actions)?;
        Ok(SpikingNetwork::new(layers, self.neuron, self.surrogate, self.window)?.init_weights(seed))
    }

    pub fn build_relu(&self, inputs: usize, actions: usize, seed: u64) -> Result<ReluNetwork> {
        let layers = self.layer_list(inputs, actions)?;
        Ok(ReluNetwork::new(layers, self.bias)?.init_weights(seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSpec {
    pub rounds: usize,
    pub epsilon: f64,
    pub noop_max: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self {
            rounds: 30,
            epsilon: 0.05,
            noop_max: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainCommand {
    pub seed: u64,
    pub env: EnvConfig,
    pub network: NetworkSpec,
    pub trainer: TrainerConfig,
    pub total_steps: usize,
    /// Evaluation of the selected network after training.
    pub final_eval: EvalSpec,
}

impl Default for TrainCommand {
    fn default() -> Self {
        Self {
            seed: 0,
            env: EnvConfig::default(),
            network: NetworkSpec::default(),
            trainer: TrainerConfig::default(),
            total_steps: 50_000,
            final_eval: EvalSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalCommand {
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub env: EnvConfig,
    pub eval: EvalSpec,
    /// Also dump the first round's greedy trajectory.
    pub trajectory: bool,
}

impl Default for EvalCommand {
    fn default() -> Self {
        Self {
            seed: 0,
            checkpoint: PathBuf::from("network.json"),
            env: EnvConfig::default(),
            eval: EvalSpec::default(),
            trajectory: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckCommand {
    pub seed: u64,
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub actions: usize,
    pub window: usize,
    pub step: f64,
    pub smooth: bool,
    pub depth_rule: DepthRule,
    pub neuron: NeuronConfig,
    pub surrogate: SurrogateConfig,
    /// Observation components are drawn from U(-scale, scale).
    pub input_scale: f64,
}

impl Default for GradcheckCommand {
    fn default() -> Self {
        Self {
            seed: 0,
            inputs: 2,
            hidden: vec![4],
            actions: 2,
            window: 8,
            step: 1e-3,
            smooth: true,
            depth_rule: DepthRule::Unrolled,
            neuron: NeuronConfig::default(),
            surrogate: SurrogateConfig::default(),
            input_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatecurveCommand {
    pub seed: u64,
    pub neuron: NeuronConfig,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub window: usize,
}

impl Default for RatecurveCommand {
    fn default() -> Self {
        Self {
            seed: 0,
            neuron: NeuronConfig::integrate_and_fire(ResetMode::Soft, 1.0, 0.0),
            start: 0.0,
            stop: 1.0,
            step: 0.05,
            window: 400,
        }
    }
}

impl RatecurveCommand {
    /// `start + i * step` for every `i` that stays within `stop` (plus a tiny tolerance).
    pub fn inputs(&self) -> Result<Vec<f64>> {
        if !(self.step.is_finite() && self.step > 0.0) || !(self.stop >= self.start) {
            return Err(Error::Config {
                path: "step".into(),
                message: "need step > 0 and stop >= start".into(),
            });
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvertCommand {
    pub seed: u64,
    /// ReLU network checkpoint.
    pub checkpoint: PathBuf,
    /// Environment whose random-policy states calibrate the scales.
    pub env: EnvConfig,
    pub conversion: ConversionConfig,
}

impl Default for ConvertCommand {
    fn default() -> Self {
        Self {
            seed: 0,
            checkpoint: PathBuf::from("network.json"),
            env: EnvConfig::default(),
            conversion: ConversionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditCommand {
    pub seed: u64,
    pub ann: PathBuf,
    pub snn: PathBuf,
    pub env: EnvConfig,
    pub states: usize,
    pub windows: Vec<usize>,
}

impl Default for AuditCommand {
    fn default() -> Self {
        Self {
            seed: 0,
            ann: PathBuf::from("ann.json"),
            snn: PathBuf::from("snn.json"),
            env: EnvConfig::default(),
            states: 1000,
            windows: vec![1, 10, 50, 100, 500],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyCommand {
    pub seed: u64,
    /// Directly trained network; when absent `neurons_direct` is used.
    pub direct: Option<PathBuf>,
    /// Converted network; when absent `neurons_converted` is used.
    pub converted: Option<PathBuf>,
    pub neurons_direct: usize,
    pub neurons_converted: usize,
    pub window_direct: Option<usize>,
    pub window_converted: Option<usize>,
    /// Environment for spike measurement when both networks are given.
    pub env: Option<EnvConfig>,
    pub measure_states: usize,
}

impl Default for EnergyCommand {
    fn default() -> Self {
        Self {
            seed: 0,
            direct: None,
            converted: None,
            neurons_direct: 100,
            neurons_converted: 100,
            window_direct: None,
            window_converted: None,
            env: None,
            measure_states: 200,
        }
    }
}

/// Sets `path` (dot separated) in `root` to `value`, creating objects as needed.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| Error::Config {
        path: assignment.to_owned(),
        message: "override must look like key=value".into(),
    })?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config {
            path: key.to_owned(),
            message: "empty key segment".into(),
        });
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            return Err(Error::Config {
                path: parts[..i].join("."),
                message: "cannot set a field inside a non-object value".into(),
            });
        }
        let map = cur.as_object_mut().expect("checked object");
        if i + 1 == parts.len() {
            map.insert((*part).to_owned(), value);
            return Ok(());
        }
        cur = map.entry((*part).to_owned()).or_insert_with(|| json!({}));
    }
    Ok(())
}

/// Reads, overrides and deserializes a command config, naming the offending
/// field on failure.
pub fn resolve_config<T: DeserializeOwned>(opts: &RunOptions) -> Result<T> {
    let mut root = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Config {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        }
        None => json!({}),
    };
    if !root.is_object() {
        return Err(Error::Config {
            path: String::new(),
            message: "config must be a JSON object".into(),
        });
    }
    if let Some(seed) = opts.seed {
        root["seed"] = json!(seed);
    }
    for s in &opts.sets {
        apply_override(&mut root, s)?;
    }
    serde_path_to_error::deserialize(root).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Runs `command` and returns the path of its output directory.
pub fn run(command: Command, opts: &RunOptions) -> Result<PathBuf> {
    let started = SystemTime::now();
    let clock = Instant::now();
    fs::create_dir_all(&opts.out)?;
    let out = opts.out.as_path();
    let resolved = match command {
        Command::Train => run_with(opts, out, cmd_train)?,
        Command::Eval => run_with(opts, out, cmd_eval)?,
        Command::Gradcheck => run_with(opts, out, cmd_gradcheck)?,
        Command::Ratecurve => run_with(opts, out, cmd_ratecurve)?,
        Command::Convert => run_with(opts, out, cmd_convert)?,
        Command::Audit => run_with(opts, out, cmd_audit)?,
        Command::Energy => run_with(opts, out, cmd_energy)?,
    };
    let manifest = json!({
        "command": command.name(),
        "crate_version": env!("CARGO_PKG_VERSION"),
        "started_unix_seconds": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "config": resolved,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(opts.out.clone())
}

fn run_with<T, F>(opts: &RunOptions, out: &Path, f: F) -> Result<Value>
where
    T: DeserializeOwned + Serialize,
    F: FnOnce(&T, &Path) -> Result<()>,
{
    let cfg: T = resolve_config(opts)?;
    let value = serde_json::to_value(&cfg)?;
    write_json(&out.join("config.json"), &value)?;
    f(&cfg, out)?;
    Ok(value)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn eval_json(e: &EvalResult) -> Value {
    json!({"mean": e.mean, "std": e.std, "scores": e.scores})
}

/// Writes `train_log.csv`, `network.json`, `best.json` (with periodic
/// evaluation) and `eval.json`.
pub fn cmd_train(cfg: &TrainCommand, out: &Path) -> Result<()> {
    let mut env = cfg.env.build()?;
    let mut eval_env = cfg.env.build()?;
    let inputs = env.observation_shape().len();
    let actions = env.action_count();
    let ckpt_dir = out.join("checkpoints");
    if cfg.trainer.checkpoint_interval > 0 {
        fs::create_dir_all(&ckpt_dir)?;
    }
    let checkpoint_dir = (cfg.trainer.checkpoint_interval > 0).then_some(ckpt_dir.as_path());
    let with_eval = cfg.trainer.eval_interval > 0;
    if cfg.network.spiking {
        let net = cfg.network.build_spiking(inputs, actions, cfg.seed)?;
        let opts = TrainOptions {
            eval_env: with_eval.then_some(eval_env.as_mut()),
            checkpoint_dir,
            on_update: None,
        };
        let o = train(&mut env, &cfg.trainer, net, cfg.seed, cfg.total_steps, opts)?;
        finish_train(cfg, out, o, eval_env.as_mut())
    } else {
        let net = cfg.network.build_relu(inputs, actions, cfg.seed)?;
        let opts = TrainOptions {
            eval_env: with_eval.then_some(eval_env.as_mut()),
            checkpoint_dir,
            on_update: None,
        };
        let o = train(&mut env, &cfg.trainer, net, cfg.seed, cfg.total_steps, opts)?;
        finish_train(cfg, out, o, eval_env.as_mut())
    }
}

fn finish_train<N: QNetwork>(
    cfg: &TrainCommand,
    out: &Path,
    o: crate::trainer::TrainOutcome<N>,
    eval_env: &mut dyn Environment,
) -> Result<()> {
    fs::write(out.join("train_log.csv"), o.log.to_csv())?;
    save_checkpoint(out.join("network.json"), &o.network.checkpoint())?;
    let selected = match &o.best {
        Some(b) => {
            save_checkpoint(out.join("best.json"), &b.network.checkpoint())?;
            &b.network
        }
        None => &o.network,
    };
    let e = &cfg.final_eval;
    let result = evaluate(selected, eval_env, e.rounds, e.epsilon, e.noop_max, cfg.seed.wrapping_add(1))?;
    let mut periodic = String::from("step,mean,std\n");
    for (step, r) in &o.evaluations {
        let _ = writeln!(periodic, "{step},{},{}", r.mean, r.std);
    }
    fs::write(out.join("periodic_eval.csv"), periodic)?;
    write_json(
        &out.join("eval.json"),
        &json!({
            "selected": if o.best.is_some() { "best" } else { "final" },
            "selected_step": o.best.as_ref().map(|b| b.step),
            "updates": o.updates,
            "episodes": o.log.rows.len(),
            "final_eval": eval_json(&result),
        }),
    )
}

/// Writes `eval.json`, `scores.csv` and optionally `trajectory.csv`.
pub fn cmd_eval(cfg: &EvalCommand, out: &Path) -> Result<()> {
    let ck = load_checkpoint(&cfg.checkpoint)?;
    let mut env = cfg.env.build()?;
    let e = &cfg.eval;
    let (result, trajectory) = match &ck {
        Checkpoint::Spiking(n) => eval_one(n, &mut env, e, cfg)?,
        Checkpoint::Relu(n) => eval_one(n, &mut env, e, cfg)?,
    };
    let mut scores = String::from("round,score\n");
    for (i, s) in result.scores.iter().enumerate() {
        let _ = writeln!(scores, "{},{s}", i + 1);
    }
    fs::write(out.join("scores.csv"), scores)?;
    if let Some(t) = trajectory {
        fs::write(out.join("trajectory.csv"), t)?;
    }
    write_json(&out.join("eval.json"), &eval_json(&result))
}

fn eval_one<N: QNetwork>(
    net: &N,
    env: &mut Box<dyn Environment>,
    e: &EvalSpec,
    cfg: &EvalCommand,
) -> Result<(EvalResult, Option<String>)> {
    let result = evaluate(net, env, e.rounds, e.epsilon, e.noop_max, cfg.seed)?;
    let trajectory = if cfg.trajectory {
        let (rows, _) = rollout(env, cfg.seed, |obs| Ok(argmax(&net.q_values(obs)?)))?;
        Some(trajectory_csv(&rows))
    } else {
        None
    };
    Ok((result, trajectory))
}

/// Writes `gradcheck.csv` and `gradcheck.json`.
pub fn cmd_gradcheck(cfg: &GradcheckCommand, out: &Path) -> Result<()> {
    let net = SpikingNetwork::dense(cfg.inputs, &cfg.hidden, cfg.actions, cfg.neuron, cfg.surrogate, cfg.window)?
        .init_weights(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);
    let obs: Vec<f64> = (0..cfg.inputs)
        .map(|_| rng.gen_range(-cfg.input_scale..=cfg.input_scale))
        .collect();
    let g: Vec<f64> = (0..cfg.actions).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let report = finite_diff_check_with(&net, &obs, &g, cfg.step, cfg.smooth, cfg.depth_rule)?;
    fs::write(out.join("gradcheck.csv"), report.to_csv())?;
    write_json(
        &out.join("gradcheck.json"),
        &json!({
            "differentiable": report.is_differentiable(),
            "max_rel_error": report.max_rel_error,
            "mean_rel_error": report.mean_rel_error,
            "weights": report.rows.len(),
        }),
    )
}

/// Writes `rate_curve.csv`.
pub fn cmd_ratecurve(cfg: &RatecurveCommand, out: &Path) -> Result<()> {
    let curve = sweep_rate_curve(&cfg.inputs()?, &cfg.neuron, cfg.window)?;
    curve.write_csv(out.join("rate_curve.csv"))
}

/// Writes `snn.json` and `scales.json`.
pub fn cmd_convert(cfg: &ConvertCommand, out: &Path) -> Result<()> {
    let ann = load_checkpoint(&cfg.checkpoint)?.into_relu()?;
    let mut env = cfg.env.build()?;
    let calib = sample_states(&mut env, cfg.conversion.calibration_states, cfg.seed)?;
    let scales = crate::convert::layer_scales(&ann, &calib, cfg.conversion.percentile)?;
    let snn = convert(&ann, &calib, &cfg.conversion)?;
    save_checkpoint(out.join("snn.json"), &Checkpoint::Spiking(snn))?;
    write_json(&out.join("scales.json"), &json!({ "scales": scales }))
}

/// Writes `audit.csv`.
pub fn cmd_audit(cfg: &AuditCommand, out: &Path) -> Result<()> {
    let ann = load_checkpoint(&cfg.ann)?.into_relu()?;
    let snn = load_checkpoint(&cfg.snn)?.into_spiking()?;
    let mut env = cfg.env.build()?;
    let states = sample_states(&mut env, cfg.states, cfg.seed)?;
    let rows = fidelity_audit(&ann, &snn, &states, &cfg.windows)?;
    fs::write(out.join("audit.csv"), audit_csv(&rows))?;
    Ok(())
}

/// Writes `energy.json`.
pub fn cmd_energy(cfg: &EnergyCommand, out: &Path) -> Result<()> {
    let report = match (&cfg.direct, &cfg.converted) {
        (Some(d), Some(c)) => {
            let mut nd = load_checkpoint(d)?.into_spiking()?;
            let mut nc = load_checkpoint(c)?.into_spiking()?;
            if let Some(w) = cfg.window_direct {
                nd = nd.with_window(w);
            }
            if let Some(w) = cfg.window_converted {
                nc = nc.with_window(w);
            }
            let spikes = match &cfg.env {
                Some(env_cfg) => {
                    let mut env = env_cfg.build()?;
                    let states = sample_states(&mut env, cfg.measure_states, cfg.seed)?;
                    Some(SpikeMeasurement {
                        direct: mean_spikes_per_decision(&nd, &states)?,
                        converted: mean_spikes_per_decision(&nc, &states)?,
                    })
                }
                None => None,
            };
            energy_report(&nd, &nc, spikes)
        }
        (None, None) => energy_from_counts(
            cfg.neurons_direct,
            cfg.neurons_converted,
            cfg.window_direct,
            cfg.window_converted,
        ),
        _ => {
            return Err(Error::Config {
                path: "direct".into(),
                message: "give both `direct` and `converted` checkpoints or neither".into(),
            })
        }
    };
    write_json(&out.join("energy.json"), &report)
}
