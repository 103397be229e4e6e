//! Deep Q-learning with spiking (or ReLU) Q-networks.

mod optim;
mod qnetwork;
mod replay;

pub use optim::{Adam, AdamConfig};
pub use qnetwork::{argmax, QNetwork};
pub use replay::{ReplayMemory, Transition};

use std::borrow::Borrow;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::grad::{DepthRule, GradientSet};
use crate::net::save_checkpoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    /// Linear decay length in environment steps; `null` means a tenth of the run.
    pub decay_steps: Option<usize>,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_steps: None,
        }
    }
}

impl EpsilonSchedule {
    /// Exploration rate before environment step `step` (0-based) of a `total_steps` run.
    pub fn value(&self, step: usize, total_steps: usize) -> f64 {
        let decay = self.decay_steps.unwrap_or(total_steps / 10).max(1);
        if step >= decay {
            return self.end;
        }
        let frac = step as f64 / decay as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub lr: f64,
    pub batch_size: usize,
    /// Optimizer updates between target-network syncs.
    pub target_sync_interval: usize,
    pub capacity: usize,
    /// Environment steps before the first update.
    pub warmup_steps: usize,
    pub epsilon: EpsilonSchedule,
    pub double_dqn: bool,
    pub eval_epsilon: f64,
    /// Clip stored rewards to [-1, 1].
    pub reward_clip: bool,
    pub depth_rule: DepthRule,
    /// Adam moment coefficients.
    pub optimizer: AdamConfig,
    /// Environment steps per optimizer update once warm.
    pub update_every: usize,
    /// Environment steps between periodic evaluations; 0 disables them.
    pub eval_interval: usize,
    pub eval_rounds: usize,
    pub eval_noop_max: usize,
    /// Environment steps between checkpoints; 0 disables them.
    pub checkpoint_interval: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr: 1e-4,
            batch_size: 32,
            target_sync_interval: 500,
            capacity: 100_000,
            warmup_steps: 1000,
            epsilon: EpsilonSchedule::default(),
            double_dqn: false,
            eval_epsilon: 0.05,
            reward_clip: false,
            depth_rule: DepthRule::SameStep,
            optimizer: AdamConfig::default(),
            update_every: 1,
            eval_interval: 0,
            eval_rounds: 10,
            eval_noop_max: 30,
            checkpoint_interval: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                path: field.to_owned(),
                message,
            })
        };
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", format!("must be in [0, 1), got {}", self.gamma));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr", format!("must be positive, got {}", self.lr));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("target_sync_interval", self.target_sync_interval),
            ("capacity", self.capacity),
            ("warmup_steps", self.warmup_steps),
            ("update_every", self.update_every),
            ("eval_rounds", self.eval_rounds),
        ] {
            if v == 0 {
                return bad(name, "must be positive".into());
            }
        }
        for (name, v) in [
            ("epsilon.start", self.epsilon.start),
            ("epsilon.end", self.epsilon.end),
            ("eval_epsilon", self.eval_epsilon),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(name, format!("must be in [0, 1], got {v}"));
            }
        }
        if self.epsilon.decay_steps == Some(0) {
            return bad("epsilon.decay_steps", "must be positive".into());
        }
        Ok(())
    }
}

/// Bootstrap targets for a batch.
///
/// `y = r` for terminal transitions, otherwise `r + gamma * Q_target(s', a*)`
/// with `a* = argmax Q_target(s')`, or `argmax Q_online(s')` when `double_dqn`.
pub fn td_targets<N, T>(batch: &[T], online: &N, target: &N, cfg: &TrainerConfig) -> Result<Vec<f64>>
where
    N: QNetwork,
    T: Borrow<Transition>,
{
    batch
        .iter()
        .map(|t| {
            let t = t.borrow();
            if t.done {
                return Ok(t.r);
            }
            let q_next = target.q_values(&t.s_next)?;
            let bootstrap = if cfg.double_dqn {
                q_next[argmax(&online.q_values(&t.s_next)?)]
            } else {
                q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            Ok(t.r + cfg.gamma * bootstrap)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdLoss {
    /// Mean squared error over the batch on the taken actions.
    pub loss: f64,
    pub targets: Vec<f64>,
    pub q_taken: Vec<f64>,
    /// Per-sample `dloss/dq`: `2 (Q(s,a) - y) / batch` on the taken action.
    pub loss_grad_q: Vec<Vec<f64>>,
}

fn check_batch<T: Borrow<Transition>>(batch: &[T], actions: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    for t in batch {
        let t = t.borrow();
        if t.a >= actions {
            return Err(Error::contract(format!("action {} out of range 0..{actions}", t.a)));
        }
        if !t.r.is_finite() {
            return Err(Error::NumericInput(format!("reward {}", t.r)));
        }
    }
    Ok(())
}

pub fn td_loss<N, T>(batch: &[T], online: &N, target: &N, cfg: &TrainerConfig) -> Result<TdLoss>
where
    N: QNetwork,
    T: Borrow<Transition>,
{
    check_batch(batch, online.action_count())?;
    if target.action_count() != online.action_count() {
        return Err(Error::contract("online and target networks differ in action count"));
    }
    let targets = td_targets(batch, online, target, cfg)?;
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut q_taken = Vec::with_capacity(batch.len());
    let mut loss_grad_q = Vec::with_capacity(batch.len());
    for (t, y) in batch.iter().zip(&targets) {
        let t = t.borrow();
        let q = online.q_values(&t.s)?;
        let diff = q[t.a] - y;
        loss += diff * diff;
        let mut g = vec![0.0; q.len()];
        g[t.a] = 2.0 * diff / n;
        q_taken.push(q[t.a]);
        loss_grad_q.push(g);
    }
    Ok(TdLoss {
        loss: loss / n,
        targets,
        q_taken,
        loss_grad_q,
    })
}

/// One optimizer step on a sampled batch; returns the batch loss.
fn update_step<N: QNetwork>(
    batch: &[&Transition],
    online: &mut N,
    target: &N,
    opt: &mut Adam,
    cfg: &TrainerConfig,
    step: usize,
) -> Result<f64> {
    let targets = td_targets(batch, online, target, cfg)?;
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut total: Option<GradientSet> = None;
    for (t, y) in batch.iter().zip(&targets) {
        let tape = online.record(&t.s)?;
        let q = online.tape_q(&tape);
        let diff = q[t.a] - y;
        loss += diff * diff;
        let mut g = vec![0.0; q.len()];
        g[t.a] = 2.0 * diff / n;
        let grads = online.backward(&tape, &g, cfg.depth_rule)?;
        match &mut total {
            Some(acc) => acc.add_assign(&grads),
            None => total = Some(grads),
        }
    }
    let loss = loss / n;
    let total = total.expect("batch is nonempty");
    if !loss.is_finite() || !total.is_finite() {
        return Err(Error::NonFiniteLoss { step });
    }
    opt.update(online.parameters_mut(), &total);
    Ok(loss)
}

/// One row per finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    /// Environment step at which the episode ended (1-based).
    pub step: usize,
    pub episode: usize,
    pub episode_return: f64,
    /// Mean batch loss over the episode's updates; `None` before training starts.
    pub loss: Option<f64>,
    /// Mean over the episode's states of `max_a Q(s, a)`.
    pub mean_max_q: f64,
    /// Exploration rate at the episode's last step.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    /// CSV with header `step,episode,return,loss,mean_max_q,epsilon`; `loss`
    /// is empty for episodes without updates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,episode,return,loss,mean_max_q,epsilon\n");
        for r in &self.rows {
            let loss = r.loss.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step, r.episode, r.episode_return, loss, r.mean_max_q, r.epsilon
            );
        }
        out
    }
}

/// Network chosen by periodic evaluation.
#[derive(Debug, Clone)]
pub struct BestNetwork<N> {
    pub network: N,
    pub step: usize,
    pub eval: EvalResult,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<N> {
    pub network: N,
    pub best: Option<BestNetwork<N>>,
    pub log: TrainingLog,
    pub updates: usize,
    pub evaluations: Vec<(usize, EvalResult)>,
}

/// Parameters of both networks right after an optimizer update (and the
/// target sync, if one was due).
pub struct UpdateView<'v> {
    /// 1-based update counter.
    pub update: usize,
    pub step: usize,
    pub synced: bool,
    pub online: Vec<&'v [f64]>,
    pub target: Vec<&'v [f64]>,
}

/// Optional side channels of a training run.
#[derive(Default)]
pub struct TrainOptions<'a> {
    /// Separate environment instance for periodic evaluation.
    pub eval_env: Option<&'a mut dyn Environment>,
    /// Directory for periodic `checkpoint_<step>.json` files.
    pub checkpoint_dir: Option<&'a Path>,
    pub on_update: Option<&'a mut dyn FnMut(&UpdateView<'_>)>,
}

/// Runs `total_steps` environment steps of deep Q-learning from `init`.
///
/// Fully determined by `(init, cfg, seed, total_steps)` and the environment.
pub fn train<N, E>(
    env: &mut E,
    cfg: &TrainerConfig,
    init: N,
    seed: u64,
    total_steps: usize,
    mut opts: TrainOptions<'_>,
) -> Result<TrainOutcome<N>>
where
    N: QNetwork,
    E: Environment + ?Sized,
{
    cfg.validate()?;
    if init.action_count() != env.action_count() {
        return Err(Error::contract(format!(
            "network has {} actions, environment has {}",
            init.action_count(),
            env.action_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut online = init;
    let mut target = online.clone();
    let shapes: Vec<usize> = online.parameters().iter().map(|p| p.len()).collect();
    let mut opt = Adam::new(cfg.lr, cfg.optimizer, &shapes);
    let mut memory = ReplayMemory::new(cfg.capacity)?;
    let actions = env.action_count();

    let mut log = TrainingLog::default();
    let mut evaluations = Vec::new();
    let mut best: Option<BestNetwork<N>> = None;
    let mut updates = 0usize;
    let mut episode = 0usize;
    let mut ep_return = 0.0;
    let mut ep_loss = (0.0, 0usize);
    let mut ep_q = (0.0, 0usize);
    let mut obs = env.reset(rng.gen());

    for step in 1..=total_steps {
        let eps = cfg.epsilon.value(step - 1, total_steps);
        let q = online.q_values(&obs)?;
        ep_q.0 += q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ep_q.1 += 1;
        let action = if rng.gen::<f64>() < eps {
            rng.gen_range(0..actions)
        } else {
            argmax(&q)
        };
        let out = env.step(action)?;
        ep_return += out.reward;
        let r = if cfg.reward_clip {
            out.reward.clamp(-1.0, 1.0)
        } else {
            out.reward
        };
        memory.push(Transition {
            s: std::mem::take(&mut obs),
            a: action,
            r,
            s_next: out.observation.clone(),
            done: out.terminal,
        });

        if step > cfg.warmup_steps && (step - cfg.warmup_steps) % cfg.update_every == 0 {
            let batch = memory.sample(cfg.batch_size, &mut rng)?;
            let loss = update_step(&batch, &mut online, &target, &mut opt, cfg, step)?;
            ep_loss.0 += loss;
            ep_loss.1 += 1;
            updates += 1;
            let synced = updates % cfg.target_sync_interval == 0;
            if synced {
                target = online.clone();
            }
            if let Some(observe) = opts.on_update.as_deref_mut() {
                observe(&UpdateView {
                    update: updates,
                    step,
                    synced,
                    online: online.parameters(),
                    target: target.parameters(),
                });
            }
        }

        if out.done() {
            episode += 1;
            log.rows.push(LogRow {
                step,
                episode,
                episode_return: ep_return,
                loss: (ep_loss.1 > 0).then(|| ep_loss.0 / ep_loss.1 as f64),
                mean_max_q: ep_q.0 / ep_q.1 as f64,
                epsilon: eps,
            });
            ep_return = 0.0;
            ep_loss = (0.0, 0);
            ep_q = (0.0, 0);
            obs = env.reset(rng.gen());
        } else {
            obs = out.observation;
        }

        if cfg.eval_interval > 0 && step % cfg.eval_interval == 0 && updates > 0 {
            if let Some(eval_env) = opts.eval_env.as_deref_mut() {
                let eval_seed = seed ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let result = evaluate(
                    &online,
                    eval_env,
                    cfg.eval_rounds,
                    cfg.eval_epsilon,
                    cfg.eval_noop_max,
                    eval_seed,
                )?;
                if best.as_ref().is_none_or(|b| result.mean > b.eval.mean) {
                    best = Some(BestNetwork {
                        network: online.clone(),
                        step,
                        eval: result.clone(),
                    });
                }
                evaluations.push((step, result));
            }
        }
        if cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0 {
            if let Some(dir) = opts.checkpoint_dir {
                save_checkpoint(dir.join(format!("checkpoint_{step:08}.json")), &online.checkpoint())?;
            }
        }
    }
    Ok(TrainOutcome {
        network: online,
        best,
        log,
        updates,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub scores: Vec<f64>,
}

impl EvalResult {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            scores,
        }
    }
}

/// Plays `rounds` episodes with an epsilon-greedy policy.
///
/// Each round opens with a uniform number in `[0, noop_max]` of no-op actions
/// when the environment has one; otherwise no-op starts are skipped. Episodes
/// end at the environment's step cap.
pub fn evaluate<N, E>(
    net: &N,
    env: &mut E,
    rounds: usize,
    eval_epsilon: f64,
    noop_max: usize,
    seed: u64,
) -> Result<EvalResult>
where
    N: QNetwork,
    E: Environment + ?Sized,
{
    if rounds == 0 {
        return Err(Error::contract("rounds must be at least 1"));
    }
    if !(0.0..=1.0).contains(&eval_epsilon) {
        return Err(Error::contract(format!("eval_epsilon must be in [0, 1], got {eval_epsilon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = env.action_count();
    let mut scores = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut obs = env.reset(rng.gen());
        let mut total = 0.0;
        let noops = match env.noop_action() {
            Some(_) if noop_max > 0 => rng.gen_range(0..=noop_max),
            _ => 0,
        };
        let mut k = 0;
        loop {
            let action = if k < noops {
                env.noop_action().expect("checked above")
            } else if eval_epsilon > 0.0 && rng.gen::<f64>() < eval_epsilon {
                rng.gen_range(0..actions)
            } else {
                argmax(&net.q_values(&obs)?)
            };
            k += 1;
            let out = env.step(action)?;
            total += out.reward;
            if out.done() {
                break;
            }
            obs = out.observation;
        }
        scores.push(total);
    }
    Ok(EvalResult::from_scores(scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Inferior,
    Equal,
    Outperform,
}

/// Score ratio (agent over reference): higher is better.
pub fn classify_score(ratio: f64) -> Outcome {
    if ratio > 1.05 {
        Outcome::Outperform
    } else if ratio >= 0.95 {
        Outcome::Equal
    } else {
        Outcome::Inferior
    }
}

/// Standard-deviation ratio: lower is better.
pub fn classify_std(ratio: f64) -> Outcome {
    if ratio > 1.05 {
        Outcome::Inferior
    } else if ratio >= 0.95 {
        Outcome::Equal
    } else {
        Outcome::Outperform
    }
}

/// `(score class, std class)`.
pub fn classify_outcome(score_ratio: f64, std_ratio: f64) -> (Outcome, Outcome) {
    (classify_score(score_ratio), classify_std(std_ratio))
}
