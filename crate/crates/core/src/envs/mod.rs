//! Small deterministic environments with a common episodic interface.

mod cartpole;
mod gridworld;
mod stack;

pub use cartpole::{CartPole, CartPoleState};
pub use gridworld::{value_iteration_oracle, GridWorld, ValueTable, GRID_GOAL_REWARD, GRID_STEP_COST};
pub use stack::{stack, FrameStacked, FrameStacker};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::net::Shape3;

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The episode reached a terminal state; no bootstrap past it.
    pub terminal: bool,
    /// The episode hit its step cap without terminating.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Environment {
    /// Starts a new episode. Deterministic given `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one step. Stepping a finished (or never reset) episode is a
    /// contract violation.
    fn step(&mut self, action: usize) -> Result<StepOutcome>;

    fn action_count(&self) -> usize;

    fn observation_shape(&self) -> Shape3;

    fn max_episode_steps(&self) -> usize;

    /// Action that leaves the task unchanged, if the environment has one.
    fn noop_action(&self) -> Option<usize> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        (**self).reset(seed)
    }
    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        (**self).step(action)
    }
    fn action_count(&self) -> usize {
        (**self).action_count()
    }
    fn observation_shape(&self) -> Shape3 {
        (**self).observation_shape()
    }
    fn max_episode_steps(&self) -> usize {
        (**self).max_episode_steps()
    }
    fn noop_action(&self) -> Option<usize> {
        (**self).noop_action()
    }
}

/// JSON environment description used by configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EnvConfig {
    Gridworld {
        size: usize,
        /// `null` for the empty corner-to-corner grid.
        #[serde(default)]
        layout_seed: Option<u64>,
        #[serde(default = "one")]
        frame_stack: usize,
    },
    Cartpole {
        #[serde(default = "one")]
        frame_stack: usize,
    },
}

fn one() -> usize {
    1
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::Gridworld {
            size: 5,
            layout_seed: None,
            frame_stack: 1,
        }
    }
}

impl EnvConfig {
    pub fn build(&self) -> Result<Box<dyn Environment>> {
        let (base, m): (Box<dyn Environment>, usize) = match *self {
            EnvConfig::Gridworld {
                size,
                layout_seed,
                frame_stack,
            } => {
                let g = match layout_seed {
                    None => GridWorld::new(size)?,
                    Some(seed) => GridWorld::with_walls(size, seed)?,
                };
                (Box::new(g), frame_stack)
            }
            EnvConfig::Cartpole { frame_stack } => (Box::new(CartPole::new()), frame_stack),
        };
        if m == 1 {
            Ok(base)
        } else {
            Ok(Box::new(FrameStacked::new(base, m)?))
        }
    }
}

/// One row of a dumped trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub step: usize,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
}

/// CSV with header `step,action,reward,done`.
pub fn trajectory_csv(rows: &[TrajectoryStep]) -> String {
    let mut out = String::from("step,action,reward,done\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.step, r.action, r.reward, u8::from(r.done));
    }
    out
}

/// Runs one episode with `policy`, returning its trajectory and total reward.
pub fn rollout<E, P>(env: &mut E, seed: u64, mut policy: P) -> Result<(Vec<TrajectoryStep>, f64)>
where
    E: Environment + ?Sized,
    P: FnMut(&[f64]) -> Result<usize>,
{
    let mut obs = env.reset(seed);
    let mut rows = Vec::new();
    let mut total = 0.0;
    loop {
        let action = policy(&obs)?;
        let out = env.step(action)?;
        total += out.reward;
        rows.push(TrajectoryStep {
            step: rows.len() + 1,
            action,
            reward: out.reward,
            done: out.done(),
        });
        if out.done() {
            return Ok((rows, total));
        }
        obs = out.observation;
    }
}

/// `n` observations visited by a uniformly random policy, resetting on episode end.
pub fn sample_states<E: Environment + ?Sized>(env: &mut E, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = env.action_count();
    let mut states = Vec::with_capacity(n);
    let mut obs = env.reset(rng.gen());
    while states.len() < n {
        let out = env.step(rng.gen_range(0..actions))?;
        states.push(std::mem::replace(&mut obs, out.observation));
        if out.terminal || out.truncated {
            obs = env.reset(rng.gen());
        }
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_build() {
        let cfg: EnvConfig = serde_json::from_str(r#"{"kind":"cartpole","frame_stack":4}"#).unwrap();
        let env = cfg.build().unwrap();
        assert_eq!(env.observation_shape().len(), 16);
        let cfg: EnvConfig = serde_json::from_str(r#"{"kind":"gridworld","size":4}"#).unwrap();
        assert_eq!(cfg.build().unwrap().action_count(), 4);
        assert!(serde_json::from_str::<EnvConfig>(r#"{"kind":"gridworld","size":4,"colour":1}"#).is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let mut env = GridWorld::new(3).unwrap();
        // right, right, down, down reaches the far corner
        let mut plan = [1, 1, 2, 2].into_iter();
        let (rows, total) = rollout(&mut env, 0, |_| Ok(plan.next().unwrap())).unwrap();
        assert_eq!(rows.len(), 4);
        assert!((total - (0.99 - 0.03)).abs() < 1e-12);
        let csv = trajectory_csv(&rows);
        assert!(csv.starts_with("step,action,reward,done\n1,1,-0.01,0\n"));
        assert!(csv.ends_with("4,2,0.99,1\n"));
    }
}
