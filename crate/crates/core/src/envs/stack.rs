use std::collections::VecDeque;

use super::{Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::net::Shape3;

/// Concatenates the `m` most recent observations, oldest first.
///
/// Until `m` observations have arrived the missing slots repeat the first
/// observation of the episode.
#[derive(Debug, Clone)]
pub struct FrameStacker {
    m: usize,
    frames: VecDeque<Vec<f64>>,
}

impl FrameStacker {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::contract("stack depth must be at least 1"));
        }
        Ok(Self {
            m,
            frames: VecDeque::with_capacity(m),
        })
    }

    pub fn depth(&self) -> usize {
        self.m
    }

    /// Clears the ring and fills it with `first`.
    pub fn reset(&mut self, first: &[f64]) -> Vec<f64> {
        self.frames.clear();
        self.frames.extend(std::iter::repeat_n(first.to_vec(), self.m));
        self.stacked()
    }

    pub fn push(&mut self, obs: &[f64]) -> Vec<f64> {
        if self.frames.is_empty() {
            return self.reset(obs);
        }
        self.frames.pop_front();
        self.frames.push_back(obs.to_vec());
        self.stacked()
    }

    fn stacked(&self) -> Vec<f64> {
        self.frames.iter().flatten().copied().collect()
    }
}

/// Stacks one episode's observation stream; the first element plays the reset.
pub fn stack(stream: &[Vec<f64>], m: usize) -> Result<Vec<Vec<f64>>> {
    let mut s = FrameStacker::new(m)?;
    Ok(stream
        .iter()
        .enumerate()
        .map(|(i, o)| if i == 0 { s.reset(o) } else { s.push(o) })
        .collect())
}

/// An environment whose observations are frame-stacked.
#[derive(Debug, Clone)]
pub struct FrameStacked<E> {
    inner: E,
    stacker: FrameStacker,
}

impl<E: Environment> FrameStacked<E> {
    pub fn new(inner: E, m: usize) -> Result<Self> {
        Ok(Self {
            inner,
            stacker: FrameStacker::new(m)?,
        })
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Environment> Environment for FrameStacked<E> {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let first = self.inner.reset(seed);
        self.stacker.reset(&first)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let mut out = self.inner.step(action)?;
        out.observation = self.stacker.push(&out.observation);
        Ok(out)
    }

    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    /// Frames are stacked along the channel axis.
    fn observation_shape(&self) -> Shape3 {
        let s = self.inner.observation_shape();
        Shape3::new(s.channels * self.stacker.depth(), s.height, s.width)
    }

    fn max_episode_steps(&self) -> usize {
        self.inner.max_episode_steps()
    }

    fn noop_action(&self) -> Option<usize> {
        self.inner.noop_action()
    }
}
