//! Plain one-policy DQN loop, kept separate from the multi-level trainer so
//! the two can be checked against each other.

use alloc::vec::Vec;
use num_traits::Float;

use super::explore::{select_action_with, EpsilonSchedule};
use super::learner::{Learner, LearnerConfig};
use super::replay::{ReplayBuffer, Transition};
use crate::action::{decode, Action};
use crate::agent::Environment;
use crate::seed::{self, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleFrequencyConfig {
    pub learner: LearnerConfig,
    pub buffer_capacity: usize,
    pub total_iterations: u64,
    /// Environment steps per SGD iteration.
    pub train_freq: u64,
    pub anneal_fraction: f64,
    pub prefill_fraction: f64,
}

impl Default for SingleFrequencyConfig {
    fn default() -> Self {
        Self {
            learner: LearnerConfig::default(),
            buffer_capacity: 10_000,
            total_iterations: 20_000,
            train_freq: 4,
            anneal_fraction: 0.1,
            prefill_fraction: 1.0 / 40.0,
        }
    }
}

/// One SGD iteration as logged by the training loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: u64,
    pub level: usize,
    pub loss: f32,
    pub epsilon: f64,
    pub env_steps: u64,
}

/// Everything a training run did, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    /// `(level, action)` per environment step.
    pub actions: Vec<(usize, Action)>,
    pub rewards: Vec<f64>,
    pub losses: Vec<LossRecord>,
    /// Return of each finished episode.
    pub episode_returns: Vec<f64>,
}

/// Seed of the `index`-th training episode of run `seed`.
pub fn episode_seed(seed: u64, index: u64) -> u64 {
    seed::derive(seed::derive(seed, streams::WORLD), index)
}

/// Prefill length in environment steps.
pub fn prefill_steps(total_iterations: u64, train_freq: u64, fraction: f64) -> u64 {
    Float::round((total_iterations * train_freq) as f64 * fraction) as u64
}

pub struct SingleFrequencyAgent {
    pub config: SingleFrequencyConfig,
    pub learner: Learner,
    pub buffer: ReplayBuffer<Transition>,
    seed: u64,
}

impl SingleFrequencyAgent {
    pub fn new(config: SingleFrequencyConfig, actions: usize, crop: usize, seed: u64) -> Self {
        let mut init = seed::rng(seed, streams::NET_INIT);
        Self {
            learner: Learner::new(config.learner, actions, crop, &mut init),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            seed,
        }
    }

    pub fn train<E: Environment>(&mut self, env: &mut E) -> Result<TrainTrace> {
        let cfg = self.config;
        if env.crop() != self.learner.crop || env.channels() != self.learner.actions() {
            return Err(Error::Config("environment does not match the network".into()));
        }
        let mut explore = seed::rng(self.seed, streams::EXPLORE);
        let mut replay = seed::rng(self.seed, streams::REPLAY);
        let eps = EpsilonSchedule::for_training(cfg.total_iterations, cfg.anneal_fraction);
        let prefill = prefill_steps(cfg.total_iterations, cfg.train_freq, cfg.prefill_fraction);
        let (channels, crop) = (env.channels(), env.crop());
        let mut trace = TrainTrace::default();
        let mut episodes = 0;
        let mut state = env.reset(episode_seed(self.seed, episodes))?;
        let mut ret = 0.0;
        let mut iteration = 0;
        let mut step = 0u64;
        while iteration < cfg.total_iterations {
            let epsilon = if step < prefill { 1.0 } else { eps.value(iteration) };
            let learner = &self.learner;
            let a = select_action_with(epsilon, channels, crop, &mut explore, || decode(&learner.q_map(&state)));
            let out = env.step(a)?;
            trace.actions.push((0, a));
            trace.rewards.push(out.reward);
            ret += out.reward;
            self.buffer.push(Transition {
                s: state,
                a,
                r: out.reward,
                s_next: out.state.clone(),
                done: out.done,
            });
            state = out.state;
            step += 1;
            if out.done {
                trace.episode_returns.push(ret);
                ret = 0.0;
                episodes += 1;
                state = env.reset(episode_seed(self.seed, episodes))?;
            }
            if step > prefill && (step - prefill).is_multiple_of(cfg.train_freq) {
                let loss = match self.learner.sgd_iteration(&self.buffer, &mut replay) {
                    Ok(l) => Some(l),
                    Err(Error::NotReady { .. }) => None,
                    Err(e) => return Err(e),
                };
                if let Some(loss) = loss {
                    trace.losses.push(LossRecord {
                        iteration,
                        level: 0,
                        loss,
                        epsilon: eps.value(iteration),
                        env_steps: step,
                    });
                }
                iteration += 1;
                self.learner.maybe_sync(iteration);
            }
        }
        Ok(trace)
    }
}
