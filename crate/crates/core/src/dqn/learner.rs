use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::replay::{ReplayBuffer, Transition};
use super::target::{sync_target, td_target};
use crate::action::ActionMap;
use crate::mapping::state::CHANNELS;
use crate::mapping::StateTensor;
use crate::nn::{loss_and_grad, Architecture, Batch, QNetwork, Sgd, SgdConfig};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub batch_size: usize,
    pub target_sync: u64,
    pub sgd: SgdConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.75,
            batch_size: 32,
            target_sync: 1000,
            sgd: SgdConfig::default(),
        }
    }
}

/// Online and target networks plus optimizer state for one policy.
#[derive(Debug, Clone)]
pub struct Learner {
    pub config: LearnerConfig,
    pub online: QNetwork<f32>,
    pub target: QNetwork<f32>,
    pub opt: Sgd<f32>,
    pub crop: usize,
}

/// Decoded `[B, C, H, W]` network input for a list of states.
pub fn stack_states<'a>(states: impl Iterator<Item = &'a StateTensor>, crop: usize) -> (Vec<f32>, usize) {
    let per = CHANNELS * crop * crop;
    let mut out = Vec::new();
    let mut n = 0;
    for s in states {
        assert_eq!(s.size, crop, "state crop mismatch");
        let start = out.len();
        out.resize(start + per, 0.0);
        s.write_f32(&mut out[start..]);
        n += 1;
    }
    (out, n)
}

impl Learner {
    pub fn new(config: LearnerConfig, actions: usize, crop: usize, rng: &mut impl Rng) -> Self {
        let online = QNetwork::new(Architecture::reduced(CHANNELS, actions), rng);
        Self::from_network(config, online, crop)
    }

    pub fn from_network(config: LearnerConfig, online: QNetwork<f32>, crop: usize) -> Self {
        let n = online.params.len();
        Self {
            config,
            target: online.clone(),
            online,
            opt: Sgd::new(config.sgd, n),
            crop,
        }
    }

    pub fn actions(&self) -> usize {
        self.online.arch.out_channels()
    }

    pub fn q_map(&self, s: &StateTensor) -> ActionMap {
        let (x, _) = stack_states(core::iter::once(s), self.crop);
        let q = self.online.forward(&x, 1, self.crop, self.crop).expect("state shape");
        ActionMap::new(self.actions(), self.crop, q)
    }

    /// One SGD iteration on a uniform batch. Returns the batch loss, or
    /// `NotReady` when the buffer is smaller than the batch.
    pub fn sgd_iteration(&mut self, buffer: &ReplayBuffer<Transition>, rng: &mut impl Rng) -> Result<f32> {
        let idx = buffer.sample_indices(self.config.batch_size, rng)?;
        let batch: Vec<&Transition> = idx.iter().map(|&i| buffer.get(i)).collect();
        let b = batch.len();
        let crop = self.crop;
        let per = self.actions() * crop * crop;
        let (next, _) = stack_states(batch.iter().map(|t| &t.s_next), crop);
        let q_on = self.online.forward(&next, b, crop, crop)?;
        let q_tg = self.target.forward(&next, b, crop, crop)?;
        let targets: Vec<f32> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let sl = i * per..(i + 1) * per;
                td_target(t.r, t.done, &q_on[sl.clone()], &q_tg[sl], self.config.gamma) as f32
            })
            .collect();
        let (inputs, _) = stack_states(batch.iter().map(|t| &t.s), crop);
        let actions: Vec<_> = batch.iter().map(|t| t.a).collect();
        let (loss, mut grads) = loss_and_grad(
            &self.online,
            &Batch {
                inputs: &inputs,
                batch: b,
                size: crop,
                actions: &actions,
                targets: &targets,
            },
        )?;
        self.opt.step(&mut self.online.params, &mut grads);
        Ok(loss)
    }

    /// Target copy when `iteration` is a multiple of the sync period.
    pub fn maybe_sync(&mut self, iteration: u64) -> bool {
        sync_target(
            &self.online.params,
            &mut self.target.params,
            iteration,
            self.config.target_sync,
        )
    }
}

/// Zero-filled placeholder state.
pub fn blank_state(crop: usize) -> StateTensor {
    StateTensor {
        size: crop,
        data: vec![0; CHANNELS * crop * crop],
    }
}
