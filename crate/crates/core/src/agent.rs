//! Environment interface, the blowing-robot environment, the multi-level
//! trainer and evaluation rollouts.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{decode, to_primitive, Action, PrimitiveContext, RobotVariant};
use crate::dqn::{
    episode_seed, prefill_steps, select_action_with, EpsilonSchedule, Learner, LearnerConfig, LossRecord, ReplayBuffer,
    TrainTrace, Transition,
};
use crate::episode::{step_episode, EpisodeState};
use crate::mapping::state::{StateParams, CHANNELS};
use crate::mapping::{egocentric_state, fuse, sense, GlobalMaps, SensorParams, StateTensor};
use crate::multifreq::{LevelSchedule, PendingSet, RewardAccumulation};
use crate::nn::QNetwork;
use crate::seed::{self, streams};
use crate::sim::{reset_with_layout, EnvSpec, Layout, RewardConfig, SimParams, WorldState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: StateTensor,
    pub reward: f64,
    pub done: bool,
    /// Objects that reached the receptacle during this step.
    pub collected: usize,
}

/// A decision-step environment seen through state tensors.
pub trait Environment {
    /// Action channels.
    fn channels(&self) -> usize;
    /// Side of the square state crop.
    fn crop(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<StateTensor>;
    fn step(&mut self, a: Action) -> Result<StepOutcome>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub env: EnvSpec,
    pub sim: SimParams,
    pub sensor: SensorParams,
    pub reward: RewardConfig,
    pub variant: RobotVariant,
    pub crop: usize,
}

impl EnvConfig {
    pub fn new(env: EnvSpec, variant: RobotVariant, crop: usize) -> Self {
        let mut sim = SimParams::default();
        if let Some(m) = variant.blower_mount() {
            sim.blower.mount = m;
        }
        let mut reward = RewardConfig::default();
        if variant == RobotVariant::Pushing {
            reward.collision_penalty_enabled = false;
        }
        Self {
            env,
            sim,
            sensor: SensorParams::default(),
            reward,
            variant,
            crop,
        }
    }
}

/// The simulated robot with online mapping. Sensing happens once per
/// decision step, after the primitive has finished and the world settled.
pub struct BlowingEnv {
    pub config: EnvConfig,
    layout: Arc<Layout>,
    world: WorldState,
    maps: GlobalMaps,
    episode: EpisodeState,
}

impl BlowingEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        if config.crop == 0 || !config.crop.is_multiple_of(4) {
            return Err(Error::Config(alloc::format!(
                "crop {} must be a positive multiple of 4",
                config.crop
            )));
        }
        let layout = Arc::new(Layout::new(config.env.clone(), config.sim.resolution));
        let world = reset_with_layout(layout.clone(), &config.sim, 0)?;
        let maps = GlobalMaps::new(&layout.grid);
        Ok(Self {
            config,
            layout,
            world,
            maps,
            episode: EpisodeState::new(),
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn maps(&self) -> &GlobalMaps {
        &self.maps
    }

    pub fn episode(&self) -> &EpisodeState {
        &self.episode
    }

    fn observe(&mut self) -> StateTensor {
        let obs = sense(&self.world, &self.config.sensor);
        fuse(&mut self.maps, &obs);
        let params = StateParams {
            crop: self.config.crop,
            robot_radius: self.config.sim.robot_radius,
            normalizer: self.config.env.diagonal(),
        };
        egocentric_state(&self.maps, &self.world.robot, &self.layout.receptacle_cells, &params)
    }
}

impl Environment for BlowingEnv {
    fn channels(&self) -> usize {
        self.config.variant.num_channels()
    }

    fn crop(&self) -> usize {
        self.config.crop
    }

    fn reset(&mut self, seed: u64) -> Result<StateTensor> {
        self.world = reset_with_layout(self.layout.clone(), &self.config.sim, seed)?;
        self.maps = GlobalMaps::new(&self.layout.grid);
        self.episode = EpisodeState::new();
        Ok(self.observe())
    }

    fn step(&mut self, a: Action) -> Result<StepOutcome> {
        if self.episode.done {
            return Err(Error::EpisodeDone);
        }
        let pose = self.world.robot;
        let p = to_primitive(
            a,
            &PrimitiveContext {
                pose: &pose,
                occupancy: &self.maps.occupancy,
                resolution: self.maps.resolution,
                crop: self.config.crop,
                robot_radius: self.config.sim.robot_radius,
                variant: self.config.variant,
            },
        );
        let (reward, done, ev) = step_episode(&mut self.world, &p, &mut self.episode, &self.config.reward)?;
        Ok(StepOutcome {
            state: self.observe(),
            reward,
            done,
            collected: ev.objects_entered_receptacle,
        })
    }
}

/// Cheap deterministic environment for exercising the learning loops: a
/// marker cell moves at random and choosing it pays off.
#[derive(Debug, Clone)]
pub struct ScriptedEnv {
    pub channels: usize,
    pub crop: usize,
    pub episode_len: usize,
    rng: ChaCha8Rng,
    target: (usize, usize),
    steps: usize,
}

impl ScriptedEnv {
    pub fn new(channels: usize, crop: usize, episode_len: usize) -> Self {
        Self {
            channels,
            crop,
            episode_len,
            rng: ChaCha8Rng::seed_from_u64(0),
            target: (0, 0),
            steps: 0,
        }
    }

    fn state(&self) -> StateTensor {
        let mut s = StateTensor::zeros(self.crop);
        let n = self.crop * self.crop;
        s.data[self.target.0 * self.crop + self.target.1] = 255;
        s.data[n + (self.crop / 2) * self.crop + self.crop / 2] = 255;
        s.data[2 * n + self.steps % n] = 128;
        s
    }

    fn move_target(&mut self) {
        self.target = (self.rng.random_range(0..self.crop), self.rng.random_range(0..self.crop));
    }
}

impl Environment for ScriptedEnv {
    fn channels(&self) -> usize {
        self.channels
    }

    fn crop(&self) -> usize {
        self.crop
    }

    fn reset(&mut self, seed: u64) -> Result<StateTensor> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.steps = 0;
        self.move_target();
        Ok(self.state())
    }

    fn step(&mut self, a: Action) -> Result<StepOutcome> {
        if self.steps >= self.episode_len {
            return Err(Error::EpisodeDone);
        }
        let hit = (a.row, a.col) == self.target;
        let dist = a.row.abs_diff(self.target.0) + a.col.abs_diff(self.target.1);
        let reward = if hit {
            1.0 + a.channel as f64 * 0.5
        } else {
            -(dist as f64) / (4 * self.crop) as f64
        };
        self.steps += 1;
        self.move_target();
        Ok(StepOutcome {
            state: self.state(),
            reward,
            done: self.steps >= self.episode_len,
            collected: hit as usize,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerConfig {
    pub schedule: LevelSchedule,
    pub accumulation: RewardAccumulation,
    pub learner: LearnerConfig,
    pub buffer_capacity: usize,
    pub total_iterations: u64,
    /// Environment steps per SGD iteration; `None` picks 4 for one level
    /// and the cycle length otherwise.
    pub train_freq: Option<u64>,
    pub anneal_fraction: f64,
    pub prefill_fraction: f64,
}

impl TrainerConfig {
    pub fn new(schedule: LevelSchedule) -> Self {
        Self {
            schedule,
            accumulation: RewardAccumulation::Accumulate,
            learner: LearnerConfig::default(),
            buffer_capacity: 10_000,
            total_iterations: 20_000,
            train_freq: None,
            anneal_fraction: 0.1,
            prefill_fraction: 1.0 / 40.0,
        }
    }

    pub fn effective_train_freq(&self) -> u64 {
        self.train_freq.unwrap_or(if self.schedule.n == 1 {
            4
        } else {
            self.schedule.cycle_len() as u64
        })
    }
}

/// One subpolicy: networks, optimizer and replay.
pub struct LevelRuntime {
    pub learner: Learner,
    pub buffer: ReplayBuffer<Transition>,
    pub steps: u64,
}

pub struct Trainer {
    pub config: TrainerConfig,
    pub levels: Vec<LevelRuntime>,
    pub iteration: u64,
    pub env_steps: u64,
    seed: u64,
}

impl Trainer {
    /// Level networks are initialized in level order from one stream.
    pub fn new(config: TrainerConfig, actions: usize, crop: usize, seed: u64) -> Self {
        let mut init = seed::rng(seed, streams::NET_INIT);
        let levels = (0..config.schedule.n)
            .map(|_| LevelRuntime {
                learner: Learner::new(config.learner, actions, crop, &mut init),
                buffer: ReplayBuffer::new(config.buffer_capacity),
                steps: 0,
            })
            .collect();
        Self {
            config,
            levels,
            iteration: 0,
            env_steps: 0,
            seed,
        }
    }

    pub fn networks(&self) -> Vec<&QNetwork<f32>> {
        self.levels.iter().map(|l| &l.learner.online).collect()
    }

    /// Runs prefill and training to the configured iteration count.
    /// `on_loss` sees every SGD iteration as it happens.
    pub fn train<E: Environment>(&mut self, env: &mut E, on_loss: &mut dyn FnMut(&LossRecord)) -> Result<TrainTrace> {
        let cfg = self.config;
        let (channels, crop) = (env.channels(), env.crop());
        if self
            .levels
            .iter()
            .any(|l| l.learner.crop != crop || l.learner.actions() != channels)
        {
            return Err(Error::Config("environment does not match the networks".into()));
        }
        let cycle = cfg.schedule.cycle();
        let freq = cfg.effective_train_freq();
        let prefill = prefill_steps(cfg.total_iterations, freq, cfg.prefill_fraction);
        let eps = EpsilonSchedule::for_training(cfg.total_iterations, cfg.anneal_fraction);
        let mut explore = seed::rng(self.seed, streams::EXPLORE);
        let mut replay = seed::rng(self.seed, streams::REPLAY);
        let mut pending = PendingSet::new(cfg.schedule.n, cfg.accumulation);
        let mut trace = TrainTrace::default();
        let mut episodes = 0;
        let mut state = env.reset(episode_seed(self.seed, episodes))?;
        let mut ret = 0.0;
        let mut pos = 0;
        while self.iteration < cfg.total_iterations {
            let level = cycle[pos];
            let epsilon = if self.env_steps < prefill {
                1.0
            } else {
                eps.value(self.iteration)
            };
            let learner = &self.levels[level].learner;
            let a = select_action_with(epsilon, channels, crop, &mut explore, || decode(&learner.q_map(&state)));
            pending.record_step(level, state, a)?;
            let out = env.step(a)?;
            pending.accumulate_reward(level, out.reward);
            self.levels[level].steps += 1;
            trace.actions.push((level, a));
            trace.rewards.push(out.reward);
            ret += out.reward;
            state = out.state;
            self.env_steps += 1;
            if out.done {
                for (l, t) in pending.flush(&state) {
                    self.levels[l].buffer.push(t);
                }
                trace.episode_returns.push(ret);
                ret = 0.0;
                episodes += 1;
                state = env.reset(episode_seed(self.seed, episodes))?;
                pos = 0;
            } else {
                pos = (pos + 1) % cycle.len();
                if let Some(t) = pending.commit(cycle[pos], &state, false) {
                    self.levels[cycle[pos]].buffer.push(t);
                }
            }
            if self.env_steps > prefill && (self.env_steps - prefill).is_multiple_of(freq) {
                self.train_tick(&mut replay, &eps, &mut trace, on_loss)?;
            }
        }
        Ok(trace)
    }

    /// One SGD iteration for every level whose buffer can fill a batch,
    /// then the shared counter advances and targets sync on schedule.
    fn train_tick(
        &mut self,
        replay: &mut ChaCha8Rng,
        eps: &EpsilonSchedule,
        trace: &mut TrainTrace,
        on_loss: &mut dyn FnMut(&LossRecord),
    ) -> Result<()> {
        for (l, lv) in self.levels.iter_mut().enumerate() {
            match lv.learner.sgd_iteration(&lv.buffer, replay) {
                Ok(loss) => {
                    let rec = LossRecord {
                        iteration: self.iteration,
                        level: l,
                        loss,
                        epsilon: eps.value(self.iteration),
                        env_steps: self.env_steps,
                    };
                    on_loss(&rec);
                    trace.losses.push(rec);
                }
                Err(Error::NotReady { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        self.iteration += 1;
        for lv in &mut self.levels {
            lv.learner.maybe_sync(self.iteration);
        }
        Ok(())
    }
}

/// How evaluation picks actions.
pub enum Policy<'a> {
    /// Greedy per level under `schedule`.
    Greedy {
        networks: Vec<&'a QNetwork<f32>>,
        schedule: LevelSchedule,
    },
    /// Uniform over all channels and cells.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalEpisode {
    pub episode: usize,
    /// Cumulative objects collected after each decision step.
    pub curve: Vec<usize>,
    /// `counts[level][channel]`: how often each level picked each channel.
    pub channel_counts: Vec<Vec<usize>>,
    pub total_reward: f64,
}

impl EvalEpisode {
    pub fn objects(&self) -> usize {
        self.curve.last().copied().unwrap_or(0)
    }

    /// First decision step (1-based) at which `target` objects were in.
    pub fn steps_to(&self, target: usize) -> Option<usize> {
        self.curve.iter().position(|&c| c >= target).map(|i| i + 1)
    }
}

/// Seed of evaluation episode `index` for run seed `seed`.
pub fn eval_episode_seed(seed: u64, index: u64) -> u64 {
    seed::derive(seed::derive(seed, streams::EVAL), index)
}

/// Rolls out `episodes` episodes of at most `max_steps` decision steps.
pub fn evaluate<E: Environment>(
    env: &mut E,
    policy: &Policy<'_>,
    episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<Vec<EvalEpisode>> {
    let (channels, crop) = (env.channels(), env.crop());
    let (cycle, levels) = match policy {
        Policy::Greedy { networks, schedule } => {
            if networks.len() != schedule.n {
                return Err(Error::Config("one network per level required".into()));
            }
            if networks.iter().any(|n| n.arch.out_channels() != channels) {
                return Err(Error::Shape("network channels differ from the environment".into()));
            }
            (schedule.cycle(), schedule.n)
        }
        Policy::Random => (vec![0], 1),
    };
    let mut rng = seed::rng(seed, streams::EVAL);
    let mut out = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mut state = env.reset(eval_episode_seed(seed, e as u64))?;
        let mut ep = EvalEpisode {
            episode: e,
            curve: Vec::new(),
            channel_counts: vec![vec![0; channels]; levels],
            total_reward: 0.0,
        };
        let mut collected = 0;
        let mut pos = 0;
        for _ in 0..max_steps {
            let level = cycle[pos];
            let a = match policy {
                Policy::Greedy { networks, .. } => {
                    let (x, _) = crate::dqn::stack_states(core::iter::once(&state), crop);
                    let q = networks[level].forward(&x, 1, crop, crop)?;
                    decode(&crate::action::ActionMap::new(channels, crop, q))
                }
                Policy::Random => select_action_with(1.0, channels, crop, &mut rng, || unreachable!()),
            };
            ep.channel_counts[level][a.channel] += 1;
            let o = env.step(a)?;
            collected += o.collected;
            ep.curve.push(collected);
            ep.total_reward += o.reward;
            state = o.state;
            pos = (pos + 1) % cycle.len();
            if o.done {
                break;
            }
        }
        out.push(ep);
    }
    Ok(out)
}

/// Number of input channels every network in this crate expects.
pub const STATE_CHANNELS: usize = CHANNELS;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::{SingleFrequencyAgent, SingleFrequencyConfig};
    use crate::sim::{build_env, EnvKind};

    fn small_learner() -> LearnerConfig {
        LearnerConfig {
            batch_size: 4,
            target_sync: 10,
            ..Default::default()
        }
    }

    fn toy_trainer(n: usize, seed: u64, iters: u64) -> (Trainer, TrainTrace) {
        let mut cfg = TrainerConfig::new(LevelSchedule::new(n, 2).unwrap());
        cfg.learner = small_learner();
        cfg.buffer_capacity = 200;
        cfg.total_iterations = iters;
        let mut t = Trainer::new(cfg, 2, 8, seed);
        let mut env = ScriptedEnv::new(2, 8, 30);
        let trace = t.train(&mut env, &mut |_| {}).unwrap();
        (t, trace)
    }

    #[test]
    fn same_seed_same_losses() {
        let (_, a) = toy_trainer(2, 7, 100);
        let (_, b) = toy_trainer(2, 7, 100);
        // the first ticks may find level 0 short of a batch
        assert!(a.losses.len() >= 190);
        assert_eq!(a, b);
        let (_, c) = toy_trainer(2, 8, 100);
        assert_ne!(a.losses, c.losses);
    }

    #[test]
    fn single_level_matches_standalone_agent() {
        let (t, multi) = toy_trainer(1, 3, 60);
        let cfg = SingleFrequencyConfig {
            learner: small_learner(),
            buffer_capacity: 200,
            total_iterations: 60,
            ..Default::default()
        };
        let mut agent = SingleFrequencyAgent::new(cfg, 2, 8, 3);
        let single = agent.train(&mut ScriptedEnv::new(2, 8, 30)).unwrap();
        assert_eq!(multi, single);
        assert_eq!(t.levels[0].learner.online.params, agent.learner.online.params);
    }

    #[test]
    fn sgd_pace_per_cycle() {
        // n=2, k=2: 3 env steps per iteration
        let (t, trace) = toy_trainer(2, 1, 50);
        let prefill = prefill_steps(50, 3, 1.0 / 40.0);
        assert_eq!(t.env_steps, prefill + 150);
        assert_eq!(trace.actions.len() as u64, t.env_steps);
        // episodes of 30 steps hold whole cycles
        assert_eq!(t.levels[0].steps, t.env_steps.div_ceil(3));
    }

    #[test]
    fn blowing_env_runs_an_episode_step() {
        let env = build_env(EnvKind::SmallEmpty).with_object_count(5);
        let mut e = BlowingEnv::new(EnvConfig::new(env, RobotVariant::BlowingTurn, 32)).unwrap();
        let s = e.reset(1).unwrap();
        assert_eq!(s.size, 32);
        // the robot sees its own footprint at the crop center
        assert_eq!(s.code(1, 16, 16), 255);
        let o = e.step(Action::new(1, 8, 20)).unwrap();
        assert!(!o.done);
        assert_eq!(e.episode().total_steps, 1);
        assert!(e.maps().observed_count() > 0);
    }

    #[test]
    fn random_and_greedy_eval_shapes() {
        let env = build_env(EnvKind::SmallEmpty).with_object_count(5);
        let mut e = BlowingEnv::new(EnvConfig::new(env, RobotVariant::BlowingTurn, 16)).unwrap();
        let eps = evaluate(&mut e, &Policy::Random, 2, 5, 9).unwrap();
        assert_eq!(eps.len(), 2);
        assert!(eps
            .iter()
            .all(|ep| ep.curve.len() == 5 && ep.curve.windows(2).all(|w| w[0] <= w[1])));
        let net = QNetwork::<f32>::new(
            crate::nn::Architecture::reduced(4, 2),
            &mut ChaCha8Rng::seed_from_u64(1),
        );
        let pol = Policy::Greedy {
            networks: vec![&net, &net],
            schedule: LevelSchedule::new(2, 4).unwrap(),
        };
        let eps = evaluate(&mut e, &pol, 1, 5, 9).unwrap();
        // a zero head always picks channel 0 at cell (0, 0)
        assert_eq!(eps[0].channel_counts, vec![vec![1, 0], vec![4, 0]]);
    }
}
