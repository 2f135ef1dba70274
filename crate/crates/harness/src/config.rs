//! Run configuration: a flat TOML file of typed keys, validated into a
//! fully resolved [`Resolved`] description of one experiment.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use blowsim_core::action::RobotVariant;
use blowsim_core::agent::{EnvConfig, TrainerConfig};
use blowsim_core::dqn::LearnerConfig;
use blowsim_core::multifreq::{LevelSchedule, RewardAccumulation};
use blowsim_core::sim::{build_env, EnvKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            _ => bail!("unknown preset {s:?} (expected desk or paper)"),
        }
    }
}

/// Keys accepted in a config file. Missing keys take defaults; unknown
/// keys are an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: String,
    pub robot: String,
    pub levels: usize,
    pub k: usize,
    pub blow_force: f64,
    pub reward_accumulation: bool,
    /// Defaults to on for blowing robots and off for pushing.
    pub collision_penalty: Option<bool>,
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub out_dir: String,
    pub iterations: Option<u64>,
    pub batch_size: Option<usize>,
    pub buffer_size: Option<usize>,
    pub objects: Option<usize>,
    pub crop: Option<usize>,
    pub target_sync: Option<u64>,
    pub eval_episodes: Option<usize>,
    pub eval_max_steps: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: "small_empty".into(),
            robot: "blowing".into(),
            levels: 2,
            k: 4,
            blow_force: 0.35,
            reward_accumulation: true,
            collision_penalty: None,
            preset: Preset::Desk,
            seeds: vec![0],
            out_dir: "runs/default".into(),
            iterations: None,
            batch_size: None,
            buffer_size: None,
            objects: None,
            crop: None,
            target_sync: None,
            eval_episodes: None,
            eval_max_steps: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid config file")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets one key from its text form, as a sweep axis does.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut table: toml::Table = toml::from_str(&self.to_toml())?;
        let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("key v"),
            Err(_) => toml::Value::String(value.to_string()),
        };
        let parsed = match (key, parsed) {
            ("seeds", toml::Value::Integer(i)) => toml::Value::Array(vec![toml::Value::Integer(i)]),
            (_, v) => v,
        };
        table.insert(key.to_string(), parsed);
        *self = toml::from_str(&toml::to_string(&table)?).with_context(|| format!("setting {key} = {value}"))?;
        Ok(())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        Resolved::from_config(self)
    }
}

/// Everything a run needs, with presets and variant rules applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: RunConfig,
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    pub crop: usize,
    pub eval_episodes: usize,
    pub eval_max_steps: usize,
    pub out_dir: PathBuf,
}

impl Resolved {
    fn from_config(c: &RunConfig) -> Result<Self> {
        let kind: EnvKind = c.env.parse().map_err(|_| {
            anyhow::anyhow!(
                "unknown env {:?} (small_empty, large_empty, large_door, large_center)",
                c.env
            )
        })?;
        let variant: RobotVariant = c.robot.parse().map_err(|_| {
            anyhow::anyhow!(
                "unknown robot {:?} (blowing, blowing_move, side_blower, pushing)",
                c.robot
            )
        })?;
        if !(1..=3).contains(&c.levels) {
            bail!("levels must be 1, 2 or 3 (got {})", c.levels);
        }
        if c.k == 0 {
            bail!("k must be at least 1");
        }
        if !(c.blow_force.is_finite() && c.blow_force > 0.0) {
            bail!("blow_force must be positive (got {})", c.blow_force);
        }
        if c.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        let pushing = variant == RobotVariant::Pushing;
        let collision_penalty = match (pushing, c.collision_penalty) {
            (true, Some(true)) => bail!("the pushing robot runs without the collision penalty"),
            (true, _) => false,
            (false, p) => p.unwrap_or(true),
        };
        let large = kind != EnvKind::SmallEmpty;
        let (iters, buffer, batch, crop, objects, sync, episodes, max_steps) = match c.preset {
            Preset::Desk => (2_000, 2_000, 16, 48, if large { 20 } else { 10 }, 100, 20, 100),
            Preset::Paper => (20_000, 10_000, 32, 96, if large { 100 } else { 50 }, 1_000, 20, 10_000),
        };
        let mut iterations = c.iterations.unwrap_or(iters);
        if pushing && c.iterations.is_none() {
            iterations *= 3;
        }
        let crop = c.crop.unwrap_or(crop);
        if crop == 0 || !crop.is_multiple_of(4) {
            bail!("crop must be a positive multiple of 4 (got {crop})");
        }
        let batch_size = c.batch_size.unwrap_or(batch);
        let buffer_size = c.buffer_size.unwrap_or(buffer);
        if batch_size == 0 || buffer_size < batch_size {
            bail!("need 0 < batch_size <= buffer_size (got {batch_size}, {buffer_size})");
        }
        let env_spec = build_env(kind).with_object_count(c.objects.unwrap_or(objects));
        let mut env = EnvConfig::new(env_spec, variant, crop);
        env.sim.blow_force = c.blow_force;
        env.reward.collision_penalty_enabled = collision_penalty;
        let schedule = LevelSchedule::new(c.levels, c.k)?;
        let mut trainer = TrainerConfig::new(schedule);
        trainer.accumulation = if c.reward_accumulation {
            RewardAccumulation::Accumulate
        } else {
            RewardAccumulation::OwnStepOnly
        };
        trainer.learner = LearnerConfig {
            batch_size,
            target_sync: c.target_sync.unwrap_or(sync),
            ..LearnerConfig::default()
        };
        trainer.buffer_capacity = buffer_size;
        trainer.total_iterations = iterations;
        Ok(Self {
            config: c.clone(),
            env,
            trainer,
            crop,
            eval_episodes: c.eval_episodes.unwrap_or(episodes),
            eval_max_steps: c.eval_max_steps.unwrap_or(max_steps),
            out_dir: PathBuf::from(&c.out_dir),
        })
    }

    pub fn variant(&self) -> RobotVariant {
        self.env.variant
    }

    pub fn schedule(&self) -> LevelSchedule {
        self.trainer.schedule
    }
}
