//! Episode bookkeeping: reward per decision step and the termination rule.

use alloc::vec::Vec;

use crate::sim::{compute_reward, execute_primitive, Primitive, RewardConfig, StepEvents, WorldState};
use crate::{Error, Result};

/// Consecutive steps without a success that end an episode.
pub const FRUITLESS_LIMIT: usize = 100;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeState {
    pub objects_collected: usize,
    pub steps_since_last_success: usize,
    pub total_steps: usize,
    pub collisions: usize,
    pub rewards: Vec<f64>,
    pub done: bool,
}

impl EpisodeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Applies one step's events; returns `(reward, done)`.
    pub fn record(&mut self, world: &WorldState, events: &StepEvents, cfg: &RewardConfig) -> Result<(f64, bool)> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let r = compute_reward(events, cfg);
        self.rewards.push(r);
        self.total_steps += 1;
        self.objects_collected += events.objects_entered_receptacle;
        if events.robot_collision {
            self.collisions += 1;
        }
        if events.objects_entered_receptacle > 0 {
            self.steps_since_last_success = 0;
        } else {
            self.steps_since_last_success += 1;
        }
        self.done = world.active_count() == 0 || self.steps_since_last_success >= FRUITLESS_LIMIT;
        Ok((r, self.done))
    }
}

/// Executes `p`, scores it and updates the episode. Fails without touching
/// the world once the episode is over.
pub fn step_episode(
    world: &mut WorldState,
    p: &Primitive,
    ep: &mut EpisodeState,
    cfg: &RewardConfig,
) -> Result<(f64, bool, StepEvents)> {
    if ep.done {
        return Err(Error::EpisodeDone);
    }
    let ev = execute_primitive(world, p);
    let (r, done) = ep.record(world, &ev, cfg)?;
    Ok((r, done, ev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec2;
    use crate::sim::{build_env, reset, EnvKind, SimParams};
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn events(entered: usize, n: usize) -> StepEvents {
        StepEvents {
            objects_entered_receptacle: entered,
            distance_deltas: vec![0.0; n],
            ..Default::default()
        }
    }

    fn world(objects: usize) -> WorldState {
        reset(
            &build_env(EnvKind::SmallEmpty).with_object_count(objects),
            &SimParams::default(),
            3,
        )
        .unwrap()
    }

    #[test]
    fn last_object_ends_episode() {
        let mut w = world(1);
        let mut ep = EpisodeState::new();
        w.objects[0].removed = true;
        let (r, done) = ep.record(&w, &events(1, 1), &RewardConfig::default()).unwrap();
        assert_eq!(r, 1.0);
        assert!(done);
        assert_eq!(
            ep.record(&w, &events(0, 1), &RewardConfig::default()),
            Err(Error::EpisodeDone)
        );
    }

    #[test]
    fn fruitless_limit_and_reset() {
        let w = world(3);
        let cfg = RewardConfig::default();
        let mut ep = EpisodeState::new();
        for _ in 0..99 {
            assert!(!ep.record(&w, &events(0, 3), &cfg).unwrap().1);
        }
        // step 100 succeeds: counter resets
        assert!(!ep.record(&w, &events(1, 3), &cfg).unwrap().1);
        assert_eq!(ep.steps_since_last_success, 0);
        for _ in 0..99 {
            assert!(!ep.record(&w, &events(0, 3), &cfg).unwrap().1);
        }
        assert!(ep.record(&w, &events(0, 3), &cfg).unwrap().1);
    }

    #[test]
    fn done_episode_cannot_mutate_world() {
        let mut w = world(2);
        let mut ep = EpisodeState {
            done: true,
            ..Default::default()
        };
        let before = w.robot;
        let p = Primitive::MoveTo {
            waypoints: vec![before.position() + Vec2::new(0.05, 0.0)],
            blower_on: true,
        };
        assert!(matches!(
            step_episode(&mut w, &p, &mut ep, &RewardConfig::default()),
            Err(Error::EpisodeDone)
        ));
        assert_eq!(w.robot, before);
        assert!(w.particles.is_empty());
    }

    #[test]
    fn rewards_telescope() {
        let cfg = RewardConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut w = reset(
            &build_env(EnvKind::SmallEmpty).with_object_count(8),
            &SimParams::default(),
            11,
        )
        .unwrap();
        let d0 = w.total_distance();
        let mut ep = EpisodeState::new();
        for _ in 0..25 {
            let here = w.robot.position();
            let target = Vec2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..0.5));
            let p = if rng.random_bool(0.5) {
                Primitive::TurnInPlace {
                    target,
                    blower_on: true,
                }
            } else {
                Primitive::MoveTo {
                    waypoints: vec![here + (target - here) * 0.3, target],
                    blower_on: rng.random_bool(0.5),
                }
            };
            if step_episode(&mut w, &p, &mut ep, &cfg).unwrap().1 {
                break;
            }
        }
        let want = ep.objects_collected as f64 + (d0 - w.total_distance()) - 0.25 * ep.collisions as f64;
        assert!(
            (ep.total_reward() - want).abs() < 1e-9,
            "{} vs {want}",
            ep.total_reward()
        );
    }
}
