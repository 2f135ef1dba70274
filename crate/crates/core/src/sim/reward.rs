use super::physics::StepEvents;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub success_reward: f64,
    /// Reward per meter of shortest-path progress towards the receptacle.
    pub partial_coeff: f64,
    pub collision_penalty: f64,
    pub collision_penalty_enabled: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            success_reward: 1.0,
            partial_coeff: 1.0,
            collision_penalty: 0.25,
            collision_penalty_enabled: true,
        }
    }
}

/// Success bonus per entered object, plus progress reward, minus the
/// collision penalty when enabled.
pub fn compute_reward(events: &StepEvents, cfg: &RewardConfig) -> f64 {
    let mut r =
        cfg.success_reward * events.objects_entered_receptacle as f64 + cfg.partial_coeff * events.distance_progress();
    if events.robot_collision && cfg.collision_penalty_enabled {
        r -= cfg.collision_penalty;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn success_only() {
        let ev = StepEvents {
            objects_entered_receptacle: 1,
            distance_deltas: vec![0.0; 3],
            ..Default::default()
        };
        assert_eq!(compute_reward(&ev, &RewardConfig::default()), 1.0);
    }

    #[test]
    fn no_events_is_zero() {
        assert_eq!(compute_reward(&StepEvents::empty(4), &RewardConfig::default()), 0.0);
    }

    #[test]
    fn progress_and_collision() {
        let ev = StepEvents {
            distance_deltas: vec![-0.05, 0.0],
            robot_collision: true,
            ..Default::default()
        };
        let r = compute_reward(&ev, &RewardConfig::default());
        assert!((r - (-0.20)).abs() < 1e-12, "{r}");
        let off = RewardConfig {
            collision_penalty_enabled: false,
            ..RewardConfig::default()
        };
        assert!((compute_reward(&ev, &off) - 0.05).abs() < 1e-12);
    }
}
