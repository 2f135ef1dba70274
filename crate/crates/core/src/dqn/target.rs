use crate::action::argmax_first;

/// Double-DQN bootstrap target: the online map picks the next action, the
/// target map values it.
pub fn td_target(r: f64, done: bool, q_online_next: &[f32], q_target_next: &[f32], gamma: f64) -> f64 {
    if done {
        return r;
    }
    assert_eq!(q_online_next.len(), q_target_next.len());
    let a = argmax_first(q_online_next);
    r + gamma * q_target_next[a] as f64
}

/// Hard copy of the online parameters every `period` iterations. Returns
/// whether a copy happened.
pub fn sync_target<T: Clone>(online: &[T], target: &mut [T], iteration: u64, period: u64) -> bool {
    if period == 0 || iteration == 0 || !iteration.is_multiple_of(period) {
        return false;
    }
    target.clone_from_slice(online);
    true
}
