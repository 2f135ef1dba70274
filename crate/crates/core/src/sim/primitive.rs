//! Movement primitives executed through physics substeps.

use alloc::vec::Vec;
use num_traits::Float;

use super::physics::{advance, emit_blow, StepEvents};
use super::world::WorldState;
use crate::math::{wrap_angle, Vec2};

/// Heading tolerance for considering a turn complete (1 degree).
pub const TURN_TOLERANCE: f64 = core::f64::consts::PI / 180.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// Rotate in place until facing `target`.
    TurnInPlace { target: Vec2, blower_on: bool },
    /// Follow `waypoints` in order, turning to face each one before driving.
    MoveTo { waypoints: Vec<Vec2>, blower_on: bool },
}

impl Primitive {
    pub fn blower_on(&self) -> bool {
        match self {
            Primitive::TurnInPlace { blower_on, .. } | Primitive::MoveTo { blower_on, .. } => *blower_on,
        }
    }
}

/// Runs a primitive to completion, then lets the world settle (no blowing,
/// robot still) until particles are gone and objects rest or the settle cap
/// elapses. Events cover the whole span; distance deltas are end minus start.
pub fn execute_primitive(state: &mut WorldState, p: &Primitive) -> StepEvents {
    let before: Vec<f64> = (0..state.objects.len()).map(|i| state.object_distance(i)).collect();
    let mut ev = StepEvents::empty(state.objects.len());
    match p {
        Primitive::TurnInPlace { target, blower_on } => {
            let to = *target - state.robot.position();
            if to.norm_sq() > 0.0 {
                turn_towards(state, to.angle(), *blower_on, &mut ev);
            }
        }
        Primitive::MoveTo { waypoints, blower_on } => {
            for &w in waypoints {
                if !drive_to(state, w, *blower_on, &mut ev) {
                    break;
                }
            }
        }
    }
    state.robot_velocity = Vec2::ZERO;
    settle(state, &mut ev);
    for (i, d0) in before.into_iter().enumerate() {
        ev.distance_deltas[i] = state.object_distance(i) - d0;
    }
    ev
}

fn substep(state: &mut WorldState, blower_on: bool, ev: &mut StepEvents) {
    if blower_on {
        emit_blow(state, state.params.blow_force);
    }
    let dt = state.params.dt;
    advance(state, dt, ev);
}

fn turn_towards(state: &mut WorldState, bearing: f64, blower_on: bool, ev: &mut StepEvents) {
    let step = state.params.angular_speed * state.params.dt;
    state.robot_velocity = Vec2::ZERO;
    loop {
        let remaining = wrap_angle(bearing - state.robot.theta);
        if remaining.abs() <= 1e-12 {
            break;
        }
        let d = if remaining.abs() <= step {
            remaining
        } else {
            step.copysign(remaining)
        };
        state.robot.theta = if remaining.abs() <= step {
            wrap_angle(bearing)
        } else {
            wrap_angle(state.robot.theta + d)
        };
        substep(state, blower_on, ev);
    }
}

/// Turns to face `goal` and drives to it. Returns false after a collision.
fn drive_to(state: &mut WorldState, goal: Vec2, blower_on: bool, ev: &mut StepEvents) -> bool {
    let to = goal - state.robot.position();
    let dist = to.norm();
    if dist <= 1e-12 {
        return true;
    }
    let bearing = to.angle();
    if wrap_angle(bearing - state.robot.theta).abs() > TURN_TOLERANCE {
        turn_towards(state, bearing, blower_on, ev);
    }
    let step = state.params.linear_speed * state.params.dt;
    let rr = state.params.robot_radius;
    loop {
        let here = state.robot.position();
        let left = (goal - here).norm();
        if left <= 1e-12 {
            state.robot_velocity = Vec2::ZERO;
            return true;
        }
        let dir = (goal - here) * (1.0 / left);
        let next = if left <= step { goal } else { here + dir * step };
        if state.layout.env.clearance(next) < rr {
            state.robot_velocity = Vec2::ZERO;
            ev.robot_collision = true;
            return false;
        }
        state.robot.x = next.x;
        state.robot.y = next.y;
        state.robot_velocity = dir * state.params.linear_speed;
        substep(state, blower_on, ev);
    }
}

fn settle(state: &mut WorldState, ev: &mut StepEvents) {
    let dt = state.params.dt;
    let max_steps = Float::ceil(state.params.settle_cap / dt) as usize;
    for _ in 0..max_steps {
        if state.is_at_rest() {
            break;
        }
        advance(state, dt, ev);
    }
}
