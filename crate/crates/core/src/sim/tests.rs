use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use super::*;
use crate::math::Vec2;
use crate::sim::world::{Particle, SimParams};

fn empty_world(kind: EnvKind, robot: Pose) -> WorldState {
    let env = build_env(kind).with_object_count(0);
    let mut w = reset(&env, &SimParams::default(), 11).unwrap();
    w.robot = robot;
    w
}

fn add_object(w: &mut WorldState, p: Vec2) {
    w.objects.push(RigidObject {
        position: p,
        velocity: Vec2::ZERO,
        radius: w.params.object_radius,
        mass: w.params.object_mass,
        removed: false,
    });
}

#[test]
fn resting_world_is_a_fixed_point() {
    let env = build_env(EnvKind::LargeEmpty);
    let mut w = reset(&env, &SimParams::default(), 5).unwrap();
    let before = w.clone();
    for _ in 0..50 {
        let ev = {
            let dt = w.params.dt;
            step_physics(&mut w, dt)
        };
        assert_eq!(ev.objects_entered_receptacle, 0);
        assert!(ev.distance_deltas.iter().all(|d| *d == 0.0));
    }
    assert_eq!(w.objects, before.objects);
    assert_eq!(w.robot, before.robot);
    assert!(w.sim_time > before.sim_time);
}

#[test]
fn particle_impulse_is_parallel_to_particle_velocity() {
    let mut w = empty_world(EnvKind::LargeEmpty, Pose::new(0.2, 0.2, 0.0));
    add_object(&mut w, Vec2::new(0.5, 0.5));
    let v = Vec2::new(0.6, 0.25);
    w.particles.push(Particle {
        position: Vec2::new(0.5, 0.5) - v.normalized() * 0.006 + Vec2::new(0.0, 0.002),
        velocity: v,
        remaining_life: 0.5,
        remaining_range: 0.6,
    });
    {
        let dt = w.params.dt;
        step_physics(&mut w, dt)
    };
    let dv = w.objects[0].velocity;
    assert!(dv.norm() > 0.0);
    let angle = Float::abs(dv.cross(v)).atan2(dv.dot(v));
    assert!(angle < 1e-6, "angle {angle}");
    assert!(w.particles.is_empty(), "particle is absorbed on contact");
}

#[test]
fn object_entering_receptacle_matches_hand_integration() {
    let mut w = empty_world(EnvKind::LargeEmpty, Pose::new(0.2, 0.2, 0.0));
    let p0 = Vec2::new(0.80, 0.90);
    let v0 = Vec2::new(0.5, 0.0);
    add_object(&mut w, p0);
    w.objects[0].velocity = v0;
    // oracle: explicit Euler with exponential drag, removal once x >= 0.85
    let prm = w.params;
    let (mut x, mut vx) = (p0.x, v0.x);
    let mut expected = None;
    for step in 1..=200 {
        x += vx * prm.dt;
        vx *= (-prm.drag * prm.dt).exp();
        if vx < prm.velocity_floor {
            vx = 0.0;
        }
        if x >= 0.85 {
            expected = Some(step);
            break;
        }
    }
    let expected = expected.expect("oracle predicts entry");
    let mut entered_at = None;
    for step in 1..=200 {
        let ev = step_physics(&mut w, prm.dt);
        if ev.objects_entered_receptacle > 0 {
            assert_eq!(ev.objects_entered_receptacle, 1);
            let d = ev.distance_deltas[0];
            assert!(d < 0.0, "final delta brings the object to zero distance");
            entered_at = Some(step);
            break;
        }
    }
    assert_eq!(entered_at, Some(expected));
    assert!(w.objects[0].removed);
    assert_eq!(w.object_distance(0), 0.0);
}

#[test]
fn zero_force_blow_spawns_nothing() {
    let mut w = empty_world(EnvKind::SmallEmpty, Pose::new(0.3, 0.25, 0.0));
    emit_blow(&mut w, 0.0);
    assert!(w.particles.is_empty());
}

#[test]
fn particle_speed_scales_with_force() {
    let mut w = empty_world(EnvKind::SmallEmpty, Pose::new(0.3, 0.25, 0.0));
    emit_blow(&mut w, 0.35);
    assert_eq!(w.particles.len(), 5);
    for p in &w.particles {
        assert!((p.velocity.norm() - 0.35 * 2.0).abs() < 1e-12);
        let off = (p.velocity.angle() - 0.0).abs();
        assert!(off <= 15.0 * PI / 180.0 + 1e-12);
    }
}

fn sweep_displacement(force: f64, seed: u64) -> f64 {
    // robot at the left of an open floor turning 90 degrees across an object
    let env = build_env(EnvKind::LargeEmpty).with_object_count(0);
    let params = SimParams {
        blow_force: force,
        ..SimParams::default()
    };
    let mut w = reset(&env, &params, seed).unwrap();
    w.robot = Pose::new(0.3, 0.3, -PI / 4.0);
    let target = Vec2::new(0.3 + 0.15 * (PI / 4.0).cos(), 0.3 + 0.15 * (PI / 4.0).sin());
    add_object(&mut w, target);
    let p = Primitive::TurnInPlace {
        target: Vec2::new(0.3, 0.8),
        blower_on: true,
    };
    execute_primitive(&mut w, &p);
    (w.objects[0].position - target).norm()
}

#[test]
fn one_blow_moves_an_object_a_few_centimeters() {
    let mut total = 0.0;
    for seed in 0..5 {
        total += sweep_displacement(0.35, seed);
    }
    let mean = total / 5.0;
    assert!((0.05..=0.15).contains(&mean), "mean displacement {mean}");
}

#[test]
fn stronger_blow_moves_objects_further() {
    for seed in 0..3 {
        let weak = sweep_displacement(0.2, seed);
        let strong = sweep_displacement(0.65, seed);
        assert!(strong > weak, "seed {seed}: {strong} <= {weak}");
    }
}

#[test]
fn turn_towards_point_ahead_is_a_no_op() {
    let mut w = empty_world(EnvKind::SmallEmpty, Pose::new(0.3, 0.25, 0.0));
    add_object(&mut w, Vec2::new(0.6, 0.3));
    let before = w.clone();
    let ev = execute_primitive(
        &mut w,
        &Primitive::TurnInPlace {
            target: Vec2::new(0.6, 0.25),
            blower_on: false,
        },
    );
    assert_eq!(ev.substeps, 0);
    assert_eq!(ev.objects_entered_receptacle, 0);
    assert!(!ev.robot_collision);
    assert_eq!(w.robot, before.robot);
    assert_eq!(w.objects, before.objects);
}

#[test]
fn turn_ends_facing_target() {
    let mut w = empty_world(EnvKind::LargeEmpty, Pose::new(0.5, 0.5, 0.3));
    execute_primitive(
        &mut w,
        &Primitive::TurnInPlace {
            target: Vec2::new(0.1, 0.2),
            blower_on: false,
        },
    );
    let want = Vec2::new(-0.4, -0.3).angle();
    assert!((crate::math::wrap_angle(w.robot.theta - want)).abs() <= super::primitive::TURN_TOLERANCE);
}

#[test]
fn move_into_wall_stops_with_collision() {
    let mut w = empty_world(EnvKind::SmallEmpty, Pose::new(0.5, 0.25, 0.0));
    let ev = execute_primitive(
        &mut w,
        &Primitive::MoveTo {
            waypoints: vec![Vec2::new(0.8, 0.25), Vec2::new(1.1, 0.25)],
            blower_on: false,
        },
    );
    assert!(ev.robot_collision);
    let clearance = w.env().width - w.robot.x;
    assert!(clearance >= w.params.robot_radius);
    assert!(clearance < w.params.robot_radius + 0.01);
}

#[test]
fn empty_move_is_a_no_op() {
    let mut w = empty_world(EnvKind::SmallEmpty, Pose::new(0.5, 0.25, 0.0));
    let ev = execute_primitive(
        &mut w,
        &Primitive::MoveTo {
            waypoints: Vec::new(),
            blower_on: true,
        },
    );
    assert_eq!(ev, StepEvents::empty(0));
}

#[test]
fn blowing_turn_displaces_a_flanking_object() {
    let mut w = empty_world(EnvKind::LargeEmpty, Pose::new(0.5, 0.5, 0.0));
    let obj = Vec2::new(0.5 + 0.12 * (PI / 4.0).cos(), 0.5 + 0.12 * (PI / 4.0).sin());
    add_object(&mut w, obj);
    let ev = execute_primitive(
        &mut w,
        &Primitive::TurnInPlace {
            target: Vec2::new(0.5, 0.9),
            blower_on: true,
        },
    );
    assert!(ev.substeps > 0);
    assert!((w.robot.theta - PI / 2.0).abs() < 1e-9);
    assert!((w.objects[0].position - obj).norm() > 0.0);
}

#[test]
fn pushing_moves_objects_by_contact() {
    let mut w = empty_world(EnvKind::LargeEmpty, Pose::new(0.3, 0.5, 0.0));
    add_object(&mut w, Vec2::new(0.4, 0.5));
    execute_primitive(
        &mut w,
        &Primitive::MoveTo {
            waypoints: vec![Vec2::new(0.6, 0.5)],
            blower_on: false,
        },
    );
    let o = w.objects[0].position;
    assert!(o.x >= 0.6 + w.params.robot_radius, "object at {o:?}");
}

#[test]
fn particles_reflect_off_walls() {
    let mut w = empty_world(EnvKind::SmallEmpty, Pose::new(0.9, 0.1, 0.0));
    w.particles.push(Particle {
        position: Vec2::new(0.999, 0.2),
        velocity: Vec2::new(1.0, 0.0),
        remaining_life: 0.5,
        remaining_range: 0.6,
    });
    {
        let dt = w.params.dt;
        step_physics(&mut w, dt)
    };
    let p = w.particles[0];
    assert!(p.position.x <= 1.0);
    assert!((p.velocity.x - (-0.6)).abs() < 1e-12);
}

#[test]
fn conservation_and_wall_bound_under_blowing() {
    let env = build_env(EnvKind::LargeDoor).with_object_count(30);
    let mut w = reset(&env, &SimParams::default(), 21).unwrap();
    let n = w.objects.len();
    let mut removed_before = 0;
    for i in 0..12 {
        let target = w.robot.position() + Vec2::from_angle(i as f64 * 2.1) * 0.3;
        execute_primitive(
            &mut w,
            &Primitive::TurnInPlace {
                target,
                blower_on: true,
            },
        );
        assert_eq!(w.active_count() + w.removed_count(), n);
        assert!(w.removed_count() >= removed_before);
        removed_before = w.removed_count();
        for o in w.objects.iter().filter(|o| !o.removed) {
            assert!(env.clearance(o.position) >= -1e-3);
        }
    }
}
