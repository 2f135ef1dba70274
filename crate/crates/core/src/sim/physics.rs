//! Substep integration: blower particles, object drag, contacts, removal.

use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use super::world::{BlowerMount, Particle, WorldState};
use crate::math::Vec2;

/// What happened during one or more substeps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepEvents {
    pub objects_entered_receptacle: usize,
    /// Per object: change of shortest-path distance to the receptacle, meters.
    /// Objects removed in the span report `0 - distance_before`.
    pub distance_deltas: Vec<f64>,
    pub robot_collision: bool,
    pub substeps: u64,
}

impl StepEvents {
    pub fn empty(objects: usize) -> Self {
        Self {
            distance_deltas: alloc::vec![0.0; objects],
            ..Self::default()
        }
    }

    /// Sum of `-delta` over objects (positive when objects got closer).
    pub fn distance_progress(&self) -> f64 {
        self.distance_deltas.iter().map(|d| -d).sum()
    }
}

/// Unit direction of the nozzle for the current robot heading.
pub fn nozzle_direction(state: &WorldState) -> Vec2 {
    let h = state.robot.heading();
    match state.params.blower.mount {
        BlowerMount::Forward => h,
        BlowerMount::Right => h.right_perp(),
    }
}

/// Spawns one substep worth of blower particles from the nozzle. A force of
/// zero is the blower-off no-op.
pub fn emit_blow(state: &mut WorldState, force: f64) {
    assert!(force >= 0.0 && force.is_finite(), "blow force must be non-negative");
    if force == 0.0 {
        return;
    }
    let bp = state.params.blower;
    let dir = nozzle_direction(state);
    let base = dir.angle();
    let nozzle = state.robot.position() + dir * state.params.robot_radius;
    let speed = force * bp.v_ref;
    for _ in 0..bp.particles_per_substep {
        let a = base + state.rng.random_range(-bp.cone_half_angle..=bp.cone_half_angle);
        state.particles.push(Particle {
            position: nozzle,
            velocity: Vec2::from_angle(a) * speed,
            remaining_life: bp.lifetime,
            remaining_range: bp.range,
        });
    }
}

/// Advances the world by `dt` and reports events, including per-object
/// distance deltas.
pub fn step_physics(state: &mut WorldState, dt: f64) -> StepEvents {
    let before: Vec<f64> = (0..state.objects.len()).map(|i| state.object_distance(i)).collect();
    let mut ev = StepEvents::empty(state.objects.len());
    advance(state, dt, &mut ev);
    for (i, d0) in before.into_iter().enumerate() {
        ev.distance_deltas[i] = state.object_distance(i) - d0;
    }
    ev
}

/// [`step_physics`] without the distance bookkeeping; `ev` collects entries
/// and the substep count.
pub(crate) fn advance(state: &mut WorldState, dt: f64, ev: &mut StepEvents) {
    state.sim_time += dt;
    state.substeps += 1;
    ev.substeps += 1;
    let moving = state.objects.iter().any(|o| !o.removed && o.velocity != Vec2::ZERO);
    if state.particles.is_empty() && !moving && state.robot_velocity == Vec2::ZERO {
        return;
    }
    step_particles(state, dt);
    integrate_objects(state, dt);
    object_contacts(state);
    robot_contacts(state);
    wall_contacts(state);
    let receptacle = state.layout.env.receptacle;
    for o in state.objects.iter_mut().filter(|o| !o.removed) {
        if receptacle.contains(o.position) {
            o.removed = true;
            o.velocity = Vec2::ZERO;
            ev.objects_entered_receptacle += 1;
        }
    }
    check_finite(state);
}

fn check_finite(state: &WorldState) {
    for o in &state.objects {
        assert!(
            o.position.is_finite() && o.velocity.is_finite(),
            "non-finite object state: {o:?}"
        );
    }
    for p in &state.particles {
        assert!(
            p.position.is_finite() && p.velocity.is_finite(),
            "non-finite particle state: {p:?}"
        );
    }
}

/// Earliest parameter t in [0, 1] at which the segment a->b enters the disc.
fn segment_hits_disc(a: Vec2, b: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let d = b - a;
    let f = a - center;
    let c = f.norm_sq() - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let qa = d.norm_sq();
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * f.dot(d);
    let disc = qb * qb - 4.0 * qa * c;
    if disc < 0.0 || qb >= 0.0 {
        return None;
    }
    let t = (-qb - Float::sqrt(disc)) / (2.0 * qa);
    (0.0..=1.0).contains(&t).then_some(t)
}

fn step_particles(state: &mut WorldState, dt: f64) {
    let bp = state.params.blower;
    let env = &state.layout.env;
    let objects = &mut state.objects;
    state.particles.retain_mut(|p| {
        let speed = p.velocity.norm();
        let start = p.position;
        let end = start + p.velocity * dt;
        let mut hit: Option<(f64, usize)> = None;
        for (i, o) in objects.iter().enumerate() {
            if o.removed {
                continue;
            }
            if let Some(t) = segment_hits_disc(start, end, o.position, o.radius) {
                if hit.is_none_or(|(bt, _)| t < bt) {
                    hit = Some((t, i));
                }
            }
        }
        if let Some((_, i)) = hit {
            let o = &mut objects[i];
            let impulse = bp.particle_mass * speed * bp.impulse_gain;
            o.velocity += p.velocity * (impulse / (o.mass * speed));
            return false;
        }
        p.position = end;
        reflect_particle(p, env, bp.wall_restitution);
        p.remaining_life -= dt;
        p.remaining_range -= speed * dt;
        p.remaining_life > 0.0 && p.remaining_range > 0.0
    });
}

fn reflect_particle(p: &mut Particle, env: &super::env::EnvSpec, restitution: f64) {
    let (w, h) = (env.width, env.height);
    if p.position.x < 0.0 {
        p.position.x = -p.position.x * restitution;
        p.velocity.x = -p.velocity.x * restitution;
    } else if p.position.x > w {
        p.position.x = w - (p.position.x - w) * restitution;
        p.velocity.x = -p.velocity.x * restitution;
    }
    if p.position.y < 0.0 {
        p.position.y = -p.position.y * restitution;
        p.velocity.y = -p.velocity.y * restitution;
    } else if p.position.y > h {
        p.position.y = h - (p.position.y - h) * restitution;
        p.velocity.y = -p.velocity.y * restitution;
    }
    for wall in &env.walls {
        if !wall.contains_strict(p.position) {
            continue;
        }
        // reflect across the face with the shallowest penetration
        let pens = [
            (p.position.x - wall.min.x, 0u8),
            (wall.max.x - p.position.x, 1),
            (p.position.y - wall.min.y, 2),
            (wall.max.y - p.position.y, 3),
        ];
        let (depth, face) = pens
            .into_iter()
            .fold((f64::INFINITY, 0u8), |b, c| if c.0 < b.0 { c } else { b });
        match face {
            0 => {
                p.position.x = wall.min.x - depth * restitution;
                p.velocity.x = -p.velocity.x.abs() * restitution;
            }
            1 => {
                p.position.x = wall.max.x + depth * restitution;
                p.velocity.x = p.velocity.x.abs() * restitution;
            }
            2 => {
                p.position.y = wall.min.y - depth * restitution;
                p.velocity.y = -p.velocity.y.abs() * restitution;
            }
            _ => {
                p.position.y = wall.max.y + depth * restitution;
                p.velocity.y = p.velocity.y.abs() * restitution;
            }
        }
    }
}

fn integrate_objects(state: &mut WorldState, dt: f64) {
    let prm = state.params;
    let decay = Float::exp(-prm.drag * dt);
    for o in state.objects.iter_mut().filter(|o| !o.removed) {
        if o.velocity == Vec2::ZERO {
            continue;
        }
        let s = o.velocity.norm();
        if s > prm.max_object_speed {
            o.velocity = o.velocity * (prm.max_object_speed / s);
        }
        o.position += o.velocity * dt;
        o.velocity = o.velocity * decay;
        if o.velocity.norm() < prm.velocity_floor {
            o.velocity = Vec2::ZERO;
        }
    }
}

fn object_contacts(state: &mut WorldState) {
    let e = state.params.object_restitution;
    let n = state.objects.len();
    for i in 0..n {
        if state.objects[i].removed {
            continue;
        }
        for j in (i + 1)..n {
            if state.objects[j].removed {
                continue;
            }
            let (a, b) = (state.objects[i], state.objects[j]);
            if a.velocity == Vec2::ZERO && b.velocity == Vec2::ZERO {
                continue;
            }
            let delta = b.position - a.position;
            let min_d = a.radius + b.radius;
            let d2 = delta.norm_sq();
            if d2 >= min_d * min_d {
                continue;
            }
            let d = Float::sqrt(d2);
            let normal = if d > 0.0 {
                delta * (1.0 / d)
            } else {
                Vec2::new(1.0, 0.0)
            };
            let inv_a = 1.0 / a.mass;
            let inv_b = 1.0 / b.mass;
            let overlap = min_d - d;
            let share_a = inv_a / (inv_a + inv_b);
            let mut na = a;
            let mut nb = b;
            na.position -= normal * (overlap * share_a);
            nb.position += normal * (overlap * (1.0 - share_a));
            let vn = (b.velocity - a.velocity).dot(normal);
            if vn < 0.0 {
                let j_imp = -(1.0 + e) * vn / (inv_a + inv_b);
                na.velocity -= normal * (j_imp * inv_a);
                nb.velocity += normal * (j_imp * inv_b);
            }
            state.objects[i] = na;
            state.objects[j] = nb;
        }
    }
}

fn robot_contacts(state: &mut WorldState) {
    let center = state.robot.position();
    let rv = state.robot_velocity;
    let rr = state.params.robot_radius;
    for o in state.objects.iter_mut().filter(|o| !o.removed) {
        let delta = o.position - center;
        let min_d = rr + o.radius;
        let d2 = delta.norm_sq();
        if d2 >= min_d * min_d {
            continue;
        }
        let d = Float::sqrt(d2);
        let normal = if d > 0.0 { delta * (1.0 / d) } else { rv.normalized() };
        o.position = center + normal * min_d;
        let push = rv.dot(normal);
        let vn = o.velocity.dot(normal);
        if vn < push {
            o.velocity += normal * (push - vn);
        }
    }
}

fn wall_contacts(state: &mut WorldState) {
    let e = state.params.object_restitution;
    let env = &state.layout.env;
    for o in state.objects.iter_mut().filter(|o| !o.removed) {
        let r = o.radius;
        for wall in &env.walls {
            let sd = wall.signed_distance(o.position);
            if sd >= r {
                continue;
            }
            let normal = if sd > 0.0 {
                (o.position - wall.closest_point(o.position)).normalized()
            } else {
                // center inside the wall: leave through the nearest face
                let p = o.position;
                let faces = [
                    (p.x - wall.min.x, Vec2::new(-1.0, 0.0)),
                    (wall.max.x - p.x, Vec2::new(1.0, 0.0)),
                    (p.y - wall.min.y, Vec2::new(0.0, -1.0)),
                    (wall.max.y - p.y, Vec2::new(0.0, 1.0)),
                ];
                faces
                    .into_iter()
                    .fold((f64::INFINITY, Vec2::ZERO), |b, c| if c.0 < b.0 { c } else { b })
                    .1
            };
            o.position += normal * (r - sd);
            let vn = o.velocity.dot(normal);
            if vn < 0.0 {
                o.velocity -= normal * ((1.0 + e) * vn);
            }
        }
        if o.position.x < r {
            o.position.x = r;
            o.velocity.x = o.velocity.x.abs() * e;
        } else if o.position.x > env.width - r {
            o.position.x = env.width - r;
            o.velocity.x = -o.velocity.x.abs() * e;
        }
        if o.position.y < r {
            o.position.y = r;
            o.velocity.y = o.velocity.y.abs() * e;
        } else if o.position.y > env.height - r {
            o.position.y = env.height - r;
            o.velocity.y = -o.velocity.y.abs() * e;
        }
    }
}
