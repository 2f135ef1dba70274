//! Robot-centric multi-channel crop of the fused maps.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::distance::{distance_field_masked, DistanceField, Occupancy, UnknownAs};
use super::maps::{GlobalMaps, OverheadCell};
use crate::grid::{Cell, GridSpec};
use crate::sim::Pose;

pub const CHANNELS: usize = 4;

/// Channel-major `CHANNELS x size x size` tensor stored as 8-bit codes;
/// the real value of a code is `code / 255`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateTensor {
    pub size: usize,
    pub data: Vec<u8>,
}

impl StateTensor {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![0; CHANNELS * size * size],
        }
    }

    #[inline]
    pub fn code(&self, ch: usize, r: usize, c: usize) -> u8 {
        self.data[(ch * self.size + r) * self.size + c]
    }

    #[inline]
    pub fn value(&self, ch: usize, r: usize, c: usize) -> f32 {
        self.code(ch, r, c) as f32 / 255.0
    }

    pub fn channel(&self, ch: usize) -> &[u8] {
        let n = self.size * self.size;
        &self.data[ch * n..(ch + 1) * n]
    }

    /// Writes the decoded values into `out` (length `CHANNELS*size*size`).
    pub fn write_f32(&self, out: &mut [f32]) {
        assert_eq!(out.len(), self.data.len());
        for (o, &c) in out.iter_mut().zip(&self.data) {
            *o = c as f32 / 255.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateParams {
    /// Crop side in cells.
    pub crop: usize,
    pub robot_radius: f64,
    /// Distances are divided by this before quantization.
    pub normalizer: f64,
}

/// Crop cell `(r, c)` in crop-frame offsets: forward and rightward cells
/// from the robot cell.
#[inline]
pub fn crop_offsets(size: usize, r: usize, c: usize) -> (f64, f64) {
    let half = (size / 2) as f64;
    (half - r as f64, c as f64 - half)
}

/// Global cell under crop cell `(r, c)`: nearest-neighbor sample around
/// the center of the robot's cell, rotated by the robot heading.
#[inline]
pub fn crop_to_global(spec: &GridSpec, pose: &Pose, size: usize, r: usize, c: usize) -> Cell {
    let rc = spec.cell_at(pose.position());
    let (f, s) = crop_offsets(size, r, c);
    let (sin, cos) = Float::sin_cos(pose.theta);
    let x = rc.col as f64 + 0.5 + f * cos + s * sin;
    let y = rc.row as f64 + 0.5 + f * sin - s * cos;
    Cell::new(Float::floor(y) as isize, Float::floor(x) as isize)
}

fn quantize_distance(d: f64, normalizer: f64) -> u8 {
    if !d.is_finite() {
        return 255;
    }
    let v = (d / normalizer).clamp(0.0, 1.0);
    Float::round(v * 255.0) as u8
}

/// Distance fields the state depends on; exposed for reuse and testing.
pub fn state_fields(maps: &GlobalMaps, pose: &Pose, receptacle: &[Cell]) -> (DistanceField, DistanceField) {
    let w = maps.occupancy.width();
    let h = maps.occupancy.height();
    let occ = maps.occupancy.as_slice();
    let optimistic: Vec<bool> = occ.iter().map(|&o| UnknownAs::Free.passable(o)).collect();
    let to_receptacle = distance_field_masked(w, h, &optimistic, receptacle, maps.resolution);
    let mut known: Vec<bool> = occ.iter().map(|&o| o == Occupancy::Free).collect();
    let rc = maps.grid_spec().cell_at(pose.position());
    if let Some(i) = maps.occupancy.index(rc) {
        known[i] = true;
    }
    let from_agent = distance_field_masked(w, h, &known, &[rc], maps.resolution);
    (to_receptacle, from_agent)
}

/// Builds the four-channel state: overhead codes, robot footprint,
/// distance to the receptacle, and distance from the robot. Samples that
/// fall off the map read as wall and as maximal distance.
pub fn egocentric_state(maps: &GlobalMaps, pose: &Pose, receptacle: &[Cell], params: &StateParams) -> StateTensor {
    let n = params.crop;
    let spec = maps.grid_spec();
    let (to_receptacle, from_agent) = state_fields(maps, pose, receptacle);
    let mut t = StateTensor::zeros(n);
    let plane = n * n;
    let fp = params.robot_radius / maps.resolution;
    let fp2 = fp * fp;
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            let g = crop_to_global(&spec, pose, n, r, c);
            let (over, d_rec, d_agent) = match maps.overhead.get(g) {
                Some(o) => (o.code(), to_receptacle.at(g), from_agent.at(g)),
                None => (OverheadCell::Wall.code(), f64::INFINITY, f64::INFINITY),
            };
            t.data[i] = over;
            let (f, s) = crop_offsets(n, r, c);
            t.data[plane + i] = if f * f + s * s <= fp2 { 255 } else { 0 };
            t.data[2 * plane + i] = quantize_distance(d_rec, params.normalizer);
            t.data[3 * plane + i] = quantize_distance(d_agent, params.normalizer);
        }
    }
    t
}
