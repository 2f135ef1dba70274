//! Fully convolutional Q-network: 3x3 convolutions with ReLU, two stride-2
//! stages and bilinear upsampling back to the input resolution.
//!
//! Activations are kept channel-major as `[C, B, H, W]` so each convolution
//! is one GEMM over an unfolded patch matrix. Parameters live in one flat
//! vector, which keeps optimizer steps, target copies and checkpoints
//! trivial.

mod gemm;
mod gradcheck;
mod layers;
mod loss;
mod optim;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{AddAssign, MulAssign};

use num_traits::Float;
use rand::Rng;

pub use gemm::Gemm;
pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::{conv_out, upsample2};
pub use loss::{huber, huber_grad, loss_and_grad, Batch};
pub use optim::{global_norm, Sgd, SgdConfig};

use crate::{Error, Result};

/// Element type for network arithmetic: `f32` for training, `f64` for
/// gradient checking.
pub trait Scalar: Float + Gemm + AddAssign + MulAssign + Default + Debug + Send + Sync + 'static {
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerSpec {
    /// 3x3 convolution, padding 1.
    Conv {
        in_c: usize,
        out_c: usize,
        stride: usize,
        relu: bool,
    },
    /// Bilinear 2x upsampling with half-pixel centers.
    Upsample2,
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Conv { in_c, out_c, .. } => out_c * in_c * 9 + out_c,
            LayerSpec::Upsample2 => 0,
        }
    }
}

/// Ordered layer list plus the channel counts at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    /// Reference network: widths 16-32-64-64-32-A, stride 2 on the first
    /// two convolutions, an upsample before and after the head.
    pub fn reduced(in_channels: usize, actions: usize) -> Self {
        let conv = |in_c, out_c, stride, relu| LayerSpec::Conv {
            in_c,
            out_c,
            stride,
            relu,
        };
        Self {
            layers: vec![
                conv(in_channels, 16, 2, true),
                conv(16, 32, 2, true),
                conv(32, 64, 1, true),
                conv(64, 64, 1, true),
                conv(64, 32, 1, true),
                LayerSpec::Upsample2,
                conv(32, actions, 1, false),
                LayerSpec::Upsample2,
            ],
        }
    }

    /// One linear 3x3 convolution.
    pub fn linear(in_channels: usize, actions: usize) -> Self {
        Self {
            layers: vec![LayerSpec::Conv {
                in_c: in_channels,
                out_c: actions,
                stride: 1,
                relu: false,
            }],
        }
    }

    pub fn in_channels(&self) -> usize {
        self.layers
            .iter()
            .find_map(|l| match l {
                LayerSpec::Conv { in_c, .. } => Some(*in_c),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn out_channels(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                LayerSpec::Conv { out_c, .. } => Some(*out_c),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Input side lengths must be divisible by this.
    pub fn size_multiple(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                LayerSpec::Conv { stride, .. } => *stride,
                _ => 1,
            })
            .product()
    }

    /// Text form stored in checkpoints, e.g. `c4x16s2r,...,u2`.
    pub fn descriptor(&self) -> String {
        let parts: Vec<String> = self
            .layers
            .iter()
            .map(|l| match *l {
                LayerSpec::Conv {
                    in_c,
                    out_c,
                    stride,
                    relu,
                } => format!("c{in_c}x{out_c}s{stride}{}", if relu { "r" } else { "" }),
                LayerSpec::Upsample2 => String::from("u2"),
            })
            .collect();
        parts.join(",")
    }

    pub fn parse_descriptor(s: &str) -> Result<Self> {
        let bad = || Error::Shape(format!("bad architecture descriptor {s:?}"));
        let mut layers = Vec::new();
        for part in s.split(',') {
            if part == "u2" {
                layers.push(LayerSpec::Upsample2);
                continue;
            }
            let body = part.strip_prefix('c').ok_or_else(bad)?;
            let (relu, body) = match body.strip_suffix('r') {
                Some(b) => (true, b),
                None => (false, body),
            };
            let (chans, stride) = body.split_once('s').ok_or_else(bad)?;
            let (a, b) = chans.split_once('x').ok_or_else(bad)?;
            layers.push(LayerSpec::Conv {
                in_c: a.parse().map_err(|_| bad())?,
                out_c: b.parse().map_err(|_| bad())?,
                stride: stride.parse().map_err(|_| bad())?,
                relu,
            });
        }
        Ok(Self { layers })
    }
}

/// Activation shape at a layer boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dims {
    c: usize,
    h: usize,
    w: usize,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    batch: usize,
    dims: Vec<Dims>,
    acts: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork<T> {
    pub arch: Architecture,
    pub params: Vec<T>,
}

impl<T: Scalar> QNetwork<T> {
    /// He-uniform convolution weights, zero biases, and a zero head so the
    /// initial Q-map is identically 0.
    pub fn new(arch: Architecture, rng: &mut impl Rng) -> Self {
        let mut net = Self::new_random(arch, rng);
        let last = net.offsets().into_iter().rev().find(|&(_, n, _)| n > 0);
        if let Some((off, n, _)) = last {
            net.params[off..off + n].iter_mut().for_each(|p| *p = T::zero());
        }
        net
    }

    /// He-uniform everywhere, head included (used for gradient probes).
    pub fn new_random(arch: Architecture, rng: &mut impl Rng) -> Self {
        let mut params = Vec::with_capacity(arch.param_count());
        for l in &arch.layers {
            if let LayerSpec::Conv { in_c, out_c, .. } = *l {
                let bound = Float::sqrt(6.0 / (in_c * 9) as f64);
                for _ in 0..out_c * in_c * 9 {
                    params.push(T::of(rng.random_range(-bound..bound)));
                }
                params.extend(core::iter::repeat_n(T::zero(), out_c));
            }
        }
        Self { arch, params }
    }

    pub fn from_params(arch: Architecture, params: Vec<T>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::Shape(format!(
                "architecture needs {} parameters, got {}",
                arch.param_count(),
                params.len()
            )));
        }
        Ok(Self { arch, params })
    }

    /// `(offset, len, layer)` of each layer's parameter block.
    fn offsets(&self) -> Vec<(usize, usize, usize)> {
        let mut off = 0;
        let mut out = Vec::new();
        for (i, l) in self.arch.layers.iter().enumerate() {
            let n = l.param_count();
            out.push((off, n, i));
            off += n;
        }
        out
    }

    /// Declared parameter tensor shapes in storage order.
    pub fn shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for l in &self.arch.layers {
            if let LayerSpec::Conv { in_c, out_c, .. } = *l {
                out.push(vec![out_c, in_c, 3, 3]);
                out.push(vec![out_c]);
            }
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> QNetwork<U> {
        QNetwork {
            arch: self.arch.clone(),
            params: self.params.iter().map(|p| U::of(p.as_f64())).collect(),
        }
    }

    fn check_input(&self, input: &[T], batch: usize, h: usize, w: usize) -> Result<()> {
        let c = self.arch.in_channels();
        let m = self.arch.size_multiple();
        if input.len() != batch * c * h * w {
            return Err(Error::Shape(format!(
                "input holds {} values, expected {batch}x{c}x{h}x{w}",
                input.len()
            )));
        }
        if !h.is_multiple_of(m) || !w.is_multiple_of(m) {
            return Err(Error::Shape(format!("spatial size {h}x{w} not a multiple of {m}")));
        }
        Ok(())
    }

    /// Q-maps for a `[B, C, H, W]` batch, returned as `[B, A, H, W]`.
    pub fn forward(&self, input: &[T], batch: usize, h: usize, w: usize) -> Result<Vec<T>> {
        Ok(self.forward_cached(input, batch, h, w, false)?.0)
    }

    /// Like [`forward`](Self::forward) but keeps activations for
    /// [`backward`](Self::backward).
    pub fn forward_train(&self, input: &[T], batch: usize, h: usize, w: usize) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.forward_cached(input, batch, h, w, true)
    }

    fn forward_cached(
        &self,
        input: &[T],
        batch: usize,
        h: usize,
        w: usize,
        keep: bool,
    ) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.check_input(input, batch, h, w)?;
        let mut dims = Dims {
            c: self.arch.in_channels(),
            h,
            w,
        };
        let mut x = bchw_to_cbhw(input, batch, dims.c, h * w);
        let mut cache = ForwardCache {
            batch,
            dims: vec![dims],
            acts: Vec::new(),
        };
        let mut col = Vec::new();
        for ((off, _, _), layer) in self.offsets().into_iter().zip(&self.arch.layers) {
            let (y, next) = match *layer {
                LayerSpec::Conv {
                    in_c,
                    out_c,
                    stride,
                    relu,
                } => {
                    debug_assert_eq!(in_c, dims.c);
                    let ho = conv_out(dims.h, stride);
                    let wo = conv_out(dims.w, stride);
                    let n = batch * ho * wo;
                    let k = in_c * 9;
                    layers::im2col(&x, in_c, batch, dims.h, dims.w, stride, &mut col);
                    let wts = &self.params[off..off + out_c * k];
                    let bias = &self.params[off + out_c * k..off + out_c * k + out_c];
                    let mut y = vec![T::zero(); out_c * n];
                    for (row, &b) in y.chunks_mut(n).zip(bias) {
                        row.iter_mut().for_each(|v| *v = b);
                    }
                    T::gemm(false, false, out_c, k, n, T::one(), wts, &col, T::one(), &mut y);
                    if relu {
                        y.iter_mut().for_each(|v| {
                            if *v < T::zero() {
                                *v = T::zero()
                            }
                        });
                    }
                    (y, Dims { c: out_c, h: ho, w: wo })
                }
                LayerSpec::Upsample2 => (
                    upsample2(&x, dims.c * batch, dims.h, dims.w),
                    Dims {
                        c: dims.c,
                        h: 2 * dims.h,
                        w: 2 * dims.w,
                    },
                ),
            };
            if keep {
                cache.acts.push(core::mem::replace(&mut x, y));
            } else {
                x = y;
            }
            dims = next;
            cache.dims.push(dims);
        }
        if dims.h != h || dims.w != w {
            return Err(Error::Shape(format!("network maps {h}x{w} to {}x{}", dims.h, dims.w)));
        }
        let out = cbhw_to_bchw(&x, batch, dims.c, h * w);
        if keep {
            cache.acts.push(x);
        }
        Ok((out, cache))
    }

    /// Parameter gradient given `d_out`, the loss gradient w.r.t. the
    /// `[B, A, H, W]` output of the matching [`forward_train`](Self::forward_train).
    pub fn backward(&self, cache: &ForwardCache<T>, d_out: &[T]) -> Vec<T> {
        let batch = cache.batch;
        let last = *cache.dims.last().expect("empty cache");
        let mut g = bchw_to_cbhw(d_out, batch, last.c, last.h * last.w);
        let mut grads = vec![T::zero(); self.params.len()];
        let mut col = Vec::new();
        let offsets = self.offsets();
        for li in (0..self.arch.layers.len()).rev() {
            let din = cache.dims[li];
            let input = &cache.acts[li];
            let output = &cache.acts[li + 1];
            match self.arch.layers[li] {
                LayerSpec::Conv {
                    in_c,
                    out_c,
                    stride,
                    relu,
                } => {
                    if relu {
                        for (gv, &o) in g.iter_mut().zip(output) {
                            if o <= T::zero() {
                                *gv = T::zero();
                            }
                        }
                    }
                    let dout = cache.dims[li + 1];
                    let n = batch * dout.h * dout.w;
                    let k = in_c * 9;
                    let off = offsets[li].0;
                    layers::im2col(input, in_c, batch, din.h, din.w, stride, &mut col);
                    let (gw, gb) = grads[off..off + out_c * k + out_c].split_at_mut(out_c * k);
                    T::gemm(false, true, out_c, n, k, T::one(), &g, &col, T::zero(), gw);
                    for (b, row) in gb.iter_mut().zip(g.chunks(n)) {
                        *b = row.iter().fold(T::zero(), |a, &v| a + v);
                    }
                    if li > 0 {
                        let wts = &self.params[off..off + out_c * k];
                        let mut dcol = vec![T::zero(); k * n];
                        T::gemm(true, false, k, out_c, n, T::one(), wts, &g, T::zero(), &mut dcol);
                        g = layers::col2im(&dcol, in_c, batch, din.h, din.w, stride);
                    }
                }
                LayerSpec::Upsample2 => {
                    g = layers::upsample2_backward(&g, din.c * batch, din.h, din.w);
                }
            }
        }
        grads
    }
}

fn bchw_to_cbhw<T: Copy>(x: &[T], b: usize, c: usize, hw: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    for ci in 0..c {
        for bi in 0..b {
            out.extend_from_slice(&x[(bi * c + ci) * hw..][..hw]);
        }
    }
    out
}

fn cbhw_to_bchw<T: Copy>(x: &[T], b: usize, c: usize, hw: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    for bi in 0..b {
        for ci in 0..c {
            out.extend_from_slice(&x[(ci * b + bi) * hw..][..hw]);
        }
    }
    out
}
