use alloc::vec;
use alloc::vec::Vec;

use super::{QNetwork, Scalar};
use crate::action::Action;
use crate::{Error, Result};

/// Smooth L1: `x^2/2` inside `|x| < 1`, `|x| - 1/2` outside.
#[inline]
pub fn huber<T: Scalar>(x: T) -> T {
    let half = T::of(0.5);
    if x.abs() < T::one() {
        half * x * x
    } else {
        x.abs() - half
    }
}

#[inline]
pub fn huber_grad<T: Scalar>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}

/// States with one chosen action and regression target each.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a, T> {
    /// `[B, C, size, size]`.
    pub inputs: &'a [T],
    pub batch: usize,
    pub size: usize,
    pub actions: &'a [Action],
    pub targets: &'a [T],
}

/// Mean Huber loss of `Q(s, a) - y` over the batch and its gradient with
/// respect to every parameter. Only the selected pixels receive gradient.
pub fn loss_and_grad<T: Scalar>(net: &QNetwork<T>, b: &Batch<'_, T>) -> Result<(T, Vec<T>)> {
    if b.actions.len() != b.batch || b.targets.len() != b.batch {
        return Err(Error::Shape(alloc::format!(
            "batch of {} with {} actions and {} targets",
            b.batch,
            b.actions.len(),
            b.targets.len()
        )));
    }
    let (q, cache) = net.forward_train(b.inputs, b.batch, b.size, b.size)?;
    let a_ch = net.arch.out_channels();
    let per = a_ch * b.size * b.size;
    let scale = T::one() / T::of(b.batch as f64);
    let mut loss = T::zero();
    let mut d_out = vec![T::zero(); q.len()];
    for (i, (&a, &y)) in b.actions.iter().zip(b.targets).enumerate() {
        assert!(
            a.channel < a_ch && a.row < b.size && a.col < b.size,
            "action {a:?} outside the map"
        );
        let idx = i * per + a.flat_index(b.size);
        let x = q[idx] - y;
        loss += huber(x);
        d_out[idx] = huber_grad(x) * scale;
    }
    Ok((loss * scale, net.backward(&cache, &d_out)))
}

/// Loss only, for finite differences.
pub(crate) fn loss_only<T: Scalar>(net: &QNetwork<T>, b: &Batch<'_, T>) -> T {
    let q = net
        .forward(b.inputs, b.batch, b.size, b.size)
        .expect("shape checked by caller");
    let per = net.arch.out_channels() * b.size * b.size;
    let mut loss = T::zero();
    for (i, (&a, &y)) in b.actions.iter().zip(b.targets).enumerate() {
        loss += huber(q[i * per + a.flat_index(b.size)] - y);
    }
    loss / T::of(b.batch as f64)
}
