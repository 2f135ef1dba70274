use alloc::vec;
use alloc::vec::Vec;

use super::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 0.0,
            clip_norm: 100.0,
        }
    }
}

pub fn global_norm<T: Scalar>(g: &[T]) -> f64 {
    let s: f64 = g.iter().map(|v| v.as_f64() * v.as_f64()).sum();
    num_traits::Float::sqrt(s)
}

/// SGD with heavy-ball momentum and global-norm clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd<T> {
    pub config: SgdConfig,
    pub velocity: Vec<T>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(config: SgdConfig, n_params: usize) -> Self {
        Self {
            config,
            velocity: vec![T::zero(); n_params],
        }
    }

    /// Clips `grads` in place to the configured norm, then applies
    /// `v = mu*v + g; p -= lr*v`. Returns the norm before clipping.
    pub fn step(&mut self, params: &mut [T], grads: &mut [T]) -> f64 {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.velocity.len());
        let norm = global_norm(grads);
        if norm > self.config.clip_norm {
            let s = T::of(self.config.clip_norm / norm);
            grads.iter_mut().for_each(|g| *g *= s);
        }
        let mu = T::of(self.config.momentum);
        let lr = T::of(self.config.lr);
        let wd = T::of(self.config.weight_decay);
        for ((p, v), &g) in params.iter_mut().zip(&mut self.velocity).zip(grads.iter()) {
            let g = g + wd * *p;
            *v = mu * *v + g;
            *p = *p - lr * *v;
        }
        norm
    }
}
