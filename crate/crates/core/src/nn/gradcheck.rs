use alloc::vec::Vec;
use rand::Rng;

use super::loss::{loss_and_grad, loss_only};
use super::{Batch, QNetwork, Scalar};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub checked: usize,
}

/// Compares analytic gradients of `net` with central differences on
/// `count` randomly chosen parameters.
///
/// The differences are taken on a 64-bit copy of the network (the cast is
/// exact for 32-bit weights), so the report measures the error of the
/// analytic gradient in `T` rather than the rounding noise of `T`.
/// Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn grad_check<T: Scalar>(
    net: &QNetwork<T>,
    batch: &Batch<'_, T>,
    eps: f64,
    floor: f64,
    count: usize,
    rng: &mut impl Rng,
) -> Result<GradCheckReport> {
    let (_, analytic) = loss_and_grad(net, batch)?;
    let mut probe: QNetwork<f64> = net.cast();
    let inputs: Vec<f64> = batch.inputs.iter().map(|v| v.as_f64()).collect();
    let targets: Vec<f64> = batch.targets.iter().map(|v| v.as_f64()).collect();
    let b64 = Batch {
        inputs: &inputs,
        batch: batch.batch,
        size: batch.size,
        actions: batch.actions,
        targets: &targets,
    };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: 0,
        checked: 0,
    };
    let n = probe.params.len();
    for _ in 0..count {
        let i = rng.random_range(0..n);
        let p0 = probe.params[i];
        probe.params[i] = p0 + eps;
        let up = loss_only(&probe, &b64);
        probe.params[i] = p0 - eps;
        let down = loss_only(&probe, &b64);
        probe.params[i] = p0;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[i].as_f64();
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_param = i;
        }
        report.checked += 1;
    }
    Ok(report)
}
