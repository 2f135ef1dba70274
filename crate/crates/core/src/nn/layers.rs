//! Convolution and upsampling kernels on `[C, B, H, W]` activations.

use alloc::vec;
use alloc::vec::Vec;

use super::Scalar;

/// Spatial size after a 3x3, padding-1 convolution with `stride`.
#[inline]
pub fn conv_out(size: usize, stride: usize) -> usize {
    (size + 2 - 3) / stride + 1
}

/// Unfolds 3x3 patches into a `[in_c*9, B*Ho*Wo]` matrix.
pub fn im2col<T: Scalar>(input: &[T], c: usize, b: usize, h: usize, w: usize, stride: usize, col: &mut Vec<T>) {
    let ho = conv_out(h, stride);
    let wo = conv_out(w, stride);
    let n = b * ho * wo;
    col.clear();
    col.resize(c * 9 * n, T::zero());
    for ic in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[((ic * 9) + ky * 3 + kx) * n..][..n];
                for bi in 0..b {
                    let plane = &input[(ic * b + bi) * h * w..][..h * w];
                    for oy in 0..ho {
                        let y = (oy * stride + ky) as isize - 1;
                        if y < 0 || y >= h as isize {
                            continue;
                        }
                        let src = &plane[y as usize * w..][..w];
                        let dst = &mut row[(bi * ho + oy) * wo..][..wo];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let x = (ox * stride + kx) as isize - 1;
                            if x >= 0 && x < w as isize {
                                *d = src[x as usize];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the input.
pub fn col2im<T: Scalar>(col: &[T], c: usize, b: usize, h: usize, w: usize, stride: usize) -> Vec<T> {
    let ho = conv_out(h, stride);
    let wo = conv_out(w, stride);
    let n = b * ho * wo;
    let mut out = vec![T::zero(); c * b * h * w];
    for ic in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &col[((ic * 9) + ky * 3 + kx) * n..][..n];
                for bi in 0..b {
                    let plane = &mut out[(ic * b + bi) * h * w..][..h * w];
                    for oy in 0..ho {
                        let y = (oy * stride + ky) as isize - 1;
                        if y < 0 || y >= h as isize {
                            continue;
                        }
                        let dst = &mut plane[y as usize * w..][..w];
                        let src = &row[(bi * ho + oy) * wo..][..wo];
                        for (ox, &s) in src.iter().enumerate() {
                            let x = (ox * stride + kx) as isize - 1;
                            if x >= 0 && x < w as isize {
                                dst[x as usize] += s;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Source taps for one axis of a 2x bilinear upsample with half-pixel
/// centers: output `i` reads `(1-t)*in[i0] + t*in[i1]`.
fn taps<T: Scalar>(n_in: usize) -> Vec<(usize, usize, T)> {
    (0..2 * n_in)
        .map(|i| {
            let src = ((i as f64 + 0.5) * 0.5 - 0.5).max(0.0);
            let i0 = (src as usize).min(n_in - 1);
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, T::of(src - i0 as f64))
        })
        .collect()
}

pub fn upsample2<T: Scalar>(input: &[T], planes: usize, h: usize, w: usize) -> Vec<T> {
    let ty = taps::<T>(h);
    let tx = taps::<T>(w);
    let (h2, w2) = (2 * h, 2 * w);
    let mut out = vec![T::zero(); planes * h2 * w2];
    for p in 0..planes {
        let src = &input[p * h * w..][..h * w];
        let dst = &mut out[p * h2 * w2..][..h2 * w2];
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            let r0 = &src[y0 * w..][..w];
            let r1 = &src[y1 * w..][..w];
            let gy = T::one() - fy;
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let gx = T::one() - fx;
                dst[oy * w2 + ox] = gy * (gx * r0[x0] + fx * r0[x1]) + fy * (gx * r1[x0] + fx * r1[x1]);
            }
        }
    }
    out
}

pub fn upsample2_backward<T: Scalar>(grad: &[T], planes: usize, h: usize, w: usize) -> Vec<T> {
    let ty = taps::<T>(h);
    let tx = taps::<T>(w);
    let (h2, w2) = (2 * h, 2 * w);
    let mut out = vec![T::zero(); planes * h * w];
    for p in 0..planes {
        let g = &grad[p * h2 * w2..][..h2 * w2];
        let dst = &mut out[p * h * w..][..h * w];
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            let gy = T::one() - fy;
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let gx = T::one() - fx;
                let v = g[oy * w2 + ox];
                dst[y0 * w + x0] += gy * gx * v;
                dst[y0 * w + x1] += gy * fx * v;
                dst[y1 * w + x0] += fy * gx * v;
                dst[y1 * w + x1] += fy * fx * v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn pseudo(n: usize, s: f64) -> Vec<f64> {
        (0..n).map(|i| ((i as f64 + 1.0) * s).sin()).collect()
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        for stride in [1, 2] {
            let (c, b, h, w) = (2, 2, 6, 5);
            let x = pseudo(c * b * h * w, 0.7);
            let mut col = Vec::new();
            im2col(&x, c, b, h, w, stride, &mut col);
            let y = pseudo(col.len(), 1.3);
            let back = col2im(&y, c, b, h, w, stride);
            assert!((dot(&col, &y) - dot(&x, &back)).abs() < 1e-10);
        }
    }

    #[test]
    fn upsample_backward_is_adjoint() {
        let (p, h, w) = (3, 4, 5);
        let x = pseudo(p * h * w, 0.3);
        let up = upsample2(&x, p, h, w);
        let g = pseudo(up.len(), 0.9);
        let back = upsample2_backward(&g, p, h, w);
        assert!((dot(&up, &g) - dot(&x, &back)).abs() < 1e-10);
    }

    #[test]
    fn upsample_matches_half_pixel_rule() {
        // 1D row [0, 1]: outputs 0, 0.25, 0.75, 1
        let up = upsample2(&[0.0f64, 1.0], 1, 1, 2);
        assert_eq!(up[..4], [0.0, 0.25, 0.75, 1.0]);
        assert_eq!(up[4..], [0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn output_sizes() {
        assert_eq!(conv_out(48, 2), 24);
        assert_eq!(conv_out(24, 2), 12);
        assert_eq!(conv_out(12, 1), 12);
    }
}
