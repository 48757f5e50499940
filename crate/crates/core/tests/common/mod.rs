//! Test-only reference implementations. Deliberately naive and written
//! without reference to the library's im2col/GEMM path.

#![allow(dead_code)]

use leafscan_core::{ConvKernel, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, h: usize, w: usize, c: usize) -> Tensor {
    let data = (0..h * w * c).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    Tensor::new(h, w, c, data).unwrap()
}

pub fn random_kernel(rng: &mut impl Rng, kh: usize, kw: usize, c_in: usize, c_out: usize) -> ConvKernel {
    let w = (0..kh * kw * c_in * c_out)
        .map(|_| rng.gen_range(-1.0f32..1.0))
        .collect();
    let b = (0..c_out).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    ConvKernel::new(kh, kw, c_in, c_out, w, b).unwrap()
}

/// Direct four-loop convolution in f64 with explicit zero padding.
pub fn direct_conv(input: &Tensor, k: &ConvKernel, pad: usize, stride: usize) -> (usize, usize, Vec<f64>) {
    let (h, w, c_in) = input.shape();
    let (kh, kw, _, c_out) = k.shape();
    let out_h = (h + 2 * pad - kh) / stride + 1;
    let out_w = (w + 2 * pad - kw) / stride + 1;
    let mut out = vec![0.0f64; out_h * out_w * c_out];
    for oy in 0..out_h {
        for ox in 0..out_w {
            for co in 0..c_out {
                let mut acc = k.bias()[co] as f64;
                for ky in 0..kh {
                    for kx in 0..kw {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                            continue;
                        }
                        for ci in 0..c_in {
                            let wgt = k.weights()[((ky * kw + kx) * c_in + ci) * c_out + co];
                            acc += wgt as f64 * input.get(iy as usize, ix as usize, ci) as f64;
                        }
                    }
                }
                out[(oy * out_w + ox) * c_out + co] = acc;
            }
        }
    }
    (out_h, out_w, out)
}

/// Relative error with a unit floor on the scale, so values near zero are
/// compared absolutely.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Windowed max with the window scanned in raster order.
pub fn direct_maxpool(input: &Tensor, window: usize, stride: usize) -> Vec<f32> {
    let (h, w, c) = input.shape();
    let (out_h, out_w) = ((h - window) / stride + 1, (w - window) / stride + 1);
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for oy in 0..out_h {
        for ox in 0..out_w {
            for ch in 0..c {
                let mut m = f32::NEG_INFINITY;
                for dy in 0..window {
                    for dx in 0..window {
                        m = m.max(input.get(oy * stride + dy, ox * stride + dx, ch));
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

/// Exhaustive search in f64: every feature, every "x ≤ v" cut at each
/// distinct value except the largest, scored by the textbook weighted Gini.
pub fn oracle_split(x: &[f32], dim: usize, labels: &[usize], k: usize) -> Option<(usize, Vec<bool>, f64)> {
    let n = labels.len();
    let g = |counts: &[f64], total: f64| 1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>();
    let mut best: Option<(usize, f32, Vec<bool>, f64)> = None;
    for f in 0..dim {
        let mut values: Vec<f32> = (0..n).map(|i| x[i * dim + f]).collect();
        values.sort_by(f32::total_cmp);
        values.dedup();
        for &v in &values[..values.len().saturating_sub(1)] {
            let goes_left: Vec<bool> = (0..n).map(|i| x[i * dim + f] <= v).collect();
            let (mut l, mut r) = (vec![0.0; k], vec![0.0; k]);
            for i in 0..n {
                if goes_left[i] {
                    l[labels[i]] += 1.0
                } else {
                    r[labels[i]] += 1.0
                }
            }
            let (nl, nr) = (l.iter().sum::<f64>(), r.iter().sum::<f64>());
            let imp = nl / n as f64 * g(&l, nl) + nr / n as f64 * g(&r, nr);
            // strict improvement by more than rounding noise; otherwise the
            // earlier (lower feature, lower threshold) candidate stands
            if best.as_ref().map_or(true, |b| imp < b.3 - 1e-12) {
                best = Some((f, v, goes_left, imp));
            }
        }
    }
    best.map(|(f, _, p, i)| (f, p, i))
}
