//! Dense `height × width × channels` tensors and the layer primitives used by
//! the VGG16 convolutional stack.
//!
//! Layout is row-major H→W→C: element `(y, x, c)` lives at
//! `(y * width + x) * channels + c`. Convolution kernels are stored
//! kh→kw→c_in→c_out, which makes a kernel directly usable as the
//! `(kh·kw·c_in) × c_out` right-hand side of the im2col product.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gemm::{self, PackedB, MR, NR};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Dimension(format!(
                "tensor dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Dimension(format!(
                "{height}x{width}x{channels} tensor needs {} elements, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Tensor {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::filled(height, width, channels, 0.0)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    kh: usize,
    kw: usize,
    c_in: usize,
    c_out: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvKernel {
    /// `weights` in kh→kw→c_in→c_out order, `bias` of length `c_out`.
    pub fn new(kh: usize, kw: usize, c_in: usize, c_out: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if kh == 0 || kw == 0 || c_in == 0 || c_out == 0 {
            return Err(Error::Dimension(format!(
                "kernel dimensions must be positive, got {kh}x{kw}x{c_in}x{c_out}"
            )));
        }
        if weights.len() != kh * kw * c_in * c_out {
            return Err(Error::Dimension(format!(
                "{kh}x{kw}x{c_in}x{c_out} kernel needs {} weights, got {}",
                kh * kw * c_in * c_out,
                weights.len()
            )));
        }
        if bias.len() != c_out {
            return Err(Error::Dimension(format!(
                "kernel with {c_out} output channels needs {c_out} biases, got {}",
                bias.len()
            )));
        }
        Ok(ConvKernel {
            kh,
            kw,
            c_in,
            c_out,
            weights,
            bias,
        })
    }

    pub fn kh(&self) -> usize {
        self.kh
    }

    pub fn kw(&self) -> usize {
        self.kw
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    /// `(kh, kw, c_in, c_out)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.kh, self.kw, self.c_in, self.c_out)
    }

    /// Weights plus biases.
    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// A dense row-major matrix, as produced by [`im2col`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    in_h: usize,
    in_w: usize,
    c_in: usize,
    kh: usize,
    kw: usize,
    padding: usize,
    stride: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn new(input: &Tensor, kh: usize, kw: usize, padding: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Dimension("stride must be at least 1".into()));
        }
        if kh == 0 || kw == 0 {
            return Err(Error::Dimension("kernel window must be non-empty".into()));
        }
        let (in_h, in_w, c_in) = input.shape();
        let (padded_h, padded_w) = (in_h + 2 * padding, in_w + 2 * padding);
        if kh > padded_h || kw > padded_w {
            return Err(Error::Dimension(format!(
                "{kh}x{kw} kernel is larger than the {padded_h}x{padded_w} padded input"
            )));
        }
        Ok(Geometry {
            in_h,
            in_w,
            c_in,
            kh,
            kw,
            padding,
            stride,
            out_h: (padded_h - kh) / stride + 1,
            out_w: (padded_w - kw) / stride + 1,
        })
    }

    fn patch_len(&self) -> usize {
        self.kh * self.kw * self.c_in
    }

    fn out_positions(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Writes the receptive field of output position `pos` into `dst`
    /// (length `patch_len`), ordered ky→kx→c to match the kernel layout.
    #[inline]
    fn fill_patch(&self, input: &[f32], pos: usize, dst: &mut [f32]) {
        let (oy, ox) = (pos / self.out_w, pos % self.out_w);
        let c = self.c_in;
        for ky in 0..self.kh {
            let row = &mut dst[ky * self.kw * c..(ky + 1) * self.kw * c];
            let iy = (oy * self.stride + ky) as isize - self.padding as isize;
            if iy < 0 || iy >= self.in_h as isize {
                row.fill(0.0);
                continue;
            }
            let ix0 = (ox * self.stride) as isize - self.padding as isize;
            let in_row = &input[iy as usize * self.in_w * c..(iy as usize + 1) * self.in_w * c];
            // Contiguous run of in-bounds columns, zeros on either side.
            let lo = (-ix0).clamp(0, self.kw as isize) as usize;
            let hi = (self.in_w as isize - ix0).clamp(0, self.kw as isize) as usize;
            row[..lo * c].fill(0.0);
            if hi > lo {
                let src = (ix0 + lo as isize) as usize * c;
                row[lo * c..hi * c].copy_from_slice(&in_row[src..src + (hi - lo) * c]);
            }
            row[hi.max(lo) * c..].fill(0.0);
        }
    }
}

/// Unrolls every receptive field of `input` into a row of the result, giving
/// an `(out_h·out_w) × (kh·kw·c_in)` matrix. Borders are zero-padded.
pub fn im2col(input: &Tensor, kh: usize, kw: usize, padding: usize, stride: usize) -> Result<Matrix> {
    let geom = Geometry::new(input, kh, kw, padding, stride)?;
    let cols = geom.patch_len();
    let rows = geom.out_positions();
    let mut data = vec![0.0f32; rows * cols];
    for (pos, dst) in data.chunks_exact_mut(cols).enumerate() {
        geom.fill_patch(&input.data, pos, dst);
    }
    Ok(Matrix { rows, cols, data })
}

/// Output positions processed per im2col band.
const BAND: usize = 8 * MR;

/// 2-D convolution as im2col followed by a matrix multiply against the
/// kernel. The im2col matrix is materialized one band of output positions at
/// a time so memory stays bounded on large inputs; bands run in parallel.
pub fn conv2d(input: &Tensor, kernel: &ConvKernel, padding: usize, stride: usize) -> Result<Tensor> {
    PreparedConv::new(kernel).apply(input, padding, stride, false)
}

/// A kernel with its weights already packed for the matrix multiply, for
/// applying the same layer to many inputs.
pub(crate) struct PreparedConv<'k> {
    kernel: &'k ConvKernel,
    packed: PackedB,
}

impl<'k> PreparedConv<'k> {
    pub(crate) fn new(kernel: &'k ConvKernel) -> Self {
        let k = kernel.kh * kernel.kw * kernel.c_in;
        PreparedConv {
            kernel,
            packed: PackedB::pack(&kernel.weights, k, kernel.c_out),
        }
    }

    /// Convolution, optionally followed by ReLU in the same pass.
    pub(crate) fn apply(&self, input: &Tensor, padding: usize, stride: usize, relu: bool) -> Result<Tensor> {
        let kernel = self.kernel;
        if input.channels != kernel.c_in {
            return Err(Error::Dimension(format!(
                "input has {} channels but kernel expects {}",
                input.channels, kernel.c_in
            )));
        }
        let geom = Geometry::new(input, kernel.kh, kernel.kw, padding, stride)?;
        let k = geom.patch_len();
        let n = kernel.c_out;
        let ldc = self.packed.n_panels() * NR;
        let positions = geom.out_positions();

        let mut out = vec![0.0f32; positions * n];
        out.par_chunks_mut(BAND * n).enumerate().for_each_init(
            || (vec![0.0f32; BAND * k], vec![0.0f32; BAND * ldc]),
            |(patches, acc), (band, out_band)| {
                let first = band * BAND;
                let count = out_band.len() / n;
                for (i, dst) in patches.chunks_exact_mut(k).enumerate() {
                    if i < count {
                        geom.fill_patch(&input.data, first + i, dst);
                    } else {
                        dst.fill(0.0);
                    }
                }
                gemm::gemm_block(patches, BAND, &self.packed, acc);
                for (dst, src) in out_band.chunks_exact_mut(n).zip(acc.chunks_exact(ldc)) {
                    for ((d, &s), &b) in dst.iter_mut().zip(src).zip(&kernel.bias) {
                        let v = s + b;
                        *d = if relu { v.max(0.0) } else { v };
                    }
                }
            },
        );
        Tensor::new(geom.out_h, geom.out_w, n, out)
    }
}

/// Per-channel max pooling over `window × window` regions. Inputs whose
/// spatial size does not tile exactly are rejected.
pub fn maxpool2d(input: &Tensor, window: usize, stride: usize) -> Result<Tensor> {
    if window == 0 || stride == 0 {
        return Err(Error::Dimension("pooling window and stride must be positive".into()));
    }
    let (h, w, c) = input.shape();
    let tiles = |len: usize| len >= window && (len - window) % stride == 0;
    if !tiles(h) || !tiles(w) {
        return Err(Error::Dimension(format!(
            "{h}x{w} input does not tile into {window}x{window} windows at stride {stride}"
        )));
    }
    let (out_h, out_w) = ((h - window) / stride + 1, (w - window) / stride + 1);
    let mut out = vec![f32::NEG_INFINITY; out_h * out_w * c];
    for oy in 0..out_h {
        for ox in 0..out_w {
            let dst = &mut out[(oy * out_w + ox) * c..(oy * out_w + ox + 1) * c];
            for dy in 0..window {
                for dx in 0..window {
                    let (y, x) = (oy * stride + dy, ox * stride + dx);
                    let src = &input.data[(y * w + x) * c..(y * w + x + 1) * c];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        if s > *d {
                            *d = s;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(out_h, out_w, c, out)
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    relu_inplace(&mut out);
    out
}

pub fn relu_inplace(t: &mut Tensor) {
    for v in &mut t.data {
        *v = v.max(0.0);
    }
}
