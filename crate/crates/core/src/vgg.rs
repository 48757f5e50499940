//! The VGG16 convolutional stack used as a frozen feature extractor.
//!
//! Thirteen 3×3 same-padded convolutions, each followed by ReLU, arranged in
//! five blocks that each end in a 2×2/2 max pool. The dense head is not part
//! of the model. A 224×224×3 image yields a 7×7×512 map, flattened H→W→C to
//! 25088 features.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::weights::{validate_weights, WeightSet};
use crate::tensor::{maxpool2d, PreparedConv, Tensor};

pub const INPUT_SIZE: usize = 224;
pub const FEATURE_DIM: usize = 7 * 7 * 512;
/// Total downsampling of the five pools.
pub const STRIDE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Pool,
}

/// One entry of the architecture. Pool layers carry their channel count in
/// both `c_in` and `c_out`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub c_in: usize,
    pub c_out: usize,
}

const BLOCKS: [(usize, usize); 5] = [(2, 64), (2, 128), (3, 256), (3, 512), (3, 512)];

pub fn build_architecture() -> Vec<LayerSpec> {
    let mut layers = Vec::with_capacity(18);
    let mut channels = 3;
    for (b, &(convs, width)) in BLOCKS.iter().enumerate() {
        for i in 0..convs {
            layers.push(LayerSpec {
                name: format!("block{}_conv{}", b + 1, i + 1),
                kind: LayerKind::Conv,
                c_in: channels,
                c_out: width,
            });
            channels = width;
        }
        layers.push(LayerSpec {
            name: format!("block{}_pool", b + 1),
            kind: LayerKind::Pool,
            c_in: channels,
            c_out: channels,
        });
    }
    layers
}

/// `Σ (3·3·c_in + 1)·c_out` over the conv layers.
pub fn conv_parameter_count() -> usize {
    build_architecture()
        .iter()
        .filter(|l| l.kind == LayerKind::Conv)
        .map(|l| (9 * l.c_in + 1) * l.c_out)
        .sum()
}

/// `(height, width, channels)` of an activation map.
pub type Shape = (usize, usize, usize);

/// Output shape after every layer for an `height × width × 3` input.
pub fn shape_trace(height: usize, width: usize) -> Result<Vec<(String, Shape)>> {
    check_input_shape((height, width, 3))?;
    let (mut h, mut w) = (height, width);
    Ok(build_architecture()
        .into_iter()
        .map(|l| {
            if l.kind == LayerKind::Pool {
                h /= 2;
                w /= 2;
            }
            (l.name, (h, w, l.c_out))
        })
        .collect())
}

/// Feature length produced for a `height × width` input.
pub fn feature_dim(height: usize, width: usize) -> usize {
    (height / STRIDE) * (width / STRIDE) * 512
}

fn check_input_shape((h, w, c): Shape) -> Result<()> {
    if c != 3 || h < STRIDE || w < STRIDE || h % STRIDE != 0 || w % STRIDE != 0 {
        return Err(Error::Dimension(format!(
            "expected an RGB image with sides divisible by {STRIDE} (normally {INPUT_SIZE}x{INPUT_SIZE}x3), got {h}x{w}x{c}"
        )));
    }
    Ok(())
}

/// Flattened activations of the last pool, all finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f32>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

/// Validated weights with every kernel pre-packed; build once and reuse for
/// any number of images.
pub struct FeatureExtractor<'w> {
    convs: Vec<PreparedConv<'w>>,
}

impl<'w> FeatureExtractor<'w> {
    pub fn new(weights: &'w WeightSet) -> Result<Self> {
        let report = validate_weights(weights);
        if !report.is_empty() {
            return Err(Error::Validation(report));
        }
        Ok(FeatureExtractor {
            convs: weights.layers.iter().map(|l| PreparedConv::new(&l.kernel)).collect(),
        })
    }

    pub fn extract(&self, image: &Tensor) -> Result<FeatureVector> {
        check_input_shape(image.shape())?;
        let mut convs = self.convs.iter();
        let mut x: Option<Tensor> = None;
        for layer in build_architecture() {
            let input = x.as_ref().unwrap_or(image);
            x = Some(match layer.kind {
                LayerKind::Conv => convs.next().expect("validated weight count").apply(input, 1, 1, true)?,
                LayerKind::Pool => maxpool2d(input, 2, 2)?,
            });
        }
        Ok(FeatureVector(x.expect("non-empty architecture").into_data()))
    }

    /// Extracts every image concurrently; row `i` belongs to `images[i]`.
    pub fn extract_batch(&self, images: &[Tensor]) -> Result<Vec<FeatureVector>> {
        images
            .par_iter()
            .enumerate()
            .map(|(index, img)| {
                self.extract(img).map_err(|e| Error::Batch {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

pub fn extract_features(image: &Tensor, weights: &WeightSet) -> Result<FeatureVector> {
    FeatureExtractor::new(weights)?.extract(image)
}

pub fn extract_batch(images: &[Tensor], weights: &WeightSet) -> Result<Vec<FeatureVector>> {
    FeatureExtractor::new(weights)?.extract_batch(images)
}
