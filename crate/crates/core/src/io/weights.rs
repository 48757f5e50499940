//! GVGG weight files and validation of a [`WeightSet`] against the VGG16
//! convolutional architecture.
//!
//! ```text
//! "GVGG" | version u32 = 1 | layer_count u32 |
//! per layer: name_len u16, name, kh u32, kw u32, c_in u32, c_out u32,
//!            weights f32 × (kh·kw·c_in·c_out), bias f32 × c_out |
//! crc32 u32 over everything after the magic
//! ```

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::tensor::ConvKernel;
use crate::vgg::{self, LayerKind};

const MAGIC: &[u8; 4] = b"GVGG";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedKernel {
    pub name: String,
    pub kernel: ConvKernel,
}

/// Convolution weights for the VGG16 stack, one entry per conv layer in
/// architecture order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub layers: Vec<NamedKernel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LayerCount {
        expected: usize,
        actual: usize,
    },
    Name {
        index: usize,
        expected: String,
        actual: String,
    },
    Shape {
        layer: String,
        expected: (usize, usize, usize, usize),
        actual: (usize, usize, usize, usize),
    },
    NonFinite {
        layer: String,
        bias: bool,
        index: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LayerCount { expected, actual } => {
                write!(f, "expected {expected} conv layers, found {actual}")
            }
            Violation::Name {
                index,
                expected,
                actual,
            } => {
                write!(f, "layer {index} is named {actual:?}, expected {expected:?}")
            }
            Violation::Shape {
                layer,
                expected,
                actual,
            } => write!(
                f,
                "{layer} has shape (kh,kw,c_in,c_out)={actual:?}, expected {expected:?}"
            ),
            Violation::NonFinite { layer, bias, index } => write!(
                f,
                "{layer} has a non-finite {} at flat index {index}",
                if *bias { "bias" } else { "weight" }
            ),
        }
    }
}

impl WeightSet {
    pub fn total_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.kernel.parameter_count()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&ConvKernel> {
        self.layers.iter().find(|l| l.name == name).map(|l| &l.kernel)
    }

    /// Uniform He-initialised weights with the VGG16 shapes. Biases are small
    /// positive values so that activations stay alive through all 13 layers.
    /// Deterministic in `seed`; useful when pretrained weights are absent.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = vgg::build_architecture()
            .into_iter()
            .filter(|l| l.kind == LayerKind::Conv)
            .map(|l| {
                let fan_in = 9 * l.c_in;
                let limit = (6.0 / fan_in as f32).sqrt();
                let weights = (0..fan_in * l.c_out).map(|_| rng.gen_range(-limit..limit)).collect();
                let bias = (0..l.c_out).map(|_| rng.gen_range(0.0..0.05)).collect();
                NamedKernel {
                    name: l.name,
                    kernel: ConvKernel::new(3, 3, l.c_in, l.c_out, weights, bias)
                        .expect("architecture shapes are consistent"),
                }
            })
            .collect();
        WeightSet { layers }
    }
}

/// Checks layer count, names, shapes and finiteness. An empty report means
/// the set can drive [`crate::vgg::extract_features`].
pub fn validate_weights(ws: &WeightSet) -> Vec<Violation> {
    let arch: Vec<_> = vgg::build_architecture()
        .into_iter()
        .filter(|l| l.kind == LayerKind::Conv)
        .collect();
    let mut report = Vec::new();
    if ws.layers.len() != arch.len() {
        report.push(Violation::LayerCount {
            expected: arch.len(),
            actual: ws.layers.len(),
        });
    }
    for (index, (layer, spec)) in ws.layers.iter().zip(&arch).enumerate() {
        if layer.name != spec.name {
            report.push(Violation::Name {
                index,
                expected: spec.name.clone(),
                actual: layer.name.clone(),
            });
        }
        let expected = (3, 3, spec.c_in, spec.c_out);
        if layer.kernel.shape() != expected {
            report.push(Violation::Shape {
                layer: layer.name.clone(),
                expected,
                actual: layer.kernel.shape(),
            });
        }
    }
    for layer in &ws.layers {
        let weights = layer.kernel.weights().iter().map(|w| (false, w));
        let biases = layer.kernel.bias().iter().map(|b| (true, b));
        let mut offsets = [0usize; 2];
        for (bias, v) in weights.chain(biases) {
            let index = offsets[bias as usize];
            offsets[bias as usize] += 1;
            if !v.is_finite() {
                report.push(Violation::NonFinite {
                    layer: layer.name.clone(),
                    bias,
                    index,
                });
            }
        }
    }
    report
}

pub fn encode_weights(ws: &WeightSet) -> Result<Vec<u8>> {
    let mut enc = Encoder::new(MAGIC);
    enc.count(ws.layers.len(), "layer count")?;
    for layer in &ws.layers {
        enc.str16(&layer.name)?;
        let (kh, kw, c_in, c_out) = layer.kernel.shape();
        for d in [kh, kw, c_in, c_out] {
            enc.count(d, "kernel dimension")?;
        }
        enc.f32s(layer.kernel.weights());
        enc.f32s(layer.kernel.bias());
    }
    Ok(enc.finish())
}

/// Parses a GVGG byte stream without checking it against the architecture.
pub fn decode_weights(bytes: &[u8]) -> Result<WeightSet> {
    let mut dec = Decoder::new(bytes, MAGIC)?;
    let count = dec.u32()? as usize;
    let mut layers = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let name = dec.str16()?;
        let (kh, kw, c_in, c_out) = (
            dec.u32()? as usize,
            dec.u32()? as usize,
            dec.u32()? as usize,
            dec.u32()? as usize,
        );
        let n = kh
            .checked_mul(kw)
            .and_then(|v| v.checked_mul(c_in))
            .and_then(|v| v.checked_mul(c_out))
            .ok_or_else(|| Error::Format(format!("{name}: kernel size overflows")))?;
        let weights = dec.f32s(n)?;
        let bias = dec.f32s(c_out)?;
        let kernel =
            ConvKernel::new(kh, kw, c_in, c_out, weights, bias).map_err(|e| Error::Format(format!("{name}: {e}")))?;
        layers.push(NamedKernel { name, kernel });
    }
    dec.finish()?;
    Ok(WeightSet { layers })
}

pub fn write_weights(ws: &WeightSet, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path.as_ref(), &encode_weights(ws)?)
}

/// Reads a GVGG file and rejects it unless [`validate_weights`] is clean.
pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightSet> {
    let ws = decode_weights(&super::read_file(path.as_ref())?)?;
    let report = validate_weights(&ws);
    if !report.is_empty() {
        return Err(Error::Validation(report));
    }
    Ok(ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> WeightSet {
        WeightSet {
            layers: vec![NamedKernel {
                name: "conv".into(),
                kernel: ConvKernel::new(1, 1, 1, 2, vec![1.0, -2.0], vec![0.5, f32::MIN_POSITIVE]).unwrap(),
            }],
        }
    }

    #[test]
    fn random_set_validates_clean() {
        let ws = WeightSet::random(7);
        assert!(validate_weights(&ws).is_empty());
        assert_eq!(ws.total_parameters(), 14_714_688);
    }

    #[test]
    fn wrong_output_channels_names_the_layer() {
        let mut ws = WeightSet::random(1);
        let c_in = 3;
        ws.layers[0].kernel = ConvKernel::new(3, 3, c_in, 32, vec![0.0; 9 * c_in * 32], vec![0.0; 32]).unwrap();
        let report = validate_weights(&ws);
        assert_eq!(report.len(), 1);
        match &report[0] {
            Violation::Shape {
                layer,
                expected,
                actual,
            } => {
                assert_eq!(layer, "block1_conv1");
                assert_eq!(*expected, (3, 3, 3, 64));
                assert_eq!(*actual, (3, 3, 3, 32));
            }
            other => panic!("unexpected violation {other}"),
        }
    }

    #[test]
    fn nan_reports_layer_and_index() {
        let mut ws = WeightSet::random(2);
        let k = &ws.layers[4].kernel;
        let mut w = k.weights().to_vec();
        w[1234] = f32::NAN;
        ws.layers[4].kernel = ConvKernel::new(3, 3, k.c_in(), k.c_out(), w, k.bias().to_vec()).unwrap();
        assert_eq!(
            validate_weights(&ws),
            vec![Violation::NonFinite {
                layer: "block3_conv1".into(),
                bias: false,
                index: 1234
            }]
        );
    }

    #[test]
    fn missing_layer_is_reported() {
        let mut ws = WeightSet::random(3);
        ws.layers.pop();
        assert!(validate_weights(&ws).contains(&Violation::LayerCount {
            expected: 13,
            actual: 12
        }));
    }

    #[test]
    fn byte_layout_is_exact() {
        let bytes = encode_weights(&tiny()).unwrap();
        let mut want = b"GVGG".to_vec();
        want.extend(1u32.to_le_bytes());
        want.extend(1u32.to_le_bytes());
        want.extend(4u16.to_le_bytes());
        want.extend(b"conv");
        for d in [1u32, 1, 1, 2] {
            want.extend(d.to_le_bytes());
        }
        for v in [1.0f32, -2.0, 0.5, f32::MIN_POSITIVE] {
            want.extend(v.to_le_bytes());
        }
        let crc = crc32fast::hash(&want[4..]);
        want.extend(crc.to_le_bytes());
        assert_eq!(bytes, want);
        assert_eq!(decode_weights(&bytes).unwrap(), tiny());
    }

    #[test]
    fn truncation_corruption_and_magic() {
        let bytes = encode_weights(&tiny()).unwrap();
        assert!(matches!(
            decode_weights(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        let mut flipped = bytes.clone();
        flipped[36] ^= 0x40;
        assert!(matches!(decode_weights(&flipped), Err(Error::Integrity { .. })));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode_weights(&magic), Err(Error::Format(_))));
        let mut version = bytes;
        version[4] = 2;
        assert!(matches!(decode_weights(&version), Err(Error::Format(_))));
    }
}
