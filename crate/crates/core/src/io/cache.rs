//! GFCH feature files, used both for the extraction cache and for golden
//! reference vectors.
//!
//! ```text
//! "GFCH" | version u32 = 1 | class_count u32 | per class: name_len u16 + UTF-8 |
//! dim u32 | sample_count u32 |
//! per sample: label u32, path_len u16 + UTF-8 source path, features f32 × dim |
//! crc32 u32 over everything after the magic
//! ```

use std::path::Path;

use super::{Decoder, Encoder};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GFCH";

/// Extracted features for a labelled image set. Rows are stored contiguously
/// in `features` (`len() × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub class_names: Vec<String>,
    pub dim: usize,
    pub labels: Vec<u32>,
    pub source_paths: Vec<String>,
    pub features: Vec<f32>,
}

/// One cached row, borrowed from a [`FeatureCache`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRef<'a> {
    pub label: u32,
    pub source_path: &'a str,
    pub features: &'a [f32],
}

impl FeatureCache {
    pub fn new(class_names: Vec<String>, dim: usize) -> Self {
        FeatureCache {
            class_names,
            dim,
            labels: Vec::new(),
            source_paths: Vec::new(),
            features: Vec::new(),
        }
    }

    pub fn push(&mut self, label: u32, source_path: impl Into<String>, features: &[f32]) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::Dimension(format!(
                "feature row has {} values, cache dim is {}",
                features.len(),
                self.dim
            )));
        }
        if label as usize >= self.class_names.len() {
            return Err(Error::Input(format!(
                "label {label} out of range for {} classes",
                self.class_names.len()
            )));
        }
        self.labels.push(label);
        self.source_paths.push(source_path.into());
        self.features.extend_from_slice(features);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample(&self, i: usize) -> SampleRef<'_> {
        SampleRef {
            label: self.labels[i],
            source_path: &self.source_paths[i],
            features: self.row(i),
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = SampleRef<'_>> {
        (0..self.len()).map(|i| self.sample(i))
    }

    /// Labels as indices, for the classifier and metrics.
    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    fn check(&self) -> Result<()> {
        let n = self.labels.len();
        if self.source_paths.len() != n || self.features.len() != n * self.dim {
            return Err(Error::Input(format!(
                "inconsistent cache: {n} labels, {} paths, {} feature values for dim {}",
                self.source_paths.len(),
                self.features.len(),
                self.dim
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l as usize >= self.class_names.len()) {
            return Err(Error::Input(format!(
                "label {bad} out of range for {} classes",
                self.class_names.len()
            )));
        }
        Ok(())
    }
}

pub fn encode_cache(cache: &FeatureCache) -> Result<Vec<u8>> {
    cache.check()?;
    let mut enc = Encoder::new(MAGIC);
    enc.count(cache.class_names.len(), "class count")?;
    for name in &cache.class_names {
        enc.str16(name)?;
    }
    enc.count(cache.dim, "feature dim")?;
    enc.count(cache.len(), "sample count")?;
    for s in cache.samples() {
        enc.u32(s.label);
        enc.str16(s.source_path)?;
        enc.f32s(s.features);
    }
    Ok(enc.finish())
}

pub fn decode_cache(bytes: &[u8]) -> Result<FeatureCache> {
    let mut dec = Decoder::new(bytes, MAGIC)?;
    let class_count = dec.u32()? as usize;
    let class_names = (0..class_count).map(|_| dec.str16()).collect::<Result<Vec<_>>>()?;
    let dim = dec.u32()? as usize;
    let n = dec.u32()? as usize;
    let mut cache = FeatureCache::new(class_names, dim);
    for i in 0..n {
        let label = dec.u32()?;
        if label as usize >= class_count {
            return Err(Error::Format(format!(
                "sample {i} has label {label} but only {class_count} classes"
            )));
        }
        let path = dec.str16()?;
        dec.f32s_into(dim, &mut cache.features)?;
        cache.labels.push(label);
        cache.source_paths.push(path);
    }
    dec.finish()?;
    Ok(cache)
}

pub fn write_cache(cache: &FeatureCache, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path.as_ref(), &encode_cache(cache)?)
}

pub fn load_cache(path: impl AsRef<Path>) -> Result<FeatureCache> {
    decode_cache(&super::read_file(path.as_ref())?)
}
