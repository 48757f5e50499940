//! Class-per-directory image datasets: scanning, preprocessing and seeded
//! stratified train/test splits.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageReader};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

const IMAGE_EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub path: PathBuf,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImageSet {
    pub root: PathBuf,
    /// Subdirectory names in lexicographic order; labels index this list.
    pub class_names: Vec<String>,
    /// Grouped by class, sorted by path within each class.
    pub items: Vec<LabeledImage>,
    /// Files without an image extension that were ignored.
    pub skipped: usize,
}

impl LabeledImageSet {
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for item in &self.items {
            counts[item.label] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// `class/file` path of an item relative to the dataset root, with `/`
    /// separators.
    pub fn relative_path(&self, item: &LabeledImage) -> String {
        let rel = item.path.strip_prefix(&self.root).unwrap_or(&item.path);
        rel.components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }

    pub fn split(&self, cfg: &SplitConfig) -> Result<TrainTestSplit> {
        stratified_split(&self.labels(), self.class_names.len(), cfg)
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

/// Lists `<root>/<class>/<image>` files. Hidden directories are ignored.
pub fn scan_dataset(root: impl AsRef<Path>) -> Result<LabeledImageSet> {
    let root = root.as_ref();
    let mut class_names = Vec::new();
    let mut items = Vec::new();
    let mut skipped = 0;
    for entry in sorted_entries(root)? {
        let path = entry.path();
        if !path.is_dir() || entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        let name = entry
            .file_name()
            .into_string()
            .map_err(|n| Error::Dataset(format!("class directory {n:?} is not valid UTF-8")))?;
        let label = class_names.len();
        let before = items.len();
        for file in sorted_entries(&path)? {
            let p = file.path();
            if !p.is_file() {
                continue;
            }
            if is_image(&p) {
                items.push(LabeledImage { path: p, label });
            } else {
                skipped += 1;
            }
        }
        if items.len() == before {
            return Err(Error::Dataset(format!("class {name:?} contains no images")));
        }
        class_names.push(name);
    }
    if class_names.len() < 2 {
        return Err(Error::Dataset(format!(
            "{} needs at least 2 class directories, found {}",
            root.display(),
            class_names.len()
        )));
    }
    Ok(LabeledImageSet {
        root: root.to_path_buf(),
        class_names,
        items,
        skipped,
    })
}

/// Decode, force RGB, bilinear-resize to `size × size` and scale to [0, 1].
pub fn preprocess(path: impl AsRef<Path>, size: usize) -> Result<Tensor> {
    let path = path.as_ref();
    let decode_err = |source| Error::Decode {
        path: path.to_path_buf(),
        source,
    };
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(decode_err)?;
    preprocess_image(&img, size)
}

pub fn preprocess_image(img: &DynamicImage, size: usize) -> Result<Tensor> {
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 || size == 0 {
        return Err(Error::Dimension(format!(
            "cannot resize {w}x{h} image to {size}x{size}"
        )));
    }
    let src: Vec<f32> = rgb.as_raw().iter().map(|&b| b as f32).collect();
    let mut out = resize_bilinear(&src, h, w, 3, size, size);
    for v in &mut out {
        *v = (*v / 255.0).clamp(0.0, 1.0);
    }
    Tensor::new(size, size, 3, out)
}

/// Source sample positions along one axis: `(i0, i1, weight of i1)`.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, (pos - i0 as f64) as f32)
        })
        .collect()
}

/// Bilinear resampling of an H→W→C buffer with half-pixel-centred sample
/// positions and edge clamping. No antialiasing is applied when shrinking.
pub fn resize_bilinear(
    src: &[f32],
    height: usize,
    width: usize,
    channels: usize,
    out_height: usize,
    out_width: usize,
) -> Vec<f32> {
    assert_eq!(src.len(), height * width * channels);
    let ys = axis_taps(height, out_height);
    let xs = axis_taps(width, out_width);
    let mut out = Vec::with_capacity(out_height * out_width * channels);
    let at = |y: usize, x: usize, c: usize| src[(y * width + x) * channels + c];
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..channels {
                let top = at(y0, x0, c) * (1.0 - fx) + at(y0, x1, c) * fx;
                let bottom = at(y1, x0, c) * (1.0 - fx) + at(y1, x1, c) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Split(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(SplitConfig { train_fraction, seed })
    }
}

/// Sample indices of each partition, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTestSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class train size: `round(fraction · n)` with halves rounded up. The
/// epsilon absorbs binary representation error (0.7 · 5 = 3.4999…).
pub fn train_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 0.5 + 1e-9).floor() as usize
}

/// Shuffles each class with its own stream keyed by `(seed, label)` and takes
/// the first [`train_count`] members for training.
pub fn stratified_split(labels: &[usize], n_classes: usize, cfg: &SplitConfig) -> Result<TrainTestSplit> {
    SplitConfig::new(cfg.train_fraction, cfg.seed)?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or_else(|| Error::Split(format!("label {l} out of range for {n_classes} classes")))?
            .push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut members) in by_class.into_iter().enumerate() {
        let n = members.len();
        let n_train = train_count(cfg.train_fraction, n);
        if n_train == 0 || n_train >= n {
            return Err(Error::Split(format!(
                "class {label} with {n} samples gets {n_train} for training at fraction {}; both partitions must be non-empty",
                cfg.train_fraction
            )));
        }
        members.shuffle(&mut rng::stream(cfg.seed, rng::Domain::Split, label as u64));
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(TrainTestSplit { train, test })
}
