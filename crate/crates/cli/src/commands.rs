use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use leafscan_core::dataset::{preprocess, scan_dataset, stratified_split, LabeledImageSet};
use leafscan_core::forest::{self, FeatureView};
use leafscan_core::io::cache::{load_cache, write_cache};
use leafscan_core::io::model::write_forest;
use leafscan_core::io::weights::{decode_weights, load_weights, write_weights};
use leafscan_core::metrics::{class_metrics, render_report};
use leafscan_core::vgg::{self, conv_parameter_count};
use leafscan_core::{
    validate_weights, ConfusionMatrix, Error, EvaluationReport, FeatureCache, FeatureExtractor, ForestParams,
    SplitConfig, WeightSet,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::failure::Failure;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Error::io(path, e).into()
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

pub fn inspect(weights: &Path) -> Result<(), Failure> {
    let bytes = fs::read(weights).map_err(|e| io_failure(weights, e))?;
    let ws = decode_weights(&bytes)?;

    println!("{:<14}  {:<18}  {:>12}", "Layer", "kh x kw x in x out", "Parameters");
    for layer in &ws.layers {
        let (kh, kw, ci, co) = layer.kernel.shape();
        println!(
            "{:<14}  {:<18}  {:>12}",
            layer.name,
            format!("{kh}x{kw}x{ci}x{co}"),
            thousands(layer.kernel.parameter_count())
        );
    }
    println!("{:<14}  {:<18}  {:>12}", "Total", "", thousands(ws.total_parameters()));
    println!("Expected for VGG16 conv stack: {}", thousands(conv_parameter_count()));

    let violations = validate_weights(&ws);
    if violations.is_empty() {
        println!("Validation: OK");
        return Ok(());
    }
    println!("Validation: FAILED");
    for v in &violations {
        println!("  - {v}");
    }
    Err(Failure::input(format!(
        "{} does not match the VGG16 architecture ({} problem(s))",
        weights.display(),
        violations.len()
    )))
}

pub fn synth_weights(out: &Path, seed: u64) -> Result<(), Failure> {
    let ws = WeightSet::random(seed);
    write_weights(&ws, out)?;
    println!(
        "wrote {} randomly initialised parameters (seed {seed}) to {}",
        thousands(ws.total_parameters()),
        out.display()
    );
    Ok(())
}

/// Decodes and featurises every image of `set`. Undecodable images are
/// reported and left out; more than 10% of them fails the whole run.
fn extract_set(set: &LabeledImageSet, weights: &Path, size: usize) -> Result<FeatureCache, Failure> {
    vgg::shape_trace(size, size)?;
    let ws = load_weights(weights)?;
    let extractor = FeatureExtractor::new(&ws)?;
    let total = set.items.len();
    eprintln!(
        "extracting features for {total} images in {} classes at {size}x{size}",
        set.class_names.len()
    );

    let done = AtomicUsize::new(0);
    let step = (total / 10).max(1);
    let rows: Vec<Result<Vec<f32>, Error>> = set
        .items
        .par_iter()
        .map(|item| {
            let row = preprocess(&item.path, size).and_then(|img| extractor.extract(&img));
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if n % step == 0 || n == total {
                eprintln!("  {n}/{total}");
            }
            row.map(|f| f.0)
        })
        .collect();

    let mut cache = FeatureCache::new(set.class_names.clone(), vgg::feature_dim(size, size));
    let mut failures = Vec::new();
    for (item, row) in set.items.iter().zip(rows) {
        match row {
            Ok(features) => cache.push(item.label as u32, set.relative_path(item), &features)?,
            Err(e @ (Error::Decode { .. } | Error::Io { .. })) => failures.push(e),
            Err(e) => return Err(e.into()),
        }
    }
    if !failures.is_empty() {
        eprintln!("skipped {} image(s) that could not be read:", failures.len());
        for e in &failures {
            eprintln!("  {e}");
        }
    }
    if failures.len() * 10 > total {
        return Err(Failure::input(format!(
            "{} of {total} images could not be read (more than 10%)",
            failures.len()
        )));
    }
    Ok(cache)
}

fn scan(data: &Path) -> Result<LabeledImageSet, Failure> {
    let set = scan_dataset(data)?;
    if set.skipped > 0 {
        eprintln!("ignoring {} non-image file(s) under {}", set.skipped, data.display());
    }
    Ok(set)
}

pub fn extract(data: &Path, weights: &Path, out: &Path, size: usize) -> Result<(), Failure> {
    let set = scan(data)?;
    let cache = extract_set(&set, weights, size)?;
    write_cache(&cache, out)?;
    println!(
        "wrote {} feature vectors of dimension {} ({} classes) to {}",
        cache.len(),
        cache.dim,
        cache.class_names.len(),
        out.display()
    );
    Ok(())
}

/// Everything recorded about one train/evaluate run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub split: String,
    pub train_fraction: f64,
    pub seed: u64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub feature_dim: usize,
    pub forest: ForestParams,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

/// "80-20" for 0.8.
fn split_label(ratio: f64) -> String {
    let train = (ratio * 100.0).round() as u32;
    format!("{train}-{}", 100 - train)
}

fn gather(cache: &FeatureCache, rows: &[usize]) -> (Vec<f32>, Vec<usize>) {
    let mut x = Vec::with_capacity(rows.len() * cache.dim);
    let mut y = Vec::with_capacity(rows.len());
    for &i in rows {
        x.extend_from_slice(cache.row(i));
        y.push(cache.labels[i] as usize);
    }
    (x, y)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn evaluate(cache: &FeatureCache, ratio: f64, params: &ForestParams, out: &Path) -> Result<RunMetrics, Failure> {
    let k = cache.class_names.len();
    let split = stratified_split(&cache.label_indices(), k, &SplitConfig::new(ratio, params.seed)?)?;
    let (train_x, train_y) = gather(cache, &split.train);
    let (test_x, test_y) = gather(cache, &split.test);

    let model = forest::train(FeatureView::new(&train_x, cache.dim)?, &train_y, k, params)?;
    let predicted = model.predict_all(FeatureView::new(&test_x, cache.dim)?)?;
    let cm = ConfusionMatrix::from_labels(&test_y, &predicted, cache.class_names.clone())?;
    let rendered = render_report(&cm, &class_metrics(&cm))?;

    let metrics = RunMetrics {
        split: split_label(ratio),
        train_fraction: ratio,
        seed: params.seed,
        train_samples: split.train.len(),
        test_samples: split.test.len(),
        feature_dim: cache.dim,
        forest: params.clone(),
        report: rendered.report,
    };
    let mut text = String::new();
    let _ = writeln!(
        text,
        "Seed {} | training-testing split {} | {} train / {} test samples | {} trees, {} features per split",
        params.seed,
        metrics.split,
        metrics.train_samples,
        metrics.test_samples,
        params.n_trees,
        params.features_per_split_for(cache.dim),
    );
    text.push('\n');
    text.push_str(&rendered.text);

    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    write_forest(&model, out.join("model.grfm"))?;
    write_text(&out.join("confusion.csv"), &cm.to_csv())?;
    write_text(&out.join("report.txt"), &text)?;
    write_text(&out.join("metrics.json"), &to_json(&metrics))?;
    print!("{text}");
    Ok(metrics)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn train_eval(cache: &Path, ratio: f64, params: &ForestParams, out: &Path) -> Result<(), Failure> {
    let cache = load_cache(cache)?;
    evaluate(&cache, ratio, params, out).map(drop)
}

pub struct PipelineConfig {
    pub data: PathBuf,
    pub weights: PathBuf,
    pub out: PathBuf,
    pub ratios: Vec<f64>,
    pub params: ForestParams,
    pub size: usize,
    pub fresh: bool,
}

#[derive(Serialize)]
struct PipelineMetrics<'a> {
    seed: u64,
    input_size: usize,
    classes: &'a [String],
    samples: usize,
    runs: Vec<RunMetrics>,
}

/// Every weight file ends in the CRC32 of its contents, which makes a cheap
/// fingerprint for naming the feature cache.
fn weights_fingerprint(path: &Path) -> Result<u32, Failure> {
    let mut f = fs::File::open(path).map_err(|e| io_failure(path, e))?;
    let mut crc = [0u8; 4];
    f.seek(SeekFrom::End(-4))
        .and_then(|_| f.read_exact(&mut crc))
        .map_err(|e| io_failure(path, e))?;
    Ok(u32::from_le_bytes(crc))
}

/// A cache is reusable when it was built from exactly the images now present.
fn reusable_cache(path: &Path, set: &LabeledImageSet, size: usize) -> Option<FeatureCache> {
    let cache = load_cache(path).ok()?;
    let same = cache.class_names == set.class_names
        && cache.dim == vgg::feature_dim(size, size)
        && cache.source_paths.len() == set.items.len()
        && cache
            .source_paths
            .iter()
            .zip(&set.items)
            .all(|(p, item)| *p == set.relative_path(item));
    same.then_some(cache)
}

pub fn pipeline(cfg: &PipelineConfig) -> Result<(), Failure> {
    if cfg.ratios.is_empty() {
        return Err(Failure::input("at least one ratio is required"));
    }
    for &r in &cfg.ratios {
        SplitConfig::new(r, cfg.params.seed)?;
    }
    cfg.params.validate(vgg::feature_dim(cfg.size, cfg.size))?;
    let set = scan(&cfg.data)?;
    fs::create_dir_all(&cfg.out).map_err(|e| io_failure(&cfg.out, e))?;

    let cache_path = cfg.out.join(format!(
        "features-{}-{:08x}.gfch",
        cfg.size,
        weights_fingerprint(&cfg.weights)?
    ));
    let cached = if cfg.fresh {
        None
    } else {
        reusable_cache(&cache_path, &set, cfg.size)
    };
    let cache = match cached {
        Some(c) => {
            eprintln!("reusing feature cache {}", cache_path.display());
            c
        }
        None => {
            let c = extract_set(&set, &cfg.weights, cfg.size)?;
            write_cache(&c, &cache_path)?;
            c
        }
    };

    let mut runs = Vec::with_capacity(cfg.ratios.len());
    for &ratio in &cfg.ratios {
        println!();
        runs.push(evaluate(
            &cache,
            ratio,
            &cfg.params,
            &cfg.out.join(format!("split-{}", split_label(ratio))),
        )?);
    }

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "Classification accuracy for different training-testing ratios (seed {})",
        cfg.params.seed
    );
    let _ = writeln!(summary, "{:<24}  {:>12}", "Training-testing ratio", "Accuracy (%)");
    for run in &runs {
        let _ = writeln!(summary, "{:<24}  {:>12.2}", run.split, run.report.accuracy * 100.0);
    }
    println!();
    print!("{summary}");
    write_text(&cfg.out.join("summary.txt"), &summary)?;
    let metrics = PipelineMetrics {
        seed: cfg.params.seed,
        input_size: cfg.size,
        classes: &cache.class_names,
        samples: cache.len(),
        runs,
    };
    write_text(&cfg.out.join("metrics.json"), &to_json(&metrics))
}
