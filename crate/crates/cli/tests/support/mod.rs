#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{ImageFormat, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CLASSES: [&str; 4] = ["Black_rot", "Esca", "Healthy", "Leaf_blight"];

pub fn leafscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafscan"))
        .args(args)
        .env("LEAFSCAN_THREADS", "0")
        .output()
        .expect("spawn leafscan")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Leaf-like synthetic image: a green background with class-specific blotch
/// colour and density, random size and position jitter, and pixel noise.
fn leaf_image(class: usize, rng: &mut impl Rng) -> RgbImage {
    let (w, h) = (rng.gen_range(96..200), rng.gen_range(96..200));
    let blotch: [[u8; 3]; 4] = [[40, 20, 10], [150, 110, 40], [60, 160, 50], [190, 170, 60]];
    let density = [0.35, 0.2, 0.0, 0.5][class];
    let spots: Vec<(f32, f32, f32)> = (0..((w * h) as f32 * density / 400.0) as usize)
        .map(|_| {
            (
                rng.gen_range(0.0..w as f32),
                rng.gen_range(0.0..h as f32),
                rng.gen_range(3.0..9.0),
            )
        })
        .collect();
    let mut img = RgbImage::new(w, h);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let in_spot = spots
            .iter()
            .any(|&(sx, sy, r)| (x as f32 - sx).powi(2) + (y as f32 - sy).powi(2) <= r * r);
        let base = if in_spot { blotch[class] } else { [50, 140, 45] };
        let noise = rng.gen_range(-12i16..=12);
        *px = Rgb(base.map(|c| (c as i16 + noise).clamp(0, 255) as u8));
    }
    img
}

/// Writes `per_class` images into each of the four class directories,
/// alternating PNG and JPEG. Returns the dataset root.
pub fn synthetic_dataset(root: &Path, per_class: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (c, name) in CLASSES.iter().enumerate() {
        let dir = root.join(name);
        std::fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let img = leaf_image(c, &mut rng);
            let (file, fmt) = if i % 2 == 0 {
                (format!("img_{i:03}.png"), ImageFormat::Png)
            } else {
                (format!("img_{i:03}.jpg"), ImageFormat::Jpeg)
            };
            img.save_with_format(dir.join(file), fmt).unwrap();
        }
    }
    root.to_path_buf()
}

pub fn synth_weights(path: &Path, seed: u64) {
    let out = leafscan(&["synth-weights", "--out", path_str(path), "--seed", &seed.to_string()]);
    assert!(out.status.success(), "synth-weights failed: {}", stderr(&out));
}
