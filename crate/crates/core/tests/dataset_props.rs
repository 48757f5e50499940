use std::fs;

use image::{DynamicImage, Rgb, RgbImage};
use leafscan_core::dataset::{
    preprocess, preprocess_image, resize_bilinear, scan_dataset, stratified_split, train_count,
};
use leafscan_core::{Error, SplitConfig};
use proptest::prelude::*;

/// Second, independently written bilinear sampler: maps each output pixel
/// centre back to source coordinates and blends the four clamped neighbours.
fn reference_resize(src: &RgbImage, size: usize) -> Vec<f64> {
    let (w, h) = (src.width() as i64, src.height() as i64);
    let px = |x: i64, y: i64, c: usize| src.get_pixel(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32)[c] as f64;
    let mut out = Vec::new();
    for oy in 0..size {
        for ox in 0..size {
            let sy = ((oy as f64 + 0.5) * h as f64 / size as f64 - 0.5).max(0.0);
            let sx = ((ox as f64 + 0.5) * w as f64 / size as f64 - 0.5).max(0.0);
            let (y0, x0) = (sy.floor() as i64, sx.floor() as i64);
            let (ty, tx) = (sy - y0 as f64, sx - x0 as f64);
            for c in 0..3 {
                let v = px(x0, y0, c) * (1.0 - tx) * (1.0 - ty)
                    + px(x0 + 1, y0, c) * tx * (1.0 - ty)
                    + px(x0, y0 + 1, c) * (1.0 - tx) * ty
                    + px(x0 + 1, y0 + 1, c) * tx * ty;
                out.push(v / 255.0);
            }
        }
    }
    out
}

#[test]
fn checkerboard_upsample_matches_reference() {
    let mut img = RgbImage::new(2, 2);
    for (x, y, p) in img.enumerate_pixels_mut() {
        *p = if (x + y) % 2 == 0 {
            Rgb([255, 255, 255])
        } else {
            Rgb([0, 0, 0])
        };
    }
    let got = preprocess_image(&DynamicImage::ImageRgb8(img.clone()), 4).unwrap();
    let want = reference_resize(&img, 4);
    for (g, w) in got.data().iter().zip(&want) {
        assert!((*g as f64 - w).abs() <= 1.0 / 255.0, "{g} vs {w}");
    }
    // corner pixels are clamped onto the source corners
    assert_eq!(got.get(0, 0, 0), 1.0);
    assert_eq!(got.get(0, 3, 0), 0.0);
    assert_eq!(got.get(1, 1, 0), 0.625);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resize_matches_reference(w in 1u32..40, h in 1u32..40, size in 1usize..48, seed in any::<u32>()) {
        let img = RgbImage::from_fn(w, h, |x, y| {
            let v = (x.wrapping_mul(73) ^ y.wrapping_mul(151) ^ seed).wrapping_mul(2_654_435_761) >> 8;
            Rgb([v as u8, (v >> 8) as u8, (v >> 16) as u8])
        });
        let got = preprocess_image(&DynamicImage::ImageRgb8(img.clone()), size).unwrap();
        prop_assert_eq!(got.shape(), (size, size, 3));
        for (g, w) in got.data().iter().zip(reference_resize(&img, size)) {
            prop_assert!((*g as f64 - w).abs() <= 1.0 / 255.0, "{} vs {}", g, w);
            prop_assert!((0.0..=1.0).contains(g));
        }
    }

    #[test]
    fn resize_of_constant_is_constant(v in 0.0f32..255.0, h in 1usize..20, w in 1usize..20, oh in 1usize..20, ow in 1usize..20) {
        let out = resize_bilinear(&vec![v; h * w * 2], h, w, 2, oh, ow);
        prop_assert!(out.iter().all(|x| (x - v).abs() <= 1e-3 * v.max(1.0)));
    }

    #[test]
    fn split_is_a_stratified_partition(
        class_sizes in prop::collection::vec(2usize..40, 2..6), fraction in 0.1f64..0.9, seed in any::<u64>(),
    ) {
        let labels: Vec<usize> = class_sizes.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat(c).take(n)).collect();
        let k = class_sizes.len();
        let cfg = SplitConfig::new(fraction, seed).unwrap();
        let split = match stratified_split(&labels, k, &cfg) {
            Ok(s) => s,
            Err(Error::Split(_)) => {
                // only legitimate when some class would lose a partition
                let degenerate = class_sizes.iter().any(|&n| {
                    let t = train_count(fraction, n);
                    t == 0 || t >= n
                });
                prop_assert!(degenerate);
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (c, &n) in class_sizes.iter().enumerate() {
            let in_train = split.train.iter().filter(|&&i| labels[i] == c).count();
            prop_assert_eq!(in_train, train_count(fraction, n));
            prop_assert!((in_train as f64 - fraction * n as f64).abs() <= 0.5 + 1e-9);
        }
        prop_assert_eq!(stratified_split(&labels, k, &cfg).unwrap(), split);
    }
}

#[test]
fn train_count_rounds_half_up() {
    assert_eq!(train_count(0.7, 5), 4); // 3.5 → 4
    assert_eq!(train_count(0.8, 297), 238);
    assert_eq!(train_count(0.6, 300), 180);
    assert_eq!(train_count(0.5, 3), 2);
}

#[test]
fn scan_counts_classes_of_the_reference_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let classes = [
        ("Black_rot", 297),
        ("Esca", 312),
        ("Healthy", 303),
        ("Leaf_blight", 300),
    ];
    for (name, n) in classes {
        let d = dir.path().join(name);
        fs::create_dir(&d).unwrap();
        for i in 0..n {
            fs::write(d.join(format!("{i:04}.JPG")), b"").unwrap();
        }
        fs::write(d.join("Thumbs.db"), b"").unwrap();
    }
    fs::create_dir(dir.path().join(".cache")).unwrap();
    let set = scan_dataset(dir.path()).unwrap();
    assert_eq!(set.class_names, ["Black_rot", "Esca", "Healthy", "Leaf_blight"]);
    assert_eq!(set.class_counts(), [297, 312, 303, 300]);
    assert_eq!(set.items.len(), 1212);
    assert_eq!(set.skipped, 4);
    assert_eq!(set.relative_path(&set.items[0]), "Black_rot/0000.JPG");
}

#[test]
fn empty_file_is_a_decode_error_not_a_panic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.png");
    fs::write(&p, b"not an image at all").unwrap();
    assert!(matches!(
        preprocess(&p, 32),
        Err(Error::Decode { .. }) | Err(Error::Io { .. })
    ));
}
