mod support;

use std::fs;

use support::{leafscan, path_str, stderr, stdout, synth_weights, synthetic_dataset};

#[test]
fn inspect_reports_valid_corrupt_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("w.gvgg");
    synth_weights(&weights, 1);

    let ok = leafscan(&["inspect", "--weights", path_str(&weights)]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let text = stdout(&ok);
    assert!(text.contains("block5_conv3"));
    assert!(text.contains("14,714,688"));
    assert!(text.contains("Validation: OK"));

    let mut bytes = fs::read(&weights).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    let corrupt = dir.path().join("corrupt.gvgg");
    fs::write(&corrupt, &bytes).unwrap();
    let bad = leafscan(&["inspect", "--weights", path_str(&corrupt)]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("integrity"), "{}", stderr(&bad));

    let missing = leafscan(&["inspect", "--weights", "/no/such/file.gvgg"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("/no/such/file.gvgg"));
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(leafscan(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(leafscan(&["train-eval", "--cache"]).status.code(), Some(2));
    assert_eq!(leafscan(&["--help"]).status.code(), Some(0));
}

#[test]
fn extract_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(&dir.path().join("data"), 5, 3);
    let weights = dir.path().join("w.gvgg");
    synth_weights(&weights, 2);
    let cache = dir.path().join("c.gfch");

    let args = [
        "extract",
        "--data",
        path_str(&data),
        "--weights",
        path_str(&weights),
        "--out",
        path_str(&cache),
        "--size",
        "32",
    ];
    let first = leafscan(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let bytes = fs::read(&cache).unwrap();
    assert!(leafscan(&args).status.success());
    assert_eq!(fs::read(&cache).unwrap(), bytes, "rerun must rewrite identical bytes");
    let parsed = leafscan_core::io::cache::load_cache(&cache).unwrap();
    assert_eq!((parsed.class_names.len(), parsed.dim, parsed.len()), (4, 512, 20));

    let run = |out: &str| {
        let o = leafscan(&[
            "train-eval",
            "--cache",
            path_str(&cache),
            "--ratio",
            "0.6",
            "--seed",
            "42",
            "--trees",
            "15",
            "--out",
            out,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let report = run(path_str(&a));
    run(path_str(&b));
    assert!(report.contains("Seed 42"));
    for class in support::CLASSES {
        assert!(report.contains(class));
    }
    for file in ["metrics.json", "confusion.csv", "report.txt", "model.grfm"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["classes"].as_array().unwrap().len(), 4);
    assert_eq!(json["test_samples"], 8);
    assert!(fs::read_to_string(a.join("confusion.csv"))
        .unwrap()
        .starts_with("true\\predicted,Black_rot,Esca"));
}

#[test]
fn infeasible_split_and_bad_params_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(&dir.path().join("data"), 2, 4);
    let weights = dir.path().join("w.gvgg");
    synth_weights(&weights, 3);
    let cache = dir.path().join("c.gfch");
    let o = leafscan(&[
        "extract",
        "--data",
        path_str(&data),
        "--weights",
        path_str(&weights),
        "--out",
        path_str(&cache),
        "--size",
        "32",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let out = dir.path().join("out");
    for extra in [
        &["--ratio", "0.9"][..],
        &["--ratio", "1.5"],
        &["--trees", "0"],
        &["--min-split", "1"],
    ] {
        let mut args = vec!["train-eval", "--cache", path_str(&cache), "--out", path_str(&out)];
        args.extend_from_slice(extra);
        let o = leafscan(&args);
        assert_eq!(o.status.code(), Some(2), "{extra:?}: {}", stderr(&o));
    }
}

#[test]
fn extract_rejects_single_class_and_bad_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(&dir.path().join("data"), 2, 5);
    let weights = dir.path().join("w.gvgg");
    synth_weights(&weights, 4);
    let out = dir.path().join("c.gfch");

    let bad_size = leafscan(&[
        "extract",
        "--data",
        path_str(&data),
        "--weights",
        path_str(&weights),
        "--out",
        path_str(&out),
        "--size",
        "50",
    ]);
    assert_eq!(bad_size.status.code(), Some(2));

    let single = dir.path().join("single");
    fs::create_dir_all(single.join("only")).unwrap();
    fs::copy(data.join("Esca/img_000.png"), single.join("only/a.png")).unwrap();
    let o = leafscan(&[
        "extract",
        "--data",
        path_str(&single),
        "--weights",
        path_str(&weights),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dataset"), "{}", stderr(&o));
}

#[test]
fn undecodable_images_are_skipped_until_they_exceed_ten_percent() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(&dir.path().join("data"), 6, 6);
    let weights = dir.path().join("w.gvgg");
    synth_weights(&weights, 5);
    let out = dir.path().join("c.gfch");
    let args = [
        "extract",
        "--data",
        path_str(&data),
        "--weights",
        path_str(&weights),
        "--out",
        path_str(&out),
        "--size",
        "32",
    ];

    fs::write(data.join("Esca/broken.png"), b"\x89PNG but not really").unwrap();
    let o = leafscan(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("broken.png"));
    assert_eq!(leafscan_core::io::cache::load_cache(&out).unwrap().len(), 24);

    for i in 0..3 {
        fs::write(data.join(format!("Healthy/junk{i}.jpg")), b"nope").unwrap();
    }
    let o = leafscan(&args);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("more than 10%"), "{}", stderr(&o));
}

#[test]
fn pipeline_with_single_ratio_has_one_summary_row_and_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(&dir.path().join("data"), 5, 7);
    let weights = dir.path().join("w.gvgg");
    synth_weights(&weights, 6);
    let out = dir.path().join("out");
    let args = [
        "pipeline",
        "--data",
        path_str(&data),
        "--weights",
        path_str(&weights),
        "--out",
        path_str(&out),
        "--ratios",
        "0.8",
        "--size",
        "32",
        "--trees",
        "10",
    ];
    let first = leafscan(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(summary.lines().count(), 3, "{summary}");
    assert!(summary.contains("80-20"));
    let metrics = fs::read(out.join("metrics.json")).unwrap();

    let second = leafscan(&args);
    assert!(second.status.success());
    assert!(stderr(&second).contains("reusing feature cache"));
    assert_eq!(fs::read(out.join("metrics.json")).unwrap(), metrics);
}
