//! Integration tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use robin_core::raster::{synth_image, write_pgm, Ellipse, PolyProduct, SceneSpec};

fn robin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robin"))
}

fn run(args: &[&str]) -> Output {
    robin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

/// Small scene written as an 8-bit PGM for fast end-to-end runs.
fn write_scene(path: &Path, with_disk: bool) {
    let scene = synth_image(&SceneSpec {
        rows: 64,
        cols: 72,
        background: vec![PolyProduct {
            row_coeffs: vec![0.6, 0.2],
            col_coeffs: vec![1.0, 0.1],
        }],
        foregrounds: if with_disk {
            vec![
                Ellipse::disk((24.0, 26.0), 8.0, 0.4),
                Ellipse::disk((46.0, 52.0), 7.0, 0.4),
            ]
        } else {
            vec![]
        },
        noise_sigma: 0.02,
        seed: 9,
    })
    .unwrap();
    write_pgm(&scene.image, path, 255).unwrap();
}

#[test]
fn binarize_writes_all_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scene.pgm");
    write_scene(&input, true);

    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let res = run(&[
            "binarize",
            input.to_str().unwrap(),
            "--max-stages",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "stderr: {}", stderr(&res));
    }
    for name in [
        "scene_mask.pbm",
        "scene_background.pgm",
        "scene_subtracted.pgm",
        "scene.json",
    ] {
        assert!(out1.join(name).is_file(), "missing {name}");
    }
    // Masks are byte-identical across runs; sidecars agree except wall time.
    assert_eq!(
        fs::read(out1.join("scene_mask.pbm")).unwrap(),
        fs::read(out2.join("scene_mask.pbm")).unwrap()
    );
    let sidecar1: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("scene.json")).unwrap()).unwrap();
    let sidecar2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out2.join("scene.json")).unwrap()).unwrap();
    assert_eq!(sidecar1["schema"], 1);
    assert_eq!(sidecar1["tau"], sidecar2["tau"]);
    assert!(sidecar1["tau"].as_f64().unwrap().is_finite());
    assert!(!sidecar1["stages"].as_array().unwrap().is_empty());
    assert!(sidecar1["stages"][0]["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn binarize_missing_file_exits_2_and_names_the_path() {
    let res = run(&["binarize", "/nonexistent/missing_input.pgm"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(
        stderr(&res).contains("missing_input.pgm"),
        "stderr: {}",
        stderr(&res)
    );
}

#[test]
fn otsu_sidecar_has_no_stage_fields() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scene.pgm");
    write_scene(&input, true);
    let out = dir.path().join("out");
    let res = run(&[
        "binarize",
        input.to_str().unwrap(),
        "--method",
        "otsu",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", stderr(&res));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("scene.json")).unwrap()).unwrap();
    assert!(sidecar.get("stages").is_none());
    assert!(sidecar.get("lambda_grid").is_none());
    assert_eq!(sidecar["method"], "otsu");
    assert!(sidecar["tau"].as_f64().is_some());
}

#[test]
fn method_specific_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scene.pgm");
    write_scene(&input, true);
    let res = run(&[
        "binarize",
        input.to_str().unwrap(),
        "--method",
        "otsu",
        "--lambda-grid",
        "1e-4,1",
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("--lambda-grid"));

    let res = run(&[
        "binarize",
        input.to_str().unwrap(),
        "--method",
        "proposed",
        "--window",
        "25",
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("--window"));
}

#[test]
fn synth_is_byte_identical_for_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = run(&["synth", "--out", out.to_str().unwrap(), "--seed", "5"]);
        assert!(res.status.success(), "stderr: {}", stderr(&res));
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 31); // 10 scenes x 3 files + manifest
    assert!(names.contains(&"manifest.json".to_string()));
    for name in &names {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "file {name} differs between runs"
        );
    }
}

#[test]
fn evaluate_reports_rows_mean_and_row_level_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Three entries: two good scenes and one corrupt input.
    let good1 = dir.path().join("good1.pgm");
    let good2 = dir.path().join("good2.pgm");
    write_scene(&good1, true);
    write_scene(&good2, true);
    let corrupt = dir.path().join("corrupt.pgm");
    fs::write(&corrupt, b"not a pgm at all").unwrap();

    // Ground truths: reuse the scene generator's mask.
    let scene = synth_image(&SceneSpec {
        rows: 64,
        cols: 72,
        background: vec![PolyProduct {
            row_coeffs: vec![0.6, 0.2],
            col_coeffs: vec![1.0, 0.1],
        }],
        foregrounds: vec![
            Ellipse::disk((24.0, 26.0), 8.0, 0.4),
            Ellipse::disk((46.0, 52.0), 7.0, 0.4),
        ],
        noise_sigma: 0.02,
        seed: 9,
    })
    .unwrap();
    let gt = dir.path().join("gt.pbm");
    robin_core::raster::write_pbm(&scene.mask, &gt).unwrap();

    let manifest = dir.path().join("manifest.json");
    fs::write(
        &manifest,
        format!(
            r#"{{"schema":1,"entries":[
                {{"id":"a_good","input":"good1.pgm","ground_truth":"gt.pbm"}},
                {{"id":"b_corrupt","input":"corrupt.pgm","ground_truth":"gt.pbm"}},
                {{"id":"c_good","input":"good2.pgm","ground_truth":"gt.pbm"}}
            ]}}"#
        ),
    )
    .unwrap();

    let out1 = dir.path().join("r1");
    let out2 = dir.path().join("r2");
    for out in [&out1, &out2] {
        let res = run(&[
            "evaluate",
            "--manifest",
            manifest.to_str().unwrap(),
            "--max-stages",
            "1",
            "--no-timing",
            "--out",
            out.to_str().unwrap(),
        ]);
        // Row-level failures do not fail the run.
        assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
        assert!(stderr(&res).contains("b_corrupt"));
    }
    let csv = fs::read_to_string(out1.join("report_proposed.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema: 1");
    assert!(lines[1].starts_with("id,FM,pFM,PSNR,DRD,MPM,tau,stages,seconds"));
    assert_eq!(lines.len(), 2 + 3 + 1); // header block + 3 rows + mean
    assert!(lines[2].starts_with("a_good,0."));
    assert!(lines[3].starts_with("b_corrupt,,"));
    assert!(lines[4].starts_with("c_good,0."));
    assert!(lines[5].starts_with("mean,"));

    // The mean FM is the arithmetic mean of the successful rows.
    let fm_of = |line: &str| line.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    let mean_fm = (fm_of(lines[2]) + fm_of(lines[4])) / 2.0;
    assert!((fm_of(lines[5]) - mean_fm).abs() < 1e-9);

    // Byte-identical reports across runs under --no-timing.
    assert_eq!(
        fs::read(out1.join("report_proposed.csv")).unwrap(),
        fs::read(out2.join("report_proposed.csv")).unwrap()
    );
}

#[test]
fn evaluate_json_report_carries_schema_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scene.pgm");
    write_scene(&input, true);
    let scene_gt = dir.path().join("scene_gt.pbm");
    let scene = synth_image(&SceneSpec {
        rows: 64,
        cols: 72,
        background: vec![PolyProduct {
            row_coeffs: vec![0.6, 0.2],
            col_coeffs: vec![1.0, 0.1],
        }],
        foregrounds: vec![
            Ellipse::disk((24.0, 26.0), 8.0, 0.4),
            Ellipse::disk((46.0, 52.0), 7.0, 0.4),
        ],
        noise_sigma: 0.02,
        seed: 9,
    })
    .unwrap();
    robin_core::raster::write_pbm(&scene.mask, &scene_gt).unwrap();
    let manifest = dir.path().join("m.json");
    fs::write(
        &manifest,
        r#"{"schema":1,"entries":[{"id":"only","input":"scene.pgm","ground_truth":"scene_gt.pbm"}]}"#,
    )
    .unwrap();
    let out = dir.path().join("rep");
    let res = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--methods",
        "otsu",
        "--report",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", stderr(&res));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report_otsu.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["method"], "otsu");
    assert_eq!(report["rows"].as_array().unwrap().len(), 1);
    assert!(report["mean"]["fm"].as_f64().unwrap() > 0.0);
}

#[test]
fn pair_writes_a_manifest_for_review() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("inputs");
    let truths = dir.path().join("truths");
    fs::create_dir_all(&inputs).unwrap();
    fs::create_dir_all(&truths).unwrap();
    write_scene(&inputs.join("img1.pgm"), true);
    write_scene(&inputs.join("img2.pgm"), true);
    let scene = synth_image(&SceneSpec {
        rows: 64,
        cols: 72,
        background: vec![PolyProduct::constant(0.8)],
        foregrounds: vec![Ellipse::disk((30.0, 30.0), 6.0, 0.3)],
        noise_sigma: 0.0,
        seed: 1,
    })
    .unwrap();
    robin_core::raster::write_pbm(&scene.mask, truths.join("img1_gt.pbm")).unwrap();

    let manifest = dir.path().join("paired.json");
    let res = run(&[
        "pair",
        "--inputs",
        inputs.to_str().unwrap(),
        "--truths",
        truths.to_str().unwrap(),
        "--out",
        manifest.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", stderr(&res));
    assert!(stderr(&res).contains("img2"), "unmatched input warned");
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(parsed["entries"].as_array().unwrap().len(), 1);
    assert_eq!(parsed["entries"][0]["id"], "img1");
}

#[test]
fn usage_error_on_unknown_method() {
    let res = run(&["binarize", "x.pgm", "--method", "nonsense"]);
    assert_eq!(res.status.code(), Some(2));
}
