use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use specfuse::fusion::SampleSet;
use specfuse::io::{write_cube, write_labels, write_samples};
use specfuse::model::MergeTable;
use specfuse::{LabelMap, MergedClass, SpectralCube, WavelengthGrid};

fn specfuse(args: &[&str]) -> Output {
    let cwd = tempfile::tempdir().unwrap();
    Command::new(env!("CARGO_BIN_EXE_specfuse"))
        .args(args)
        .current_dir(cwd.path())
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn grid(start: f64, step: f64, stop: f64) -> WavelengthGrid {
    WavelengthGrid::arithmetic(start, step, stop).unwrap()
}

/// Class 1 is vegetation with a red edge, class 2 is flat soil.
fn class_of(idx: usize) -> u32 {
    1 + ((idx * 7 + idx / 5) % 2) as u32
}

fn reflectance(class: u32, idx: usize, nm: f64) -> f32 {
    let jitter = ((idx * 31 % 17) as f64) / 170.0;
    let r = match class {
        1 => 0.04 + jitter * 0.2 + 0.4 / (1.0 + (-(nm - 715.0) / 15.0).exp()),
        _ => 0.15 + jitter + 0.05 * (nm - 400.0) / 500.0,
    };
    r as f32
}

fn scene_cube(w: usize, h: usize, g: &WavelengthGrid) -> SpectralCube {
    let mut data = Vec::with_capacity(w * h * g.len());
    for &nm in g.as_slice() {
        for idx in 0..w * h {
            data.push(reflectance(class_of(idx), idx, nm));
        }
    }
    SpectralCube::new(w, h, g.clone(), data).unwrap()
}

fn scene_labels(w: usize, h: usize) -> LabelMap {
    let table: MergeTable = [(1, MergedClass::Vegetation), (2, MergedClass::NonVegetation)]
        .into_iter()
        .collect();
    LabelMap::new(w, h, (0..w * h).map(class_of).collect(), table).unwrap()
}

fn write_manifest(dir: &Path) -> PathBuf {
    let (w, h) = (8, 6);
    fs::create_dir_all(dir.join("data")).unwrap();
    write_cube(&scene_cube(w, h, &grid(400.0, 10.0, 700.0)), &dir.join("data/wide")).unwrap();
    write_cube(&scene_cube(w, h, &grid(430.0, 4.0, 860.0)), &dir.join("data/fine")).unwrap();
    write_labels(&scene_labels(w, h), &dir.join("data/wide")).unwrap();
    write_labels(&scene_labels(w, h), &dir.join("data/fine")).unwrap();
    let manifest = json!({
        "entries": [
            {"cube_path": "data/wide.scube.json", "label_path": "data/wide.slabel.json", "name": "wide", "native_resolution_nm": 10.0},
            {"cube_path": "data/fine.scube.json", "label_path": "data/fine.slabel.json", "name": "fine", "native_resolution_nm": 4.0}
        ],
        "reference_name": "fine"
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

fn separable_samples(n: usize, bands: usize, offset: usize) -> SampleSet {
    let wavelengths: Vec<f64> = (0..bands).map(|b| 430.0 + 4.0 * b as f64).collect();
    let mut features = Vec::with_capacity(n * bands);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i + offset;
        let class = 1 + (k % 2) as u8;
        let jitter = ((k * 37 % 101) as f32) / 101.0;
        for b in 0..bands {
            let base = if class == 1 { 0.7 } else { 0.2 };
            features.push(base + 0.1 * jitter + 0.01 * b as f32);
        }
        labels.push(class);
    }
    SampleSet::new(wavelengths, features, labels, vec!["synthetic".into(); n]).unwrap()
}

#[test]
fn fuse_caps_to_66_bands() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let out = dir.path().join("fused");
    let run = specfuse(&["fuse", "--manifest", s(&manifest), "--method", "pchip", "--cap", "690", "--out", s(&out)]);
    let summary = stdout_json(&run);
    assert_eq!(summary["grid"]["count"], 66);
    assert_eq!(summary["grid"]["first"], 430.0);
    assert_eq!(summary["grid"]["last"], 690.0);
    for name in ["wide", "fine"] {
        let cube = specfuse::io::read_cube(&out.join(name)).unwrap();
        assert_eq!(cube.bands(), 66);
        assert!(out.join(format!("{name}.slabel.json")).exists());
    }
    for file in ["samples.csv", "train.csv", "test.csv", "provenance.json"] {
        assert!(out.join(file).exists(), "{file}");
    }
    let samples = specfuse::io::read_samples(&out.join("samples.csv")).unwrap();
    assert_eq!(samples.len(), 2 * 48);
    assert_eq!(samples.n_bands(), 66);
}

#[test]
fn explicit_grid_gives_66_bands() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let out = dir.path().join("fused");
    let run = specfuse(&["fuse", "--manifest", s(&manifest), "--method", "cubic", "--grid", "430:4:690", "--out", s(&out)]);
    assert_eq!(stdout_json(&run)["grid"]["count"], 66);
}

#[test]
fn provenance_records_inputs_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let out = dir.path().join("fused");
    let run = specfuse(&["fuse", "--manifest", s(&manifest), "--method", "linear", "--cap", "690", "--out", s(&out)]);
    assert!(run.status.success());
    let path = out.join("provenance.json");
    assert!(stderr(&run).contains(&format!("provenance: {}", path.display())));
    let prov: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(prov["subcommand"], "fuse");
    assert_eq!(prov["method"], "linear");
    assert_eq!(prov["cap"], 690.0);
    assert_eq!(prov["grid"]["count"], 66);
    assert_eq!(prov["manifest_sha256"].as_str().unwrap().len(), 64);
    assert!(prov["inputs"].as_array().unwrap().len() >= 9);
}

#[test]
fn fuse_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let read_all = |out: &Path| {
        ["wide.scube.bin", "fine.scube.json", "fine.scube.bin", "train.csv", "test.csv"]
            .map(|f| fs::read(out.join(f)).unwrap())
    };
    let mut runs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let run = specfuse(&["fuse", "--manifest", s(&manifest), "--method", "cubic", "--cap", "690", "--seed", "3", "--out", s(&out)]);
        assert!(run.status.success(), "{}", stderr(&run));
        runs.push((run.stdout, read_all(&out)));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn unknown_method_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let out = dir.path().join("fused");
    let run = specfuse(&["fuse", "--manifest", s(&manifest), "--method", "sinc", "--out", s(&out)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("unknown method"), "{}", stderr(&run));
    assert!(!out.exists());
}

#[test]
fn unknown_flag_exits_2() {
    let run = specfuse(&["fuse", "--frobnicate"]);
    assert_eq!(run.status.code(), Some(2));
    let err: Value = serde_json::from_str(stderr(&run).trim()).unwrap();
    assert_eq!(err["error"], "usage");
}

#[test]
fn missing_input_is_reported() {
    let run = specfuse(&["ndvi", "--cube", "/nonexistent/cube.scube.json"]);
    assert_eq!(run.status.code(), Some(2));
    let err: Value = serde_json::from_str(stderr(&run).trim()).unwrap();
    assert!(err["message"].as_str().unwrap().contains("/nonexistent/cube"));
}

fn fused_dir(dir: &Path) -> PathBuf {
    let manifest = write_manifest(dir);
    let out = dir.join("fused");
    let run = specfuse(&["fuse", "--manifest", s(&manifest), "--method", "cubic", "--cap", "690", "--out", s(&out)]);
    assert!(run.status.success(), "{}", stderr(&run));
    out
}

fn validate_report(report: &Value) {
    let schema: Value = serde_json::from_str(include_str!("../schemas/metrics-report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{report}");
}

#[test]
fn cmse_onto_own_grid_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let fused = fused_dir(dir.path());
    let cube = fused.join("fine.scube.json");
    let report_path = dir.path().join("reports/cmse.json");
    let run = specfuse(&[
        "metrics", "--cube", s(&cube), "--against", s(&cube), "--metric", "cmse", "--method", "pchip", "--out", s(&report_path),
    ]);
    let report = stdout_json(&run);
    assert_eq!(report["value"], 0.0);
    assert_eq!(report["metric"], "cmse");
    assert_eq!(report["dataset"], "fine");
    validate_report(&report);
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(on_disk, report);
    assert!(dir.path().join("reports/cmse.json.provenance.json").exists());
}

#[test]
fn cmse_against_coarser_grid_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let data = manifest.parent().unwrap().join("data");
    let coarse = dir.path().join("coarse");
    write_cube(&scene_cube(8, 6, &grid(440.0, 20.0, 840.0)), &coarse).unwrap();
    let mut values = Vec::new();
    for method in ["linear", "cubic"] {
        let run = specfuse(&[
            "metrics", "--cube", s(&data.join("fine")), "--against", s(&coarse), "--metric", "cmse", "--method", method,
        ]);
        let report = stdout_json(&run);
        validate_report(&report);
        values.push(report["value"].as_f64().unwrap());
    }
    assert!(values[0] > 0.0 && values[1] > 0.0, "{values:?}");
}

#[test]
fn surface_of_identical_cubes_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let fused = fused_dir(dir.path());
    for norm in ["span", "raw"] {
        let run = specfuse(&[
            "metrics",
            "--cube",
            s(&fused.join("wide")),
            "--against",
            s(&fused.join("wide")),
            "--metric",
            "surface",
            "--normalization",
            norm,
        ]);
        let report = stdout_json(&run);
        assert_eq!(report["value"], 0.0);
        assert_eq!(report["normalization"], norm);
        validate_report(&report);
    }
    let run = specfuse(&[
        "metrics", "--cube", s(&fused.join("wide")), "--against", s(&fused.join("fine")), "--metric", "mse-ndvi",
    ]);
    assert_eq!(run.status.code(), Some(2), "capped grid has no band near 830 nm");
    let run = specfuse(&[
        "metrics", "--cube", s(&fused.join("wide")), "--against", s(&fused.join("fine")), "--metric", "mse-ndvi", "--nir-nm",
        "690",
    ]);
    let report = stdout_json(&run);
    validate_report(&report);
    assert!(report["value"].as_f64().unwrap() >= 0.0);
}

#[test]
fn cmse_without_method_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let fused = fused_dir(dir.path());
    let cube = fused.join("fine");
    let run = specfuse(&["metrics", "--cube", s(&cube), "--against", s(&cube), "--metric", "cmse"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("--method"));
}

#[test]
fn ndvi_separates_vegetation() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let cube = manifest.parent().unwrap().join("data/fine");
    let map_path = dir.path().join("ndvi.json");
    let run = specfuse(&["ndvi", "--cube", s(&cube), "--out", s(&map_path)]);
    let summary = stdout_json(&run);
    assert_eq!(summary["red_band_nm"], 666.0);
    assert_eq!(summary["nir_band_nm"], 830.0);
    let classes = &summary["classes"];
    let total: u64 = ["non_vegetated", "bare_soil", "sparse_vegetation", "dense_vegetation"]
        .iter()
        .map(|k| classes[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 48);
    let vegetation = (0..48).filter(|&i| class_of(i) == 1).count() as u64;
    assert_eq!(classes["dense_vegetation"], vegetation);
    let full: Value = serde_json::from_str(&fs::read_to_string(&map_path).unwrap()).unwrap();
    assert_eq!(full["values"].as_array().unwrap().len(), 48);
}

#[test]
fn plot_outputs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let cube = manifest.parent().unwrap().join("data/wide");
    let csv_path = dir.path().join("pixel.csv");
    let run = specfuse(&[
        "plot", "--cube", s(&cube), "--kind", "pixel2d", "--pixel", "1,2", "--method", "linear", "--method", "pchip",
        "--grid", "430:4:690", "--out", s(&csv_path),
    ]);
    let summary = stdout_json(&run);
    assert_eq!(summary["series"], json!(["reference", "linear", "pchip"]));
    let text = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 1 + 31 + 66 + 66);

    let json_path = dir.path().join("surface.json");
    let run = specfuse(&[
        "plot", "--cube", s(&cube), "--kind", "surface3d", "--reduction", "sum", "--format", "json", "--out", s(&json_path),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let bundle: specfuse::io::PlotBundle = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(bundle.series[0].z.as_ref().unwrap().len(), 48);
}

#[test]
fn train_then_eval_separable() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    let test_csv = dir.path().join("test.csv");
    write_samples(&separable_samples(400, 8, 0), &train_csv).unwrap();
    write_samples(&separable_samples(100, 8, 1000), &test_csv).unwrap();
    let ckpt = dir.path().join("model.ckpt");
    let run = specfuse(&[
        "train", "--train-data", s(&train_csv), "--arch", "custom:16,8", "--epochs", "50", "--lr", "1e-3", "--batch", "64",
        "--seed", "5", "--out", s(&ckpt),
    ]);
    let summary = stdout_json(&run);
    assert_eq!(summary["bands"], 8);
    assert!(dir.path().join("model.ckpt.history.csv").exists());
    assert!(dir.path().join("model.ckpt.provenance.json").exists());

    let run = specfuse(&["eval", "--checkpoint", s(&ckpt), "--data", s(&test_csv)]);
    let report = stdout_json(&run);
    assert!(report["accuracy"].as_f64().unwrap() >= 0.99, "{report}");
    assert_eq!(report["total"], 100);
}

#[test]
fn identical_seeds_give_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    write_samples(&separable_samples(200, 66, 0), &train_csv).unwrap();
    let mut blobs = Vec::new();
    for (name, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let ckpt = dir.path().join(name);
        let run = specfuse(&[
            "train", "--train-data", s(&train_csv), "--arch", "66", "--epochs", "3", "--batch", "32", "--seed", seed, "--out",
            s(&ckpt),
        ]);
        assert!(run.status.success(), "{}", stderr(&run));
        blobs.push(fs::read(&ckpt).unwrap());
    }
    assert_eq!(blobs[0], blobs[1]);
    assert_ne!(blobs[0], blobs[2]);
}

#[test]
fn arch_band_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    write_samples(&separable_samples(20, 8, 0), &train_csv).unwrap();
    let run = specfuse(&[
        "train", "--train-data", s(&train_csv), "--arch", "103", "--out", s(&dir.path().join("m")),
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("expects 103 bands"), "{}", stderr(&run));
}

#[test]
fn eval_band_mismatch_names_both_counts() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    let other_csv = dir.path().join("other.csv");
    write_samples(&separable_samples(64, 66, 0), &train_csv).unwrap();
    write_samples(&separable_samples(16, 103, 0), &other_csv).unwrap();
    let ckpt = dir.path().join("m.ckpt");
    let run = specfuse(&[
        "train", "--train-data", s(&train_csv), "--arch", "66", "--epochs", "1", "--batch", "32", "--out", s(&ckpt),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let run = specfuse(&["eval", "--checkpoint", s(&ckpt), "--data", s(&other_csv)]);
    assert_eq!(run.status.code(), Some(2));
    let err = stderr(&run);
    assert!(err.contains("66") && err.contains("103"), "{err}");
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_samples(&separable_samples(4, 66, 0), &data).unwrap();
    let ckpt = dir.path().join("bad.ckpt");
    fs::write(&ckpt, b"{\"format\":\"nope\"}\n").unwrap();
    let run = specfuse(&["eval", "--checkpoint", s(&ckpt), "--data", s(&data)]);
    assert_eq!(run.status.code(), Some(2), "{}", stderr(&run));
}
