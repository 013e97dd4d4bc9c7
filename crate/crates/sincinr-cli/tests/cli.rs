use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sincinr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sincinr"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_pgm(path: &Path, w: usize, h: usize, f: impl Fn(usize, usize) -> u8) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(f(x, y));
        }
    }
    fs::write(path, bytes).unwrap();
}

#[test]
fn basis_check_sinc_reports_unit_bounds() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(tmp.path(), &["basis-check", "sinc", "--out-dir", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&tmp.path().join("out/basis_check.json"));
    assert!((r["rieszLower"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    assert!((r["rieszUpper"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    assert!(r["pucResidual"].as_f64().unwrap() <= 1e-3);
    assert!(tmp.path().join("out/manifest.json").exists());
}

#[test]
fn basis_check_relu_is_unsupported() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(
        tmp.path(),
        &["basis-check", "--kind", "relu", "--out-dir", "out"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Riesz"));
    let r = read_json(&tmp.path().join("out/basis_check.json"));
    assert_eq!(r["riesz"], "unsupported");
}

#[test]
fn missing_kind_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&sincinr(tmp.path(), &["basis-check"])), 64);
    assert_eq!(code(&sincinr(tmp.path(), &["no-such-command"])), 64);
    assert_eq!(
        code(&sincinr(tmp.path(), &["basis-check", "--kind", "mystery"])),
        64
    );
}

#[test]
fn help_exits_zero() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(tmp.path(), &["sindy", "--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("--threshold"));
}

#[test]
fn approx_single_omega_gives_one_row() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(
        tmp.path(),
        &["approx", "--omegas", "0.2", "--out-dir", "out"],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(tmp.path().join("out/approx.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn approx_error_decreases_with_omega() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(
        tmp.path(),
        &[
            "approx",
            "--omegas",
            "0.4,0.2,0.1,0.05",
            "--format",
            "json",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 0);
    let rows = read_json(&tmp.path().join("out/approx.json"));
    let errs: Vec<f64> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["l2Error"].as_f64().unwrap())
        .collect();
    assert_eq!(errs.len(), 4);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn approx_empty_omega_list_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&sincinr(tmp.path(), &["approx", "--omegas", ""])), 64);
    assert_eq!(code(&sincinr(tmp.path(), &["approx"])), 64);
    fs::write(tmp.path().join("c.json"), r#"{"omegas": []}"#).unwrap();
    assert_eq!(
        code(&sincinr(tmp.path(), &["approx", "--config", "c.json"])),
        64
    );
}

#[test]
fn train_image_flat_image_is_learned() {
    let tmp = TempDir::new().unwrap();
    write_pgm(&tmp.path().join("flat.pgm"), 8, 8, |_, _| 128);
    let o = sincinr(
        tmp.path(),
        &[
            "train-image",
            "--image",
            "flat.pgm",
            "--epochs",
            "200",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&tmp.path().join("out/summary.json"));
    assert!(s["psnr"].as_f64().unwrap() >= 40.0, "{s}");
    let log = fs::read_to_string(tmp.path().join("out/psnr_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 201);
    assert!(tmp.path().join("out/checkpoint.bin").exists());
}

#[test]
fn train_image_corrupt_pgm_is_data_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.pgm"), b"P2\n8 8\n255\n").unwrap();
    let o = sincinr(
        tmp.path(),
        &["train-image", "--image", "bad.pgm", "--out-dir", "out"],
    );
    assert_eq!(code(&o), 2);
    let o = sincinr(
        tmp.path(),
        &["train-image", "--image", "missing.pgm", "--out-dir", "out"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn dynamics_lorenz_default_has_5000_rows() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(tmp.path(), &["dynamics", "--out-dir", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x0,x1,x2");
    assert_eq!(text.lines().count(), 5001);
}

#[test]
fn dynamics_negated_lorenz_blows_up_with_data_error() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(
        tmp.path(),
        &["dynamics", "--standard-lorenz", "false", "--out-dir", "out"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn hankel_constant_series_is_rank_one() {
    let tmp = TempDir::new().unwrap();
    let csv: String = std::iter::once("t,x\n".to_string())
        .chain((0..300).map(|i| format!("{},2.5\n", i as f64 * 0.1)))
        .collect();
    fs::write(tmp.path().join("c.csv"), csv).unwrap();
    let o = sincinr(
        tmp.path(),
        &["hankel", "--input", "c.csv", "--out-dir", "out"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&tmp.path().join("out/report.json"));
    assert!(r["sigmaRatio"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn hankel_short_series_is_data_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.csv"), "t,x\n0,1\n1,2\n").unwrap();
    assert_eq!(
        code(&sincinr(
            tmp.path(),
            &["hankel", "--input", "c.csv", "--out-dir", "out"]
        )),
        2
    );
}

#[test]
fn sindy_clean_lorenz_prints_target_pattern() {
    let tmp = TempDir::new().unwrap();
    let o = sincinr(
        tmp.path(),
        &[
            "sindy",
            "--dt",
            "0.01",
            "--samples",
            "10000",
            "--substeps",
            "10",
            "--horizon",
            "1001",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = stdout.lines().take(3).collect();
    let terms = |l: &str| -> Vec<String> {
        l.split(" = ")
            .nth(1)
            .unwrap()
            .split(&['+', '-'][..])
            .filter_map(|t| {
                let t = t.trim();
                t.split_once('·').map(|(_, name)| name.to_string())
            })
            .collect()
    };
    assert_eq!(terms(lines[0]), ["x0", "x1"]);
    assert_eq!(terms(lines[1]), ["x0", "x1", "x0·x2"]);
    assert_eq!(terms(lines[2]), ["x2", "x0·x1"]);
    let model = read_json(&tmp.path().join("out/model.json"));
    assert_eq!(model["termNames"].as_array().unwrap().len(), 10);
    let report = read_json(&tmp.path().join("out/report.json"));
    assert!(report["reconstructionPsnr"].as_f64().unwrap() >= 30.0);
}

#[test]
fn sweep_writes_table_and_best() {
    let tmp = TempDir::new().unwrap();
    write_pgm(&tmp.path().join("a.pgm"), 8, 8, |x, y| {
        (x * 30 + y * 2) as u8
    });
    let o = sincinr(
        tmp.path(),
        &[
            "sweep",
            "--image",
            "a.pgm",
            "--kinds",
            "sinc,relu",
            "--omegas",
            "1",
            "--fractions",
            "0.5,1",
            "--epochs",
            "20",
            "--format",
            "json",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_json(&tmp.path().join("out/sweep.json"));
    assert_eq!(rows.as_array().unwrap().len(), 4);
    let best = read_json(&tmp.path().join("out/best.json"));
    assert!(best["sinc"]["omega"].is_number());
    let o = sincinr(
        tmp.path(),
        &["sweep", "--image", "a.pgm", "--fractions", "1.5"],
    );
    assert_eq!(code(&o), 64);
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    write_pgm(&tmp.path().join("a.pgm"), 8, 8, |x, y| ((x * y) * 4) as u8);
    let runs: [&[&str]; 3] = [
        &[
            "train-image",
            "--image",
            "a.pgm",
            "--epochs",
            "30",
            "--hidden",
            "16,16",
            "--batch-size",
            "16",
            "--seed",
            "7",
        ],
        &[
            "dynamics",
            "--system",
            "rossler",
            "--samples",
            "200",
            "--noise",
            "gaussian",
            "--noise-level",
            "0.3",
            "--seed",
            "3",
        ],
        &[
            "sindy",
            "--noise-std",
            "0.5",
            "--method",
            "sinc-inr",
            "--seed",
            "1",
        ],
    ];
    for args in runs {
        let a = [args, &["--out-dir", "a"]].concat();
        let b = [args, &["--out-dir", "b"]].concat();
        assert_eq!(code(&sincinr(tmp.path(), &a)), 0);
        assert_eq!(code(&sincinr(tmp.path(), &b)), 0);
        let fa = artifacts(&tmp.path().join("a"));
        assert!(!fa.is_empty());
        assert_eq!(fa, artifacts(&tmp.path().join("b")), "{args:?}");
        fs::remove_dir_all(tmp.path().join("a")).unwrap();
        fs::remove_dir_all(tmp.path().join("b")).unwrap();
    }
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("c.json"),
        r#"{"samples": 50, "dt": 0.05, "bogus": 1}"#,
    )
    .unwrap();
    let o = sincinr(
        tmp.path(),
        &[
            "dynamics",
            "--config",
            "c.json",
            "--samples",
            "20",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(tmp.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(text.lines().count(), 21);
    let m = read_json(&tmp.path().join("out/manifest.json"));
    let p = &m["parameters"];
    assert_eq!(p["samples"]["value"], 20);
    assert_eq!(p["samples"]["source"], "flag");
    assert_eq!(p["dt"]["value"], 0.05);
    assert_eq!(p["dt"]["source"], "config");
    assert_eq!(p["substeps"]["source"], "default");
    assert_eq!(m["unusedConfigKeys"], serde_json::json!(["bogus"]));
    assert!(m["gitDescribe"].is_string());
}

#[test]
fn non_object_config_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.json"), "[1, 2]").unwrap();
    assert_eq!(
        code(&sincinr(tmp.path(), &["dynamics", "--config", "c.json"])),
        64
    );
    fs::write(tmp.path().join("d.json"), r#"{"samples": "many"}"#).unwrap();
    assert_eq!(
        code(&sincinr(tmp.path(), &["dynamics", "--config", "d.json"])),
        64
    );
}
