use std::path::Path;
use std::process::{Command, Output};

use cor_cli::{cmd_batch, cmd_measure, cmd_phantom, cmd_validate, CliError, PhantomRequest};
use cor_core::phantom::{PhantomSpec, PhantomTruth, SweepSpec};
use cor_core::pipeline::{PipelineConfig, Stage};
use cor_core::records::RecordError;
use cor_core::stats::CorrelationMethod;

fn cor(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cor"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn cfg_in(dir: &Path) -> PipelineConfig {
    PipelineConfig {
        out_dir: Some(dir.to_path_buf()),
        ..PipelineConfig::default()
    }
}

fn single(dir: &Path, spec: PhantomSpec) -> std::path::PathBuf {
    cmd_phantom(&PhantomRequest::Single(spec), dir).unwrap().remove(0)
}

#[test]
fn measure_clean_phantom_matches_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let png = single(tmp.path(), PhantomSpec::default());
    let truth: PhantomTruth = serde_json::from_slice(&std::fs::read(png.with_extension("json")).unwrap()).unwrap();
    let r = cmd_measure(&png, &cfg_in(&tmp.path().join("out"))).unwrap();
    let m = &r.output.measurement;
    assert!((m.pcor - truth.pcor).abs() <= 0.02, "{} vs {}", m.pcor, truth.pcor);
    assert!((m.acor - truth.acor).abs() <= 0.02, "{} vs {}", m.acor, truth.acor);
    assert_eq!(m.posterior_side, truth.posterior_side);
    assert!(r.overlay_path.exists());
}

#[test]
fn measure_binary_prints_json() {
    let tmp = tempfile::tempdir().unwrap();
    let png = single(tmp.path(), PhantomSpec::default());
    let out = cor(&["measure", png.to_str().unwrap(), "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["pcor"].as_f64().unwrap() > 0.9);
    assert_eq!(v["posterior_side"], "ImageLeft");
    assert!(tmp.path().join("o/phantom_000_overlay.png").exists());
}

#[test]
fn unreadable_file_fails_in_preprocess() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.png");
    std::fs::write(&bad, b"\x89PNG but not really").unwrap();
    match cmd_measure(&bad, &cfg_in(tmp.path())) {
        Err(CliError::Pipeline(e)) => assert_eq!(e.stage, Stage::Preprocess),
        other => panic!(
            "expected a preprocess failure, got {:?}",
            other.map(|r| r.output.measurement)
        ),
    }
    let out = cor(&["measure", "bad.png"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("preprocess"));
    let out = cor(&["measure", "missing.png"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn empty_directory_gives_header_only_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let r = cmd_batch(&empty, &cfg_in(&tmp.path().join("out")), 2).unwrap();
    assert!(r.items.is_empty());
    assert_eq!(r.warnings.len(), 1);
    let csv = std::fs::read_to_string(&r.csv_path).unwrap();
    assert_eq!(
        csv,
        "filename,limb,posterior_side,aco_px,pco_px,fd_px,acor,pcor,warnings,status\n"
    );
}

#[test]
fn batch_records_failures_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("in");
    single(&dir, PhantomSpec::default());
    std::fs::write(dir.join("a_broken.jpg"), b"nope").unwrap();
    std::fs::write(dir.join("notes.txt"), b"ignored").unwrap();
    let r = cmd_batch(&dir, &cfg_in(&tmp.path().join("out")), 1).unwrap();
    assert_eq!((r.ok, r.failed), (1, 1));
    let csv = std::fs::read_to_string(&r.csv_path).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("a_broken.jpg,") && rows[0].ends_with(",failed:preprocess"));
    assert!(rows[1].starts_with("phantom_000.png,") && rows[1].ends_with(",ok"));
}

#[test]
fn phantom_default_grid_writes_200_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cor(&["phantom", "--sweep", "--out", "grid"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = std::fs::read_dir(tmp.path().join("grid"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".png")).count(), 200);
    assert_eq!(names.iter().filter(|n| n.ends_with(".json")).count(), 200);
    let truth = std::fs::read_to_string(tmp.path().join("grid/truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 201);
}

#[test]
fn phantom_repeated_seed_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = PhantomSpec {
        noise_sigma: 8.0,
        seed: 42,
        ..PhantomSpec::default()
    };
    let a = single(&tmp.path().join("a"), spec.clone());
    let b = single(&tmp.path().join("b"), spec);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(a.with_extension("json")).unwrap(),
        std::fs::read(b.with_extension("json")).unwrap()
    );
    let single_flags = cor(&["phantom", "--pcor", "1.2", "--acor", "0.2", "--out", "c"], tmp.path());
    assert!(single_flags.status.success());
    assert_eq!(std::fs::read_dir(tmp.path().join("c")).unwrap().count(), 3);
}

fn small_corpus(dir: &Path) {
    let sweep = SweepSpec {
        pcor_steps: 4,
        acor_steps: 2,
        ..SweepSpec::default()
    };
    cmd_phantom(&PhantomRequest::Sweep(sweep), dir).unwrap();
}

#[test]
fn validate_against_truth_and_self() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    small_corpus(&corpus);
    let truth = corpus.join("truth.csv");
    let b = cmd_batch(&corpus, &cfg_in(&tmp.path().join("run")), 1).unwrap();
    assert_eq!(b.failed, 0);
    let report_dir = tmp.path().join("report");
    let r = cmd_validate(&b.csv_path, &truth, &report_dir).unwrap();
    assert!(r.pcor.correlation.coefficient >= 0.99, "{:?}", r.pcor.correlation);
    for f in [
        "report.json",
        "acor_scatter.svg",
        "acor_diff_hist.svg",
        "acor_bland_altman.svg",
        "pcor_scatter.svg",
        "pcor_diff_hist.svg",
        "pcor_bland_altman.svg",
    ] {
        assert!(report_dir.join(f).exists(), "{f}");
    }

    // Truth written as predictions: perfect agreement.
    let truth_text = std::fs::read_to_string(&truth).unwrap();
    let mut pred = String::from("filename,acor,pcor,status\n");
    for line in truth_text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        pred.push_str(&format!("{},{},{},ok\n", f[0], f[5], f[6]));
    }
    let self_pred = tmp.path().join("self.csv");
    std::fs::write(&self_pred, pred).unwrap();
    let r = cmd_validate(&self_pred, &truth, &tmp.path().join("self")).unwrap();
    assert_eq!(r.pcor.correlation.coefficient, 1.0);
    assert_eq!(r.pcor.bland_altman.mean_diff, 0.0);
    assert_eq!(r.acor.bland_altman.mean_diff, 0.0);
    // Grid PCOR values pass the normality test, so identical series go to Pearson.
    assert!(r.pcor.model.normal && r.pcor.truth.normal);
    assert_eq!(r.pcor.correlation.method, CorrelationMethod::Pearson);
}

#[test]
fn validate_rejects_mismatched_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let pred = tmp.path().join("pred.csv");
    let truth = tmp.path().join("truth.csv");
    std::fs::write(
        &pred,
        "filename,acor,pcor,status\na.png,0.1,1.0,ok\nb.png,0.1,1.0,ok\nc.png,0.1,1.0,ok\n",
    )
    .unwrap();
    std::fs::write(
        &truth,
        "filename,posterior_side,aco_px,pco_px,fd_px,acor,pcor\n\
         a.png,ImageLeft,10,100,100,0.1,1.0\nb.png,ImageLeft,10,100,100,0.1,1.0\nd.png,ImageLeft,10,100,100,0.1,1.0\n",
    )
    .unwrap();
    match cmd_validate(&pred, &truth, tmp.path()) {
        Err(CliError::Record(RecordError::KeyMismatch { only_pred, only_truth })) => {
            assert_eq!(only_pred, ["c.png"]);
            assert_eq!(only_truth, ["d.png"]);
        }
        other => panic!("expected KeyMismatch, got {:?}", other.map(|r| r.excluded)),
    }
    let out = cor(&["validate", "--pred", "pred.csv", "--truth", "truth.csv"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let png = single(tmp.path(), PhantomSpec::default());
    // Rows below the shaft patch: the file alone makes landmarking fail.
    std::fs::write(tmp.path().join("run.ini"), "[roi]\ncortex_rows = 500, 510\n").unwrap();
    let p = png.to_str().unwrap();
    let out = cor(&["measure", p, "--config", "run.ini"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("landmarks"));
    let out = cor(
        &["measure", p, "--config", "run.ini", "--cortex-rows", "100,140"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bad = cor(&["measure", p, "--roi", "1,2,3"], tmp.path());
    assert!(!bad.status.success());
}
