use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use simraw::imaging::io::{load_raw, load_rgb};
use simraw::imaging::max_code;
use simraw::isp::{isp_inverse, isp_inverse_rgb};
use simraw::lccm::ColorMatrix;
use simraw::IspParams;
use simraw_cli::commands::{synthesize, SynthesizeOptions, MANIFEST_NAME, TEACHER_PARAMS_NAME};
use simraw_cli::manifest::read_manifest;

fn simraw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simraw")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, count: usize, seed: u64) -> Output {
    simraw(&[
        "synthesize",
        "--count",
        &count.to_string(),
        "--out-dir",
        s(dir),
        "--seed",
        &seed.to_string(),
        "--width",
        "16",
        "--height",
        "12",
    ])
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn zero_count_gives_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth(dir.path(), 0, 0);
    assert!(out.status.success());
    assert_eq!(fs::read(dir.path().join(MANIFEST_NAME)).unwrap(), b"");
}

#[test]
fn synthesize_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(synth(a.path(), 5, 0).status.success());
    assert!(synth(b.path(), 5, 0).status.success());
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.len(), 3 * 5 + 2);
    assert_eq!(ta, tb);

    let c = tempfile::tempdir().unwrap();
    assert!(synth(c.path(), 5, 1).status.success());
    assert_ne!(ta, tree(c.path()));
}

#[test]
fn stored_targets_match_the_teacher_recomputed_from_stored_sources() {
    let dir = tempfile::tempdir().unwrap();
    synthesize(&SynthesizeOptions {
        count: 4,
        params: None,
        out_dir: dir.path().to_path_buf(),
        seed: 3,
        width: 8,
        height: 8,
    })
    .unwrap();
    let params = IspParams::<f64>::load(dir.path().join(TEACHER_PARAMS_NAME)).unwrap();
    assert_eq!(params, IspParams::default());
    for e in read_manifest(&dir.path().join(MANIFEST_NAME)).unwrap() {
        let src = load_rgb::<f64>(&e.source).unwrap();
        let rgb = isp_inverse_rgb(&src, &params).unwrap().clamped().quantized(16);
        assert_eq!(load_rgb::<f64>(&e.target_rgb).unwrap(), rgb);
        let raw = isp_inverse(&src, &params)
            .unwrap()
            .with_bit_depth(params.bit_depth)
            .unwrap()
            .quantized();
        let stored = load_raw::<f64>(&e.target_raw).unwrap();
        assert_eq!(stored.codes(), raw.codes());
        assert_eq!(stored.pattern(), params.pattern);
    }
}

#[test]
fn custom_params_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let params_path = dir.path().join("p.txt");
    let p = IspParams::<f64> {
        gamma: 1.0,
        bit_depth: 10,
        ..IspParams::default()
    };
    p.save(&params_path).unwrap();
    let data = dir.path().join("d");
    let out = simraw(&[
        "synthesize",
        "--count",
        "1",
        "--params",
        s(&params_path),
        "--out-dir",
        s(&data),
    ]);
    assert!(out.status.success());
    let entries = read_manifest(&data.join(MANIFEST_NAME)).unwrap();
    assert_eq!(load_raw::<f64>(&entries[0].target_raw).unwrap().bit_depth(), 10);
}

#[test]
fn fit_convert_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(synth(&data, 6, 2).status.success());
    let matrix = dir.path().join("m.txt");
    let report = dir.path().join("fit.csv");
    let out = simraw(&[
        "fit",
        "--manifest",
        s(&data.join(MANIFEST_NAME)),
        "--optimizer",
        "closed-form",
        "--out-matrix",
        s(&matrix),
        "--report",
        s(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = ColorMatrix::<f64>::from_text(&fs::read_to_string(&matrix).unwrap()).unwrap();
    assert!(m.is_finite());
    let csv = fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().next(), Some("epoch,loss,psnr"));
    assert_eq!(csv.lines().count(), 2);

    let raws = dir.path().join("raws");
    let out = simraw(&[
        "convert",
        "--matrix",
        s(&matrix),
        "--input",
        s(&data.join("srgb")),
        "--out-dir",
        s(&raws),
        "--pattern",
        "rggb",
        "--bit-depth",
        "12",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("images/s"));
    assert!(stderr.contains("params: 12"));

    let eval_csv = dir.path().join("eval.csv");
    let out = simraw(&[
        "eval",
        "--pred-dir",
        s(&raws),
        "--target-dir",
        s(&data.join("target_raw")),
        "--report",
        s(&eval_csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&eval_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "name,psnr_db,ssim,psnr_r,psnr_g,psnr_b");
    assert_eq!(lines.len(), 1 + 6 + 1);
    assert!(lines[7].starts_with("mean,"));
    let mean_psnr: f64 = lines[7].split(',').nth(1).unwrap().parse().unwrap();
    assert!(mean_psnr > 20.0 && mean_psnr.is_finite(), "{mean_psnr}");
}

#[test]
fn convert_codes_stay_in_range_for_extreme_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(synth(&data, 3, 4).status.success());
    let matrix = dir.path().join("m.txt");
    let wild = ColorMatrix::new([[5.0, -3.0, 2.0], [-4.0, 6.0, 1.0], [3.0, 3.0, -7.0]], [-0.5, 0.7, 0.2]);
    fs::write(&matrix, wild.to_text()).unwrap();
    for bd in [8u8, 12, 16, 24] {
        let raws = dir.path().join(format!("raw{bd}"));
        let out = simraw(&[
            "convert",
            "--matrix",
            s(&matrix),
            "--input",
            s(&data.join("srgb")),
            "--out-dir",
            s(&raws),
            "--pattern",
            "gbrg",
            "--bit-depth",
            &bd.to_string(),
        ]);
        assert!(out.status.success());
        for e in fs::read_dir(&raws).unwrap() {
            let raw = load_raw::<f64>(&e.unwrap().path()).unwrap();
            assert_eq!(raw.bit_depth(), bd);
            assert!(raw.codes().iter().all(|&c| c <= max_code(bd)));
            assert!(raw.codes().contains(&0) && raw.codes().contains(&max_code(bd)));
        }
    }
}

#[test]
fn histogram_writes_256_rows_and_compares() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(synth(&data, 1, 0).status.success());
    let img = data.join("srgb/000000.ppm");
    let out_csv = dir.path().join("h.csv");
    let out = simraw(&["histogram", "--image", s(&img), "--out", s(&out_csv)]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "bin,R,G,B");
    assert_eq!(lines.len(), 257);
    let total: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9 || total == (16 * 12) as f64);

    let out = simraw(&[
        "histogram",
        "--image",
        s(&img),
        "--out",
        s(&out_csv),
        "--compare",
        s(&img),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("R 0.000000 G 0.000000 B 0.000000"));
    assert_eq!(
        fs::read_to_string(&out_csv).unwrap().lines().next(),
        Some("bin,R,G,B,R_compare,G_compare,B_compare")
    );
}

#[test]
fn ablate_writes_one_row_per_count() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("a.csv");
    let out = simraw(&[
        "ablate",
        "--sample-counts",
        "2,4",
        "--trials",
        "2",
        "--size",
        "12",
        "--test-count",
        "3",
        "--epochs",
        "5",
        "--report",
        s(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "samples,trials,psnr_mean,psnr_std,ssim_mean,ssim_std");
    assert!(lines[1].starts_with("2,2,"));
    assert!(lines[2].starts_with("4,2,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(synth(&data, 3, 0).status.success());
    let manifest = data.join(MANIFEST_NAME);
    let m = dir.path().join("m.txt");
    let r = dir.path().join("r.csv");

    assert_eq!(simraw(&["fit", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        simraw(&["synthesize", "--count", "x", "--out-dir", "o"]).status.code(),
        Some(2)
    );
    let base = [
        "fit",
        "--manifest",
        s(&manifest),
        "--out-matrix",
        s(&m),
        "--report",
        s(&r),
    ];
    let with = |extra: &[&str]| {
        let mut v: Vec<&str> = base.to_vec();
        v.extend_from_slice(extra);
        simraw(&v).status.code()
    };
    assert_eq!(with(&["--lr", "-1"]), Some(2));
    assert_eq!(with(&["--epochs", "0"]), Some(2));
    assert_eq!(with(&["--optimizer", "sgd", "--lr", "1e12"]), Some(4));
    assert_eq!(with(&["--epochs", "2"]), Some(0));

    let missing = dir.path().join("nope.tsv");
    assert_eq!(
        simraw(&[
            "fit",
            "--manifest",
            s(&missing),
            "--out-matrix",
            s(&m),
            "--report",
            s(&r)
        ])
        .status
        .code(),
        Some(3)
    );
    fs::write(dir.path().join("bad.tsv"), "only-one-column\n").unwrap();
    assert_eq!(
        simraw(&[
            "fit",
            "--manifest",
            s(&dir.path().join("bad.tsv")),
            "--out-matrix",
            s(&m),
            "--report",
            s(&r)
        ])
        .status
        .code(),
        Some(3)
    );
    fs::write(&m, "1 2 3\n").unwrap();
    assert_eq!(
        simraw(&[
            "convert",
            "--matrix",
            s(&m),
            "--input",
            s(&data.join("srgb")),
            "--out-dir",
            s(&dir.path().join("o"))
        ])
        .status
        .code(),
        Some(3)
    );
}
