use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fluxfit::fitter::{synthesize_markers, MarkerSampling, ParameterLayout};
use fluxfit::{BasisSpec, CircuitParams, ModelKind};
use serde_json::Value;

fn fluxfit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxfit")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fluxfit(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a CSV as header plus numeric columns (empty cells are NaN).
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|s| if s.is_empty() { f64::NAN } else { s.parse().unwrap() }).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<f64>], c: usize) -> Vec<f64> {
    rows.iter().map(|r| r[c]).collect()
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn zero_ej_gives_plasma_ladder_in_one_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--out", "o", "simulate", "--e-j", "0", "--phi-steps", "1"]);
    let (header, rows) = read_csv(&dir.path().join("o/transitions.csv"));
    assert_eq!(header, ["phi_ext_over_pi", "g0->e0", "g0->f0", "g0->h0"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.0);
    let w = (8.0f64 * 2.35 * 0.7).sqrt();
    for (k, f) in rows[0].iter().enumerate().skip(1) {
        assert!((f - k as f64 * w).abs() < 1e-4, "{f} vs {}", k as f64 * w);
    }
}

#[test]
fn three_josephson_energies_give_three_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["--out", "o", "simulate", "--e-j", "0.2,3.8,9.6", "--phi-steps", "21", "--levels", "4", "--potential"],
    );
    let mut dispersion = Vec::new();
    for k in 0..3 {
        let o = dir.path().join("o");
        assert!(o.join(format!("levels_{k}.csv")).exists());
        assert!(o.join(format!("potential_{k}.csv")).exists());
        let (_, rows) = read_csv(&o.join(format!("transitions_{k}.csv")));
        assert_eq!(rows.len(), 21);
        let f_ge = column(&rows, 1);
        let mean = f_ge.iter().sum::<f64>() / f_ge.len() as f64;
        if k == 0 {
            // Nearly harmonic: g0->f0 stays close to twice g0->e0.
            for r in &rows {
                assert!((r[2] / r[1] - 2.0).abs() < 0.15, "{r:?}");
            }
        }
        dispersion.push(spread(&f_ge) / mean);
    }
    assert!(dispersion[0] < 0.1, "0.2 GHz trace moves by {}", dispersion[0]);
    assert!(dispersion[0] < dispersion[1] && dispersion[1] < dispersion[2], "{dispersion:?}");
    assert!(dispersion[2] > 1.0, "9.6 GHz trace moves by only {}", dispersion[2]);
}

#[test]
fn unknown_transition_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxfit(dir.path(), &["--out", "o", "simulate", "--transitions", "g0->x9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("g0->x9"), "{}", stderr(&out));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"simulate": {"phi_steps": 3, "transitions": ["g0->e0"]}}"#).unwrap();
    ok(dir.path(), &["--config", "c.json", "--out", "a", "simulate"]);
    ok(dir.path(), &["--config", "c.json", "--out", "b", "simulate", "--phi-steps", "5"]);
    let (ha, a) = read_csv(&dir.path().join("a/transitions.csv"));
    let (_, b) = read_csv(&dir.path().join("b/transitions.csv"));
    assert_eq!(ha, ["phi_ext_over_pi", "g0->e0"]);
    assert_eq!((a.len(), b.len()), (3, 5));
}

#[test]
fn malformed_scan_reports_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.csv"), "x,f_GHz,amplitude\n0,4.0,0.1\n0,4.1,oops\n").unwrap();
    let out = fluxfit(dir.path(), &["--out", "o", "peaks", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));
}

fn single_line_scan(dir: &Path) {
    ok(
        dir,
        &[
            "--out",
            "syn",
            "synth",
            "--e-j",
            "3.8",
            "--transitions",
            "g0->e0",
            "--phi-steps",
            "11",
            "--f-min-ghz",
            "0.1",
            "--f-max-ghz",
            "8.0",
            "--f-steps",
            "1581",
            "--fwhm-ghz",
            "0.03",
        ],
    );
}

#[test]
fn noiseless_line_is_traced_and_labeled() {
    let dir = tempfile::tempdir().unwrap();
    single_line_scan(dir.path());
    ok(dir.path(), &["--out", "pk", "peaks", "syn/scan.csv", "--model-curves", "syn/model.csv", "--polarity", "max"]);
    let peaks: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pk/peaks.json")).unwrap()).unwrap();
    let markers = peaks.as_array().unwrap();
    let (_, model) = read_csv(&dir.path().join("syn/model.csv"));
    assert_eq!(markers.len(), model.len());
    let step = 7.9 / 1580.0;
    for (m, row) in markers.iter().zip(&model) {
        assert_eq!(m["x"].as_f64().unwrap(), row[0]);
        assert!((m["f_GHz"].as_f64().unwrap() - row[1]).abs() <= step, "{m} vs {row:?}");
        assert_eq!(m["label"], "g0->e0");
    }
}

#[test]
fn threshold_above_range_gives_empty_set() {
    let dir = tempfile::tempdir().unwrap();
    single_line_scan(dir.path());
    ok(dir.path(), &["--out", "pk", "peaks", "syn/scan.csv", "--min-height", "10"]);
    assert_eq!(std::fs::read_to_string(dir.path().join("pk/peaks.json")).unwrap().trim(), "[]");
}

#[test]
fn replay_reproduces_outputs_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["--out", "a", "--seed", "9", "synth", "--transitions", "g0->e0", "--phi-steps", "5", "--noise-sigma", "0.2"],
    );
    ok(d, &["--out", "p", "peaks", "a/scan.csv"]);
    let out = ok(d, &["--out", "b", "replay", "a/synth.manifest.json"]);
    assert!(out.contains("byte-identical"), "{out}");
    assert_eq!(std::fs::read(d.join("a/scan.csv")).unwrap(), std::fs::read(d.join("b/scan.csv")).unwrap());
    ok(d, &["--out", "q", "replay", "p/peaks.manifest.json"]);

    let path = d.join("a/synth.manifest.json");
    let mut m: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    m["outputs"][0]["sha256"] = "0".repeat(64).into();
    std::fs::write(&path, m.to_string()).unwrap();
    let out = fluxfit(d, &["--out", "c", "replay", "a/synth.manifest.json"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));

    std::fs::write(d.join("a/scan.csv"), "changed").unwrap();
    let out = fluxfit(d, &["--out", "r", "replay", "p/peaks.manifest.json"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

/// simulate, synth, peaks and fit chained on device A close the loop.
#[test]
fn pipeline_recovers_device_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let truth = [0.2, 3.8, 9.6];
    ok(
        d,
        &[
            "--out",
            "sim",
            "simulate",
            "--e-j",
            "0.2,3.8,9.6",
            "--transitions",
            "g0->e0,g0->f0",
            "--phi-max-over-pi",
            "2",
            "--phi-steps",
            "41",
        ],
    );
    let mut peak_files = Vec::new();
    for k in 0..3 {
        let seed = k.to_string();
        let curves = format!("sim/transitions_{k}.csv");
        let syn = format!("syn{k}");
        ok(
            d,
            &[
                "--out",
                &syn,
                "--seed",
                &seed,
                "synth",
                "--model-curves",
                &curves,
                "--f-min-ghz",
                "0.5",
                "--f-max-ghz",
                "12",
                "--f-steps",
                "2301",
                "--noise-sigma",
                "0.05",
            ],
        );
        let pk = format!("pk{k}");
        ok(d, &["--out", &pk, "peaks", &format!("{syn}/scan.csv"), "--model-curves", &curves, "--polarity", "max"]);
        std::fs::copy(d.join(format!("{pk}/peaks.json")), d.join(format!("spectrum{k}.json"))).unwrap();
        peak_files.push(format!("spectrum{k}.json"));
    }
    let mut args = vec!["--out", "fit", "fit"];
    args.extend(peak_files.iter().map(String::as_str));
    ok(d, &args);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(d.join("fit/fit_result.json")).unwrap()).unwrap();
    assert_eq!(r["converged"], true);
    let e_c = r["layout"]["shared"]["E_C_GHz"]["value"].as_f64().unwrap();
    let e_l = r["layout"]["shared"]["E_L_GHz"]["value"].as_f64().unwrap();
    assert!((e_c / 2.35 - 1.0).abs() <= 0.02, "E_C {e_c}");
    assert!((e_l / 0.7 - 1.0).abs() <= 0.02, "E_L {e_l}");
    for (s, t) in r["spectra"].as_array().unwrap().iter().zip(truth) {
        let e_j = s["E_J_eff_GHz"].as_f64().unwrap();
        assert!((e_j / t - 1.0).abs() <= 0.03, "E_J {e_j} vs {t}");
    }
    let (header, log) = read_csv(&d.join("fit/fit_log.csv"));
    assert_eq!(header, ["iter", "objective", "trust_radius", "step_norm"]);
    assert!(!log.is_empty());
}

/// Single-spectrum peak sets with injected offsets, written as JSON.
fn offset_peaks(dir: &Path, offsets: &[f64]) -> Vec<PathBuf> {
    let mut layout = ParameterLayout::sinusoidal(&CircuitParams::DEVICE_A, &vec![6.7; offsets.len()]);
    for (s, &o) in layout.spectra.iter_mut().zip(offsets) {
        s.phi_offset.value = o;
    }
    let sampling = MarkerSampling {
        transitions: vec!["g0->e0".parse().unwrap(), "g0->f0".parse().unwrap()],
        x_axis: (0..25).map(|i| 2.0 * PI * i as f64 / 24.0).collect(),
        noise_sigma_ghz: 0.01,
        seed: 4,
    };
    let data = synthesize_markers(&layout, ModelKind::Uncoupled, BasisSpec::uncoupled(50), &sampling).unwrap();
    data.iter()
        .enumerate()
        .map(|(k, d)| {
            let p = dir.join(format!("offset{k}.json"));
            std::fs::write(&p, d.markers.to_json().unwrap()).unwrap();
            p
        })
        .collect()
}

#[test]
fn phi0_table_from_per_voltage_fits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let injected = [0.0, -0.16 * PI, -0.5 * PI];
    let files = offset_peaks(d, &injected);
    std::fs::create_dir(d.join("results")).unwrap();
    for (k, f) in files.iter().enumerate() {
        let out = format!("fit{k}");
        let v_j = k.to_string();
        // Shared parameters frozen: only E_J and the offset are fitted.
        ok(
            d,
            &[
                "--out",
                &out,
                "fit",
                f.to_str().unwrap(),
                "--v-j",
                &v_j,
                "--b-z",
                "0",
                "--freeze",
                "E_C",
                "--freeze",
                "E_L",
            ],
        );
        let r: Value =
            serde_json::from_str(&std::fs::read_to_string(d.join(format!("{out}/fit_result.json"))).unwrap()).unwrap();
        let free: Vec<&str> = r["free_parameters"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        assert_eq!(free, ["spectra[0].E_J", "spectra[0].phi_offset"]);
        std::fs::copy(d.join(format!("{out}/fit_result.json")), d.join(format!("results/v{k}.json"))).unwrap();
    }
    ok(d, &["--out", "ph", "phi0", "results", "--reference", "0"]);
    let (header, rows) = read_csv(&d.join("ph/phi0.csv"));
    assert_eq!(header, ["V_j", "B_z", "phi0_over_pi", "phi0_unwrapped_over_pi"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][2], 0.0);
    for (row, want) in rows.iter().zip(injected) {
        assert!((row[2] - want / PI).abs() <= 0.01, "{row:?} vs {}", want / PI);
    }

    let out = fluxfit(d, &["--out", "ph2", "phi0", "results", "--reference", "7"]);
    assert_eq!(out.status.code(), Some(2));

    // Reference alone.
    std::fs::create_dir(d.join("only")).unwrap();
    std::fs::copy(d.join("results/v0.json"), d.join("only/v0.json")).unwrap();
    ok(d, &["--out", "ph3", "phi0", "only"]);
    let (_, rows) = read_csv(&d.join("ph3/phi0.csv"));
    assert_eq!(rows, vec![vec![0.0, 0.0, 0.0, 0.0]]);

    // Offsets walking past -π stay continuous in the unwrapped column.
    std::fs::create_dir(d.join("wrap")).unwrap();
    let base: Value = serde_json::from_str(&std::fs::read_to_string(d.join("results/v0.json")).unwrap()).unwrap();
    for (k, o) in [0.0, -0.6, -0.9, -1.1, -1.3].iter().enumerate() {
        let mut r = base.clone();
        r["spectra"][0]["phi_offset"] = (o * PI).into();
        r["spectra"][0]["conditions"]["V_j"] = (k as f64).into();
        std::fs::write(d.join(format!("wrap/r{k}.json")), r.to_string()).unwrap();
    }
    ok(d, &["--out", "ph4", "phi0", "wrap"]);
    let (_, rows) = read_csv(&d.join("ph4/phi0.csv"));
    let unwrapped = column(&rows, 3);
    let wrapped = column(&rows, 2);
    for (u, want) in unwrapped.iter().zip([0.0, -0.6, -0.9, -1.1, -1.3]) {
        assert!((u - want).abs() < 1e-12, "{unwrapped:?}");
    }
    assert!(wrapped.iter().all(|w| *w > -1.0 && *w <= 1.0), "{wrapped:?}");
    assert!((wrapped[3] - 0.9).abs() < 1e-12);
}

#[test]
fn frozen_gap_report_and_nonconvergence_exit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), r#"{"junction": {"type": "channels", "Delta_GHz": 26.0, "T": [0.6]}}"#).unwrap();
    ok(
        d,
        &[
            "--config",
            "c.json",
            "--out",
            "syn",
            "--seed",
            "2",
            "synth",
            "--transitions",
            "g0->e0,g0->f0",
            "--phi-steps",
            "31",
            "--f-min-ghz",
            "0.5",
            "--f-max-ghz",
            "12",
            "--f-steps",
            "2301",
            "--noise-sigma",
            "0.05",
        ],
    );
    ok(d, &["--out", "pk", "peaks", "syn/scan.csv", "--model-curves", "syn/model.csv", "--polarity", "max"]);
    let layout = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/channels_layout.json");
    let stdout = ok(d, &["--out", "fit", "fit", "pk/peaks.json", "--layout", layout, "--freeze", "Delta=50"]);
    assert!(stdout.contains("quantity,free,Delta=50"), "{stdout}");
    let (header, rows) = read_csv_mixed(&d.join("fit/freeze_report.csv"));
    assert_eq!(header, ["quantity", "free", "Delta=50"]);
    let rms = rows.iter().find(|r| r[0] == "rms_residual_GHz").unwrap();
    let (free, frozen): (f64, f64) = (rms[1].parse().unwrap(), rms[2].parse().unwrap());
    assert!(free < frozen, "free {free} vs frozen {frozen}");
    let delta = rows.iter().find(|r| r[0] == "spectra[0].Delta").unwrap();
    assert_eq!(delta[2], "50");

    let out = fluxfit(d, &["--out", "short", "fit", "pk/peaks.json", "--layout", layout, "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(d.join("short/fit_result.json").exists());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(d.join("short/fit.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["exit_code"], 3);
}

fn read_csv_mixed(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}
