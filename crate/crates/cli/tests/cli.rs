mod common;

use std::f64::consts::PI;
use std::path::Path;

use tempfile::TempDir;
use tvarx_core::io::{
    format_number, read_grid_csv, read_signal_csv, read_surrogate_json, read_trajectory_json, write_atomic,
    write_trajectory_json,
};
use tvarx_core::{ess_sss, simulate, ModelStructure, ParameterTrajectory, Signal};

use common::*;

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

fn synth_pair(dir: &Path, temperature: f64) {
    let cfg = write_config(dir, "cfg.json", temperature);
    let out = run(
        dir,
        &["synth", "--config", cfg.to_str().unwrap(), "--out", "y.csv", "--excitation-out", "x.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn synth_writes_record_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", 40.0);
    let out = run(dir.path(), &["synth", "--config", cfg.to_str().unwrap(), "--out", "y.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(report_value(&text, "samples").as_deref(), Some("601"));
    assert_eq!(report_value(&text, "temperature").as_deref(), Some("40"));
    let csv = std::fs::read_to_string(dir.path().join("y.csv")).unwrap();
    assert!(csv.starts_with("time_s,value\n"));
    assert_eq!(csv.lines().count(), 602);
    let y = read_signal_csv(&dir.path().join("y.csv")).unwrap();
    assert!((y.ts() - 5e-7).abs() < 1e-18);
}

#[test]
fn synth_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = run(dir.path(), &["synth", "--config", "nope.json", "--out", "y.csv"]);
    assert_eq!(code(&missing), 2);
    assert!(!dir.path().join("y.csv").exists());

    std::fs::write(dir.path().join("bad.json"), "{ \"plate_length\": 0.3,").unwrap();
    let malformed = run(dir.path(), &["synth", "--config", "bad.json", "--out", "y.csv"]);
    assert_eq!(code(&malformed), 2);
    assert!(stderr(&malformed).contains("bad.json"));

    let mut v: serde_json::Value = serde_json::from_str(&plate_config_json(30.0)).unwrap();
    v["plate_thickness"] = serde_json::json!(0.003);
    std::fs::write(dir.path().join("extra.json"), v.to_string()).unwrap();
    assert_eq!(code(&run(dir.path(), &["synth", "--config", "extra.json", "--out", "y.csv"])), 2);
}

#[test]
fn synth_rejects_invalid_configuration() {
    let dir = TempDir::new().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&plate_config_json(30.0)).unwrap();
    v["noise_std"] = serde_json::json!(-1.0);
    std::fs::write(dir.path().join("neg.json"), v.to_string()).unwrap();
    assert_eq!(code(&run(dir.path(), &["synth", "--config", "neg.json", "--out", "y.csv"])), 3);
}

#[test]
fn synth_is_byte_identical_and_seeded() {
    let dir = TempDir::new().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&plate_config_json(45.0)).unwrap();
    v["noise_std"] = serde_json::json!(1e-3);
    std::fs::write(dir.path().join("noisy.json"), v.to_string()).unwrap();
    for name in ["a.csv", "b.csv"] {
        assert_eq!(code(&run(dir.path(), &["synth", "--config", "noisy.json", "--out", name])), 0);
    }
    let c = run(dir.path(), &["--seed", "9", "synth", "--config", "noisy.json", "--out", "c.csv"]);
    assert_eq!(code(&c), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_ne!(a, std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn synth_accepts_acquisition_override() {
    let dir = TempDir::new().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&plate_config_json(30.0)).unwrap();
    v["acquisition"] = serde_json::json!({
        "cycles": 5, "center_freq": 250e3, "amplitude": 45.0, "raw_rate": 24e6,
        "decimation": 12, "duration": 340e-6, "crop_start": 60, "crop_len": 300
    });
    std::fs::write(dir.path().join("acq.json"), v.to_string()).unwrap();
    let out = run(dir.path(), &["synth", "--config", "acq.json", "--out", "y.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(report_value(&stdout(&out), "samples").as_deref(), Some("300"));
}

#[test]
fn outputs_are_not_overwritten_without_force() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", 30.0);
    let c = cfg.to_str().unwrap();
    std::fs::write(dir.path().join("y.csv"), "keep me").unwrap();
    let refused = run(dir.path(), &["synth", "--config", c, "--out", "y.csv"]);
    assert_eq!(code(&refused), 2);
    assert!(stderr(&refused).contains("--force"));
    assert_eq!(std::fs::read_to_string(dir.path().join("y.csv")).unwrap(), "keep me");
    assert_eq!(code(&run(dir.path(), &["--force", "synth", "--config", c, "--out", "y.csv"])), 0);
    assert_eq!(line_count(&dir.path().join("y.csv")), 602);
}

#[test]
fn identify_tar_defaults_writes_model_residuals_and_report() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let out = run(dir.path(), &["identify", "--y", "y.csv", "--na", "6", "--lambda", "0.6", "--out", "tar.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = std::fs::read_to_string(dir.path().join("tar.report.txt")).unwrap();
    assert_eq!(report, stdout(&out));
    assert_eq!(report_value(&report, "structure").as_deref(), Some("TAR(6)_0.6"));
    assert_eq!(report_value(&report, "passes").as_deref(), Some("three"));
    for key in ["rss_sss", "loglik", "aic", "bic"] {
        let v: f64 = report_value(&report, key).unwrap().parse().unwrap();
        assert!(v.is_finite(), "{key}");
    }
    let rss: f64 = report_value(&report, "rss_sss").unwrap().parse().unwrap();
    assert!(rss > 0.0 && rss < 0.05, "rss_sss {rss}");

    let traj = read_trajectory_json(&dir.path().join("tar.json")).unwrap();
    assert_eq!(traj.len(), 601);
    assert_eq!(traj.theta().ncols(), 6);
    let res = read_signal_csv(&dir.path().join("tar.residuals.csv")).unwrap();
    assert_eq!(res.len(), 601);
}

#[test]
fn identify_single_pass_differs_from_three_pass() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let base = ["identify", "--y", "y.csv", "--na", "4", "--lambda", "0.9"];
    let three = run(dir.path(), &[&base[..], &["--out", "a.json"]].concat());
    let single = run(dir.path(), &[&base[..], &["--passes", "single", "--out", "b.json"]].concat());
    assert_eq!(code(&three), 0);
    assert_eq!(code(&single), 0);
    assert_eq!(report_value(&stdout(&single), "passes").as_deref(), Some("single"));
    assert_ne!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn identify_unit_forgetting_on_stationary_record_settles() {
    let dir = TempDir::new().unwrap();
    // Two undamped tones started from rest by the AR(4) recursion itself,
    // so every regression equation, the first ones included, is exact.
    let (c1, c2) = ((2.0 * PI * 0.05).cos(), (2.0 * PI * 0.21).cos());
    let a = [-2.0 * (c1 + c2), 2.0 + 4.0 * c1 * c2, -2.0 * (c1 + c2), 1.0];
    let mut y = vec![0.0; 601];
    y[0] = 1.0;
    for t in 1..y.len() {
        y[t] = -(0..4).filter(|i| t > *i).map(|i| a[i] * y[t - 1 - i]).sum::<f64>();
    }
    assert!(y.iter().all(|v| v.abs() < 10.0));
    write_signal(dir.path(), "y.csv", &Signal::new(y, TS).unwrap());
    let out = run(dir.path(), &["identify", "--y", "y.csv", "--na", "4", "--lambda", "1", "--out", "m.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let drift: f64 = report_value(&stdout(&out), "final_quarter_max_drift").unwrap().parse().unwrap();
    assert!(drift < 1e-3, "drift {drift}");
}

#[test]
fn identify_validation_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let zero = run(dir.path(), &["identify", "--y", "y.csv", "--na", "0", "--lambda", "0.6", "--out", "a.json"]);
    assert_eq!(code(&zero), 3);
    let long = run(dir.path(), &["identify", "--y", "y.csv", "--na", "700", "--lambda", "0.6", "--out", "b.json"]);
    assert_eq!(code(&long), 3);
    let lam = run(dir.path(), &["identify", "--y", "y.csv", "--na", "4", "--lambda", "1.5", "--out", "c.json"]);
    assert_eq!(code(&lam), 3);
    let no_x = run(
        dir.path(),
        &["identify", "--y", "y.csv", "--na", "2", "--nb", "3", "--lambda", "0.9", "--out", "d.json"],
    );
    assert_eq!(code(&no_x), 3);
    for f in ["a.json", "b.json", "c.json", "d.json"] {
        assert!(!dir.path().join(f).exists());
    }
}

#[test]
fn identify_tarx_reports_simulation_error() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 50.0);
    let out = run(
        dir.path(),
        &["identify", "--y", "y.csv", "--x", "x.csv", "--na", "2", "--nb", "6", "--lambda", "0.9", "--out", "m.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ess: f64 = report_value(&stdout(&out), "ess_sss").unwrap().parse().unwrap();
    assert!(ess < 0.01, "ess {ess}");

    let sim = run(dir.path(), &["simulate", "--model", "m.json", "--x", "x.csv", "--y", "y.csv", "--out", "sim.csv"]);
    assert_eq!(code(&sim), 0, "{}", stderr(&sim));
    // The stored model reproduces the in-memory score exactly.
    assert_eq!(report_value(&stdout(&sim), "ess_sss").unwrap(), format_number(ess));
}

#[test]
fn select_singleton_and_small_grid() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let one = run(
        dir.path(),
        &["select", "--y", "y.csv", "--na-range", "4:4", "--lambda-range", "0.9:0.9", "--out", "one.csv"],
    );
    assert_eq!(code(&one), 0, "{}", stderr(&one));
    assert_eq!(line_count(&dir.path().join("one.csv")), 2);
    assert!(stdout(&one).contains("best: TAR(4)_0.9"));

    let grid = run(
        dir.path(),
        &[
            "select", "--y", "y.csv", "--x", "x.csv", "--na-range", "2:4", "--nb-range", "2:3", "--lambda-range",
            "0.8:0.9:0.05", "--out", "grid.csv",
        ],
    );
    assert_eq!(code(&grid), 0, "{}", stderr(&grid));
    let text = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert!(text.starts_with("na,nb,lambda,rss_sss,ess_sss,aic,bic,status\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 3);
    assert!(stdout(&grid).contains("ess_sss"), "default criterion with --x");
    assert!(stdout(&grid).contains("parsimony:"));
}

#[test]
fn select_full_ar_grid_has_10500_rows() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let out = run(
        dir.path(),
        &["select", "--y", "y.csv", "--na-range", "2:22", "--lambda-range", "0.5:0.999:0.001", "--out", "all.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(report_value(&stdout(&out), "candidates").as_deref(), Some("10500"));
    assert_eq!(line_count(&dir.path().join("all.csv")), 10_501);
}

#[test]
fn select_argument_errors() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let bad_range = run(dir.path(), &["select", "--y", "y.csv", "--na-range", "9:2", "--out", "a.csv"]);
    assert_eq!(code(&bad_range), 3);
    let bad_crit = run(
        dir.path(),
        &["select", "--y", "y.csv", "--na-range", "2:3", "--lambda-range", "0.9", "--criterion", "mdl", "--out", "b.csv"],
    );
    assert_eq!(code(&bad_crit), 3);
    let ess_no_x = run(
        dir.path(),
        &["select", "--y", "y.csv", "--na-range", "2:3", "--lambda-range", "0.9", "--criterion", "ess_sss", "--out", "c.csv"],
    );
    assert_eq!(code(&ess_no_x), 3);
}

#[test]
fn predict_writes_one_step_predictions() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    assert_eq!(
        code(&run(dir.path(), &["identify", "--y", "y.csv", "--na", "6", "--lambda", "0.9", "--out", "m.json"])),
        0
    );
    let out = run(
        dir.path(),
        &["predict", "--model", "m.json", "--y", "y.csv", "--out", "p.csv", "--residuals", "r.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let y = read_signal_csv(&dir.path().join("y.csv")).unwrap();
    let p = read_signal_csv(&dir.path().join("p.csv")).unwrap();
    let r = read_signal_csv(&dir.path().join("r.csv")).unwrap();
    for t in 0..y.len() {
        let (yt, sum) = (y.samples()[t], p.samples()[t] + r.samples()[t]);
        let scale = yt.abs().max(p.samples()[t].abs()).max(r.samples()[t].abs());
        assert!((sum - yt).abs() <= 1e-14 * scale, "t = {t}");
    }
    let rss: f64 = report_value(&stdout(&out), "rss_sss").unwrap().parse().unwrap();
    assert!(rss < 0.01);

    let short = run(dir.path(), &["predict", "--model", "m.json", "--y", "p.csv", "--x", "y.csv", "--out", "q.csv"]);
    assert_eq!(code(&short), 3, "TAR model given an excitation");
}

#[test]
fn simulate_noise_is_seeded() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 50.0);
    assert_eq!(
        code(&run(
            dir.path(),
            &["identify", "--y", "y.csv", "--x", "x.csv", "--na", "2", "--nb", "6", "--lambda", "0.9", "--out", "m.json"],
        )),
        0
    );
    let sim = |seed: &str, out: &str| {
        run(
            dir.path(),
            &["--seed", seed, "simulate", "--model", "m.json", "--x", "x.csv", "--noise", "model", "--out", out],
        )
    };
    assert_eq!(code(&sim("3", "a.csv")), 0);
    assert_eq!(code(&sim("3", "b.csv")), 0);
    assert_eq!(code(&sim("4", "c.csv")), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_ne!(a, std::fs::read(dir.path().join("c.csv")).unwrap());

    let tar = run(dir.path(), &["identify", "--y", "y.csv", "--na", "2", "--lambda", "0.9", "--out", "tar.json"]);
    assert_eq!(code(&tar), 0);
    let refused = run(dir.path(), &["simulate", "--model", "tar.json", "--x", "x.csv", "--out", "d.csv"]);
    assert_eq!(code(&refused), 4);
}

#[test]
fn spectral_counts_three_conjugate_pairs() {
    let dir = TempDir::new().unwrap();
    // Poles at 100, 300 and 600 kHz with light damping.
    let mut poly = vec![1.0];
    for (f, r) in [(100e3, 0.97), (300e3, 0.95), (600e3, 0.9)] {
        let th = 2.0 * PI * f * TS;
        let quad = [1.0, -2.0 * r * f64::cos(th), r * r];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, p) in poly.iter().enumerate() {
            for (j, q) in quad.iter().enumerate() {
                next[i + j] += p * q;
            }
        }
        poly = next;
    }
    let s = ModelStructure::tar(6, 0.9).unwrap();
    let traj = ParameterTrajectory::constant(s, &poly[1..], 1e-4, 50)
        .unwrap()
        .with_timebase(TS, 0.0)
        .unwrap();
    write_trajectory_json(&dir.path().join("m.json"), &traj).unwrap();

    let out = run(dir.path(), &["spectral", "--model", "m.json", "--freq-grid", "201", "--out-dir", "spectra"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(report_value(&stdout(&out), "modes").as_deref(), Some("3"));
    let freqs = read_grid_csv(&dir.path().join("spectra/modal_frequencies.csv")).unwrap();
    assert_eq!(freqs.rows, vec![1.0, 2.0, 3.0]);
    assert_eq!(freqs.cols.len(), 50);
    for (k, f) in [100e3, 300e3, 600e3].iter().enumerate() {
        assert!((freqs.values[[k, 0]] / f - 1.0).abs() < 0.05);
    }
    let psd = read_grid_csv(&dir.path().join("spectra/psd.csv")).unwrap();
    assert_eq!(psd.row_label, "time_s");
    assert_eq!((psd.rows.len(), psd.cols.len()), (50, 201));
    assert_eq!(psd.cols[200], 1e6);
    assert!(!dir.path().join("spectra/frf.csv").exists());
    assert!(dir.path().join("spectra/modal_dampings.csv").exists());

    let again = run(dir.path(), &["spectral", "--model", "m.json", "--out-dir", "spectra"]);
    assert_eq!(code(&again), 2, "existing outputs");
}

#[test]
fn spectral_tarx_writes_frf() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let id = run(
        dir.path(),
        &["identify", "--y", "y.csv", "--x", "x.csv", "--na", "4", "--nb", "4", "--lambda", "0.9", "--out", "m.json"],
    );
    assert_eq!(code(&id), 0);
    let out = run(dir.path(), &["spectral", "--model", "m.json", "--out-dir", "spectra", "--tracks"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let frf = read_grid_csv(&dir.path().join("spectra/frf.csv")).unwrap();
    assert_eq!((frf.rows.len(), frf.cols.len()), (601, 501));
}

#[test]
fn spectrogram_defaults_and_burst_peak() {
    let dir = TempDir::new().unwrap();
    let burst = tvarx_core::tone_burst(5, 250e3, 1.0, TS).unwrap();
    let mut y = vec![0.0; 300];
    y[100..100 + burst.len()].copy_from_slice(burst.samples());
    write_signal(dir.path(), "y.csv", &Signal::new(y, TS).unwrap());
    let out = run(dir.path(), &["spectrogram", "--y", "y.csv", "--out", "sg.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(report_value(&text, "window").as_deref(), Some("30"));
    assert_eq!(report_value(&text, "overlap").as_deref(), Some("0.98"));
    assert_eq!(report_value(&text, "nfft").as_deref(), Some("3000"));
    assert_eq!(report_value(&text, "hop").as_deref(), Some("1"));

    let g = read_grid_csv(&dir.path().join("sg.csv")).unwrap();
    assert_eq!(g.rows.len(), 300 - 30 + 1);
    let df = g.cols[1] - g.cols[0];
    // Frame whose window sits on the middle of the burst.
    let row = 100 + burst.len() / 2 - 15;
    let best = (0..g.cols.len())
        .max_by(|&a, &b| g.values[[row, a]].total_cmp(&g.values[[row, b]]))
        .unwrap();
    assert!((g.cols[best] - 250e3).abs() <= df);
}

struct SurrogateFixture {
    dir: TempDir,
}

impl SurrogateFixture {
    fn new(temps: &[f64], scheme: Option<&str>) -> Self {
        let dir = TempDir::new().unwrap();
        let data = dir.path().join("data");
        std::fs::create_dir(&data).unwrap();
        let mut records = Vec::new();
        for &t in temps {
            let (y, x) = plate_records(t);
            let yn = format!("y_{}.csv", temp_label(t));
            write_signal(&data, &yn, &y);
            write_signal(&data, "x.csv", &x);
            records.push(serde_json::json!({"temperature": t, "y": format!("data/{yn}"), "x": "data/x.csv"}));
        }
        let mut manifest = serde_json::json!({
            "structure": {"na": 2, "nb": 6, "lambda": 0.9},
            "records": records,
        });
        if let Some(s) = scheme {
            manifest["scheme"] = serde_json::json!(s);
        }
        write_atomic(&dir.path().join("manifest.json"), manifest.to_string().as_bytes()).unwrap();
        SurrogateFixture { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn build(&self, extra: &[&str]) -> std::process::Output {
        run(self.path(), &[&["surrogate", "build", "--manifest", "manifest.json", "--out", "s.json"], extra].concat())
    }
}

#[test]
fn surrogate_build_query_eval() {
    let temps = [30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];
    let fx = SurrogateFixture::new(&temps, None);
    let built = fx.build(&[]);
    assert_eq!(code(&built), 0, "{}", stderr(&built));
    assert!(stdout(&built).contains("scheme: linear"));

    let (y625, _) = plate_records(62.5);
    write_signal(fx.path(), "y625.csv", &y625);
    let q = run(
        fx.path(),
        &[
            "surrogate", "query", "--model", "s.json", "--temp", "62.5", "--x", "data/x.csv", "--out", "q.csv",
            "--params-out", "q.json",
        ],
    );
    assert_eq!(code(&q), 0, "{}", stderr(&q));
    assert_eq!(read_signal_csv(&fx.path().join("q.csv")).unwrap().len(), 601);
    assert_eq!(read_trajectory_json(&fx.path().join("q.json")).unwrap().len(), 601);

    for scheme in ["linear", "v5cubic", "spline"] {
        let e = run(
            fx.path(),
            &[
                "surrogate", "eval", "--model", "s.json", "--temp", "62.5", "--x", "data/x.csv", "--y", "y625.csv",
                "--scheme", scheme,
            ],
        );
        assert_eq!(code(&e), 0, "{scheme}: {}", stderr(&e));
        let ess: f64 = report_value(&stdout(&e), "ess_sss").unwrap().parse().unwrap();
        assert!(ess < 0.02, "{scheme}: {ess}");
    }

    // Knot query scores the stored trajectory itself.
    let e = run(
        fx.path(),
        &["surrogate", "eval", "--model", "s.json", "--temp", "50", "--x", "data/x.csv", "--y", "data/y_50.csv"],
    );
    assert_eq!(code(&e), 0, "{}", stderr(&e));
    let model = read_surrogate_json(&fx.path().join("s.json")).unwrap();
    let x = read_signal_csv(&fx.path().join("data/x.csv")).unwrap();
    let y50 = read_signal_csv(&fx.path().join("data/y_50.csv")).unwrap();
    let direct = ess_sss(&simulate(&model.trajectories()[2], &x, None).unwrap(), &y50).unwrap();
    assert_eq!(report_value(&stdout(&e), "ess_sss").unwrap(), format_number(direct));
}

#[test]
fn surrogate_refusals_exit_4() {
    let fx = SurrogateFixture::new(&[30.0, 60.0, 90.0], None);
    assert_eq!(code(&fx.build(&[])), 0);
    let x = "data/x.csv";
    let v5 = run(
        fx.path(),
        &["surrogate", "query", "--model", "s.json", "--temp", "98.5", "--scheme", "v5cubic", "--x", x, "--out", "a.csv"],
    );
    assert_eq!(code(&v5), 4);
    assert!(stderr(&v5).contains("cannot be used for extrapolation"), "{}", stderr(&v5));
    assert!(!fx.path().join("a.csv").exists());

    let spline = run(
        fx.path(),
        &["surrogate", "query", "--model", "s.json", "--temp", "45", "--scheme", "spline", "--x", x, "--out", "b.csv"],
    );
    assert_eq!(code(&spline), 4);
    assert!(stderr(&spline).contains("at least 4"));

    let lin = run(
        fx.path(),
        &["surrogate", "query", "--model", "s.json", "--temp", "98.5", "--x", x, "--out", "c.csv"],
    );
    assert_eq!(code(&lin), 0, "linear extrapolates: {}", stderr(&lin));

    let fx2 = SurrogateFixture::new(&[30.0, 60.0, 90.0], Some("spline"));
    let refused = fx2.build(&[]);
    assert_eq!(code(&refused), 4);
    assert!(!fx2.path().join("s.json").exists());
}

#[test]
fn surrogate_manifest_errors() {
    let fx = SurrogateFixture::new(&[30.0, 60.0], None);
    std::fs::write(fx.path().join("manifest.json"), "{\"structure\": {}}").unwrap();
    assert_eq!(code(&fx.build(&[])), 2);
    std::fs::write(
        fx.path().join("manifest.json"),
        "{\"structure\": {\"na\": 2, \"nb\": 6, \"lambda\": 0.9}, \"records\": [{\"temperature\": 30, \"y\": \"data/none.csv\"}]}",
    )
    .unwrap();
    assert_eq!(code(&fx.build(&[])), 2);
}

#[test]
fn jobs_setting_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    synth_pair(dir.path(), 30.0);
    let args = ["select", "--y", "y.csv", "--na-range", "2:6", "--lambda-range", "0.8:0.95:0.05"];
    let one = tvarx()
        .current_dir(dir.path())
        .env("TVARX_JOBS", "1")
        .args([&args[..], &["--out", "a.csv"]].concat())
        .output()
        .unwrap();
    assert_eq!(code(&one), 0, "{}", stderr(&one));
    let many = run(dir.path(), &[&args[..], &["--jobs", "4", "--out", "b.csv"]].concat());
    assert_eq!(code(&many), 0, "{}", stderr(&many));
    assert_eq!(sha256_file(&dir.path().join("a.csv")), sha256_file(&dir.path().join("b.csv")));
}
