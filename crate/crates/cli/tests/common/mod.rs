#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use tvarx_core::io::{format_number, write_signal_csv};
use tvarx_core::{Acquisition, Signal, SynthConfig};

pub const TS: f64 = 5e-7;

pub fn tvarx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tvarx"))
}

/// Runs the binary in `dir` with `TVARX_JOBS` unset.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    tvarx()
        .current_dir(dir)
        .env_remove("TVARX_JOBS")
        .args(args)
        .output()
        .expect("spawn tvarx")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Value of a `key: value` line.
pub fn report_value(text: &str, key: &str) -> Option<String> {
    let prefix = format!("{key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix).map(|v| v.split_whitespace().next().unwrap_or("").to_string()))
}

/// `y[t] = -sum a_i y[t-i] + e[t]`, unit-variance innovations, zero start.
pub fn ar_process(a: &[f64], n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 200;
    let mut y = vec![0.0; n + burn];
    let mut e = vec![0.0; n + burn];
    for t in 0..n + burn {
        e[t] = StandardNormal.sample(&mut rng);
        let mut v = e[t];
        for (i, ai) in a.iter().enumerate() {
            if t > i {
                v -= ai * y[t - 1 - i];
            }
        }
        y[t] = v;
    }
    (y.split_off(burn), e.split_off(burn))
}

pub fn plate_config_json(temperature: f64) -> String {
    serde_json::to_string_pretty(&SynthConfig::plate_analog(temperature)).unwrap()
}

pub fn write_config(dir: &Path, name: &str, temperature: f64) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, plate_config_json(temperature)).unwrap();
    path
}

/// Received and excitation records of the plate analog at `temperature`.
pub fn plate_records(temperature: f64) -> (Signal, Signal) {
    let acq = Acquisition::default();
    let cfg = SynthConfig::plate_analog(temperature);
    (acq.record(&cfg).unwrap(), acq.excitation(&cfg).unwrap())
}

pub fn write_signal(dir: &Path, name: &str, s: &Signal) -> PathBuf {
    let path = dir.join(name);
    write_signal_csv(&path, s).unwrap();
    path
}

pub fn temp_label(t: f64) -> String {
    format_number(t).replace('.', "p")
}

pub fn sha256_file(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sorted (relative path, hash) of every file under `dir`.
pub fn tree_hashes(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, sha256_file(&p)));
            }
        }
    }
    out.sort();
    out
}
