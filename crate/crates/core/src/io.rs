//! File formats: CSV for signals and grids, JSON for models.
//!
//! Numbers are written in shortest round-trip form, so reading a file back
//! recovers every value bit for bit. Files are written to a temporary
//! sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TvError};
use crate::interp::Scheme;
use crate::model::{ModelStructure, ParameterTrajectory};
use crate::selection::CandidateScore;
use crate::signal::Signal;
use crate::surrogate::SurrogateModel;

/// Shortest decimal that parses back to the same `f64`; exponent notation
/// for very small or very large magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| TvError::Parse(format!("line {line}: '{s}' is not a number")))
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| TvError::Io(e.error))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> TvError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TvError::Io(io),
        other => TvError::Parse(format!("{other:?}")),
    }
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| TvError::Io(e.into_error()))
}

fn read_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
    Ok((header, rows))
}

/// Signal CSV: header `time_s,value`, one row per sample.
pub fn signal_csv(sig: &Signal) -> Result<Vec<u8>> {
    let times = sig.times();
    csv_bytes(
        &["time_s".into(), "value".into()],
        times
            .iter()
            .zip(sig.samples())
            .map(|(t, v)| vec![format_number(*t), format_number(*v)]),
    )
}

pub fn write_signal_csv(path: &Path, sig: &Signal) -> Result<()> {
    write_atomic(path, &signal_csv(sig)?)
}

/// Reads a signal CSV. The sampling interval is inferred from the time
/// column, which must be uniform.
pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let (header, rows) = read_records(path)?;
    if header.len() != 2 || header[0] != "time_s" || header[1] != "value" {
        return Err(TvError::Parse(format!(
            "{}: expected header 'time_s,value'",
            path.display()
        )));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != 2 {
            return Err(TvError::Parse(format!("line {}: expected two fields", i + 2)));
        }
        times.push(parse_number(&r[0], i + 2)?);
        values.push(parse_number(&r[1], i + 2)?);
    }
    if times.len() < 2 {
        return Err(TvError::Parse(
            "a signal CSV needs at least two rows to fix the sampling interval".into(),
        ));
    }
    let ts = infer_interval(&times)?;
    Signal::with_start(values, ts, times[0])
}

fn infer_interval(times: &[f64]) -> Result<f64> {
    let n = times.len();
    let t0 = times[0];
    let span = (times[n - 1] - t0) / (n - 1) as f64;
    if !(span > 0.0) {
        return Err(invalid("time column must be strictly increasing"));
    }
    // prefer a candidate that regenerates the column exactly
    let exact = |ts: f64| {
        times
            .iter()
            .enumerate()
            .all(|(k, t)| k as f64 * ts + t0 == *t)
    };
    let rounded = |digits: usize| format!("{span:.digits$e}").parse::<f64>().unwrap_or(span);
    // shortest first: several candidates may regenerate the column
    for c in [rounded(8), rounded(11), rounded(14), span, times[1] - t0] {
        if exact(c) {
            return Ok(c);
        }
    }
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - span).abs() <= 1e-6 * span);
    if !uniform {
        return Err(invalid("time column is not uniformly sampled"));
    }
    Ok(span)
}

/// Grid CSV: header `<row_label>,<col_1>,...`, then one row per entry of
/// `rows` holding `cell(row, col)` for every column.
pub fn grid_csv(
    row_label: &str,
    rows: &[f64],
    cols: &[f64],
    cell: impl Fn(usize, usize) -> f64,
) -> Result<Vec<u8>> {
    let mut header = vec![row_label.to_string()];
    header.extend(cols.iter().map(|c| format_number(*c)));
    csv_bytes(
        &header,
        rows.iter().enumerate().map(|(i, r)| {
            let mut rec = Vec::with_capacity(cols.len() + 1);
            rec.push(format_number(*r));
            rec.extend((0..cols.len()).map(|j| format_number(cell(i, j))));
            rec
        }),
    )
}

/// A parsed grid CSV: row keys, column keys and `rows x cols` values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub row_label: String,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub values: Array2<f64>,
}

pub fn read_grid_csv(path: &Path) -> Result<GridTable> {
    let (header, records) = read_records(path)?;
    if header.len() < 2 {
        return Err(TvError::Parse("grid CSV needs at least one value column".into()));
    }
    let cols = header[1..]
        .iter()
        .map(|h| parse_number(h, 1))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(records.len());
    let mut values = Array2::zeros((records.len(), cols.len()));
    for (i, r) in records.iter().enumerate() {
        if r.len() != cols.len() + 1 {
            return Err(TvError::Parse(format!("line {}: wrong field count", i + 2)));
        }
        rows.push(parse_number(&r[0], i + 2)?);
        for j in 0..cols.len() {
            values[[i, j]] = parse_number(&r[j + 1], i + 2)?;
        }
    }
    Ok(GridTable {
        row_label: header[0].clone(),
        rows,
        cols,
        values,
    })
}

/// Header of the grid-search export.
pub const CANDIDATE_HEADER: [&str; 8] = ["na", "nb", "lambda", "rss_sss", "ess_sss", "aic", "bic", "status"];

/// One row per candidate; absent `nb` and `ess_sss` are left empty.
pub fn candidates_csv(ranked: &[CandidateScore]) -> Result<Vec<u8>> {
    let header: Vec<String> = CANDIDATE_HEADER.iter().map(|s| s.to_string()).collect();
    csv_bytes(
        &header,
        ranked.iter().map(|c| {
            vec![
                c.structure.na.to_string(),
                c.structure.nb.map_or(String::new(), |b| b.to_string()),
                format_number(c.structure.lambda),
                format_number(c.rss_sss),
                c.ess_sss.map_or(String::new(), format_number),
                format_number(c.aic),
                format_number(c.bic),
                c.status.name().to_string(),
            ]
        }),
    )
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    structure: ModelStructure,
    ts: f64,
    #[serde(default)]
    t0: f64,
    /// Row-major `N x n_params`.
    theta: Vec<f64>,
    sigma2e: Vec<f64>,
}

fn flat(traj: &ParameterTrajectory) -> Vec<f64> {
    traj.theta().iter().copied().collect()
}

fn unflatten(s: ModelStructure, theta: Vec<f64>, sigma2e: Vec<f64>, ts: f64, t0: f64) -> Result<ParameterTrajectory> {
    let d = s.n_params();
    let n = sigma2e.len();
    if theta.len() != n * d {
        return Err(TvError::LengthMismatch {
            what: "theta entries (N x n_params)",
            expected: n * d,
            actual: theta.len(),
        });
    }
    let theta = Array2::from_shape_vec((n, d), theta).map_err(|e| invalid(e.to_string()))?;
    ParameterTrajectory::new(s, theta, sigma2e)?.with_timebase(ts, t0)
}

pub fn trajectory_json(traj: &ParameterTrajectory) -> Result<Vec<u8>> {
    let f = ModelFile {
        structure: *traj.structure(),
        ts: traj.ts(),
        t0: traj.t0(),
        theta: flat(traj),
        sigma2e: traj.sigma2e().to_vec(),
    };
    let mut v = serde_json::to_vec_pretty(&f)?;
    v.push(b'\n');
    Ok(v)
}

pub fn parse_trajectory_json(bytes: &[u8]) -> Result<ParameterTrajectory> {
    let f: ModelFile = serde_json::from_slice(bytes)?;
    f.structure.validate()?;
    unflatten(f.structure, f.theta, f.sigma2e, f.ts, f.t0)
}

pub fn write_trajectory_json(path: &Path, traj: &ParameterTrajectory) -> Result<()> {
    write_atomic(path, &trajectory_json(traj)?)
}

pub fn read_trajectory_json(path: &Path) -> Result<ParameterTrajectory> {
    parse_trajectory_json(&std::fs::read(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurrogateFile {
    structure: ModelStructure,
    ts: f64,
    #[serde(default)]
    t0: f64,
    temps: Vec<f64>,
    scheme: Scheme,
    trajectories: Vec<Vec<f64>>,
    sigma2e: Vec<Vec<f64>>,
}

pub fn surrogate_json(m: &SurrogateModel) -> Result<Vec<u8>> {
    let f = SurrogateFile {
        structure: *m.structure(),
        ts: m.ts(),
        t0: m.trajectories()[0].t0(),
        temps: m.temps().to_vec(),
        scheme: m.scheme(),
        trajectories: m.trajectories().iter().map(flat).collect(),
        sigma2e: m.trajectories().iter().map(|t| t.sigma2e().to_vec()).collect(),
    };
    let mut v = serde_json::to_vec_pretty(&f)?;
    v.push(b'\n');
    Ok(v)
}

pub fn parse_surrogate_json(bytes: &[u8]) -> Result<SurrogateModel> {
    let f: SurrogateFile = serde_json::from_slice(bytes)?;
    f.structure.validate()?;
    if f.trajectories.len() != f.sigma2e.len() {
        return Err(TvError::LengthMismatch {
            what: "sigma2e sequences",
            expected: f.trajectories.len(),
            actual: f.sigma2e.len(),
        });
    }
    let trajs = f
        .trajectories
        .into_iter()
        .zip(f.sigma2e)
        .map(|(th, var)| unflatten(f.structure, th, var, f.ts, f.t0))
        .collect::<Result<Vec<_>>>()?;
    SurrogateModel::from_parts(f.structure, f.temps, trajs, f.scheme)
}

pub fn write_surrogate_json(path: &Path, m: &SurrogateModel) -> Result<()> {
    write_atomic(path, &surrogate_json(m)?)
}

pub fn read_surrogate_json(path: &Path) -> Result<SurrogateModel> {
    parse_surrogate_json(&std::fs::read(path)?)
}
