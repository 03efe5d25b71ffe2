use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use tvarx_core::io::{
    candidates_csv, format_number, grid_csv, read_signal_csv, read_surrogate_json, read_trajectory_json,
    write_atomic, write_signal_csv, write_surrogate_json, write_trajectory_json,
};
use tvarx_core::selection::score_estimate;
use tvarx_core::{
    ess_sss, frozen_frf, frozen_modes, frozen_psd, grid_search, identify as estimate_trajectory, lambda_grid,
    nyquist_grid, predict_one_step, select_parsimonious, simulate as run_simulation, spectrogram as stft,
    Acquisition, Criterion, EstimationOptions, EvalRange, ModelStructure, ParameterTrajectory, Passes, Scheme,
    SearchGrid, Signal, SpectrogramSettings, SurrogateModel, SynthConfig, TrainingRecord,
};

use crate::output::{reading, sibling, CliError, CliResult, Outputs, Report};
use crate::{
    EstimatorArgs, IdentifyArgs, NoiseArg, PassArg, PredictArgs, SelectArgs, SimulateArgs, SpectralArgs,
    SpectrogramArgs, SurrogateBuildArgs, SurrogateEvalArgs, SurrogateQueryArgs, SynthArgs,
};

pub struct Context {
    pub force: bool,
    pub seed: Option<u64>,
}

impl Context {
    fn outputs(&self) -> Outputs {
        Outputs::new(self.force)
    }
}

fn read_signal(path: &Path) -> CliResult<Signal> {
    reading(path, read_signal_csv(path))
}

fn read_optional(path: Option<&PathBuf>) -> CliResult<Option<Signal>> {
    path.map(|p| read_signal(p)).transpose()
}

fn read_json_value(path: &Path) -> CliResult<serde_json::Value> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::io(format!("{}: malformed JSON: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, v: serde_json::Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn parse_scheme(s: &str) -> CliResult<Scheme> {
    s.parse::<Scheme>().map_err(CliError::from)
}

impl EstimatorArgs {
    fn options(&self) -> CliResult<EstimationOptions> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(CliError::validation("--alpha must be positive and finite"));
        }
        Ok(EstimationOptions {
            alpha: self.alpha,
            passes: match self.passes {
                PassArg::Single => Passes::SingleForward,
                PassArg::Three => Passes::ThreePass,
            },
            variance_window_m: self.variance_window,
            bounded_covariance: !self.unbounded_covariance,
        })
    }
}

/// `lo:hi` (inclusive) or a single value.
fn parse_order_range(flag: &str, s: &str) -> CliResult<Vec<usize>> {
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| CliError::validation(format!("{flag}: `{s}` is not an order range like 2:22")))
    };
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(CliError::validation(format!("{flag}: empty range {s}")));
    }
    Ok((lo..=hi).collect())
}

/// `lo:hi:step`, `lo:hi` (step from `default_step`) or a single value.
fn parse_lambda_range(s: &str, default_step: f64) -> CliResult<Vec<f64>> {
    let bad = || CliError::validation(format!("--lambda-range: `{s}` is not a range like 0.5:0.999:0.001"));
    let parts = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<Vec<f64>>>()?;
    let (lo, hi, step) = match parts[..] {
        [v] => (v, v, default_step),
        [a, b] => (a, b, default_step),
        [a, b, c] => (a, b, c),
        _ => return Err(bad()),
    };
    Ok(lambda_grid(lo, hi, step)?)
}

/// Largest spread (max - min) of any coefficient over the last quarter.
fn final_quarter_drift(traj: &ParameterTrajectory) -> f64 {
    let theta = traj.theta();
    let n = theta.nrows();
    let start = n - n / 4;
    theta
        .columns()
        .into_iter()
        .map(|c| {
            let tail = c.slice(ndarray::s![start..]);
            let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max)
}

pub fn synth(ctx: &Context, a: SynthArgs) -> CliResult<()> {
    ctx.outputs().check_all(std::iter::once(&a.out).chain(a.excitation_out.as_ref()))?;
    let mut value = read_json_value(&a.config)?;
    let acquisition = match value.as_object_mut().and_then(|o| o.remove("acquisition")) {
        Some(v) => parse_json::<Acquisition>(&a.config, v)?,
        None => Acquisition::default(),
    };
    let mut cfg: SynthConfig = parse_json(&a.config, value)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let y = acquisition.record(&cfg)?;
    write_signal_csv(&a.out, &y)?;
    if let Some(path) = &a.excitation_out {
        write_signal_csv(path, &acquisition.excitation(&cfg)?)?;
    }
    let mut summary = Report::default();
    summary
        .add("samples", y.len())
        .add("ts", format_number(y.ts()))
        .add("temperature", format_number(cfg.temperature));
    print!("{}", summary.text());
    Ok(())
}

pub fn identify(ctx: &Context, a: IdentifyArgs) -> CliResult<()> {
    let residuals_path = a.residuals.clone().unwrap_or_else(|| sibling(&a.out, "residuals.csv"));
    let report_path = a.report.clone().unwrap_or_else(|| sibling(&a.out, "report.txt"));
    ctx.outputs().check_all([&a.out, &residuals_path, &report_path])?;
    let s = ModelStructure::new(a.na, a.nb, a.lambda)?;
    let opts = a.estimator.options()?;
    let y = read_signal(&a.y)?;
    let x = read_optional(a.x.as_ref())?;
    if y.len() <= s.n_params() {
        return Err(CliError::validation(format!(
            "{s} has {} parameters but the record has only {} samples",
            s.n_params(),
            y.len()
        )));
    }

    let est = estimate_trajectory(&y, x.as_ref(), &s, &opts)?;
    let score = score_estimate(&est, &y, x.as_ref())?;

    let mut report = Report::default();
    report
        .add("structure", s)
        .add("passes", if opts.passes == Passes::ThreePass { "three" } else { "single" })
        .add("samples", y.len())
        .add("rss_sss", format_number(score.rss_sss))
        .add("loglik", format_number(score.loglik))
        .add("aic", format_number(score.aic))
        .add("bic", format_number(score.bic))
        .add("ess_sss", score.ess_sss.map_or("NA".to_string(), format_number))
        .add("final_quarter_max_drift", format_number(final_quarter_drift(&est.trajectory)));

    write_trajectory_json(&a.out, &est.trajectory)?;
    write_signal_csv(&residuals_path, &est.residuals)?;
    write_atomic(&report_path, report.text().as_bytes())?;
    print!("{}", report.text());
    Ok(())
}

pub fn select(ctx: &Context, a: SelectArgs) -> CliResult<()> {
    let na = parse_order_range("--na-range", &a.na_range)?;
    let nb = a.nb_range.as_deref().map(|r| parse_order_range("--nb-range", r)).transpose()?;
    let lambdas = parse_lambda_range(&a.lambda_range, a.lambda_step)?;
    let criterion = match &a.criterion {
        Some(c) => c.parse::<Criterion>()?,
        None if a.x.is_some() => Criterion::EssSss,
        None => Criterion::RssSss,
    };
    let grid = SearchGrid { na, nb, lambdas };
    let structures = grid.structures()?;
    ctx.outputs().check(&a.out)?;
    let opts = a.estimator.options()?;
    let y = read_signal(&a.y)?;
    let x = read_optional(a.x.as_ref())?;
    if let Some(worst) = structures.iter().map(ModelStructure::n_params).max() {
        if y.len() <= worst {
            return Err(CliError::validation(format!(
                "the grid reaches {worst} parameters but the record has only {} samples",
                y.len()
            )));
        }
    }

    let ranked = grid_search(&y, x.as_ref(), &grid, criterion, &opts)?;
    write_atomic(&a.out, &candidates_csv(&ranked)?)?;

    println!("candidates: {}", ranked.len());
    let best = &ranked[0];
    println!(
        "best: {} {}: {}",
        best.structure,
        criterion,
        format_number(best.score(criterion))
    );
    if let Some(i) = select_parsimonious(&ranked, criterion, a.parsimony_gap) {
        let pick = &ranked[i];
        if i == 0 {
            println!(
                "parsimony: no candidate with fewer AR terms within {} of the best",
                format_number(a.parsimony_gap)
            );
        } else {
            println!(
                "parsimony: {} is within {} of the best (delta {}); prefer it",
                pick.structure,
                format_number(a.parsimony_gap),
                format_number(pick.delta)
            );
        }
    }
    Ok(())
}

pub fn predict(ctx: &Context, a: PredictArgs) -> CliResult<()> {
    ctx.outputs().check_all(std::iter::once(&a.out).chain(a.residuals.as_ref()))?;
    let traj = reading(&a.model, read_trajectory_json(&a.model))?;
    let y = read_signal(&a.y)?;
    let x = read_optional(a.x.as_ref())?;
    let skip = traj.structure().transient();
    let pred = predict_one_step(&traj, &y, x.as_ref(), EvalRange::skip(skip))?;
    write_signal_csv(&a.out, &pred.predicted)?;
    if let Some(path) = &a.residuals {
        write_signal_csv(path, &pred.residuals)?;
    }
    println!("rss_sss: {}", format_number(pred.rss_sss));
    Ok(())
}

fn model_noise(traj: &ParameterTrajectory, like: &Signal, seed: u64) -> CliResult<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = traj
        .sigma2e()
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * v.max(0.0).sqrt()
        })
        .collect();
    Ok(like.with_samples(e)?)
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> CliResult<()> {
    ctx.outputs().check(&a.out)?;
    let traj = reading(&a.model, read_trajectory_json(&a.model))?;
    let x = read_signal(&a.x)?;
    let reference = read_optional(a.y.as_ref())?;
    let noise = match a.noise {
        NoiseArg::None => None,
        NoiseArg::Model => Some(model_noise(&traj, &x, ctx.seed.unwrap_or(0))?),
    };
    let sim = run_simulation(&traj, &x, noise.as_ref())?;
    write_signal_csv(&a.out, &sim)?;
    println!("samples: {}", sim.len());
    if let Some(y) = reference {
        println!("ess_sss: {}", format_number(ess_sss(&sim, &y)?));
    }
    Ok(())
}

pub fn spectral(ctx: &Context, a: SpectralArgs) -> CliResult<()> {
    let names = [
        "psd.csv",
        "frf.csv",
        "modal_frequencies.csv",
        "modal_dampings.csv",
        "modal_magnitudes.csv",
    ];
    let paths: Vec<PathBuf> = names.iter().map(|n| a.out_dir.join(n)).collect();
    if a.freq_grid < 2 {
        return Err(CliError::validation("--freq-grid needs at least 2 frequencies"));
    }
    let traj = reading(&a.model, read_trajectory_json(&a.model))?;
    if !a.out_dir.is_dir() {
        std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(format!("{}: {e}", a.out_dir.display())))?;
    }
    ctx.outputs().check_all(&paths)?;

    let freqs = nyquist_grid(traj.ts(), a.freq_grid);
    let times = traj.times();
    let psd = frozen_psd(&traj, &freqs)?;
    write_atomic(&paths[0], &grid_csv("time_s", &times, &freqs, |i, j| psd.psd[[j, i]])?)?;
    if traj.structure().has_x() {
        let frf = frozen_frf(&traj, &freqs)?;
        let mag = frf
            .frf_mag
            .as_ref()
            .ok_or_else(|| CliError::validation("FRF magnitude missing"))?;
        write_atomic(&paths[1], &grid_csv("time_s", &times, &freqs, |i, j| mag[[j, i]])?)?;
    } else {
        println!("frf: skipped (TAR model has no excitation channel)");
    }
    if !psd.singular.is_empty() {
        println!("singular_cells: {}", psd.singular.len());
    }

    let modes = frozen_modes(&traj)?;
    let (freq_rows, damp_rows) = if a.tracks {
        modes.continuous_tracks()
    } else {
        (modes.frequencies.clone(), modes.dampings.clone())
    };
    let ids: Vec<f64> = (1..=modes.mode_count()).map(|k| k as f64).collect();
    write_atomic(&paths[2], &grid_csv("mode", &ids, &times, |i, j| freq_rows[[i, j]])?)?;
    write_atomic(&paths[3], &grid_csv("mode", &ids, &times, |i, j| damp_rows[[i, j]])?)?;
    write_atomic(
        &paths[4],
        &grid_csv("mode", &ids, &times, |i, j| modes.pole_magnitudes[[i, j]])?,
    )?;
    println!("modes: {}", modes.mode_count());
    println!("frequencies: {}", freqs.len());
    let marginal = modes.marginal.iter().filter(|m| **m).count();
    let failed = modes.failed.iter().filter(|f| **f).count();
    if marginal > 0 {
        println!("marginal_instants: {marginal}");
    }
    if failed > 0 {
        println!("failed_instants: {failed}");
    }
    Ok(())
}

pub fn spectrogram(ctx: &Context, a: SpectrogramArgs) -> CliResult<()> {
    ctx.outputs().check(&a.out)?;
    let settings = SpectrogramSettings {
        window_len: a.window,
        overlap: a.overlap,
        nfft_multiple: a.nfft_mult,
    };
    let y = read_signal(&a.y)?;
    let grid = stft(&y, settings)?;
    write_atomic(
        &a.out,
        &grid_csv("time_s", &grid.times, &grid.freqs, |i, j| grid.values[[j, i]])?,
    )?;
    let mut summary = Report::default();
    summary
        .add("window", settings.window_len)
        .add("overlap", format_number(settings.overlap))
        .add("nfft", settings.nfft())
        .add("hop", settings.hop())
        .add("frames", grid.times.len())
        .add("bins", grid.freqs.len())
        .add("resolution_hz", format_number(grid.freq_resolution));
    print!("{}", summary.text());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestRecord {
    temperature: f64,
    y: PathBuf,
    #[serde(default)]
    x: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    structure: ModelStructure,
    records: Vec<ManifestRecord>,
    #[serde(default)]
    scheme: Option<Scheme>,
}

pub fn surrogate_build(ctx: &Context, a: SurrogateBuildArgs) -> CliResult<()> {
    ctx.outputs().check(&a.out)?;
    let manifest: Manifest = parse_json(&a.manifest, read_json_value(&a.manifest)?)?;
    let scheme = match &a.scheme {
        Some(s) => parse_scheme(s)?,
        None => manifest.scheme.unwrap_or(Scheme::Linear),
    };
    let opts = a.estimator.options()?;
    let base = a.manifest.parent().unwrap_or(Path::new(""));
    let records = manifest
        .records
        .iter()
        .map(|r| {
            Ok(TrainingRecord {
                temperature: r.temperature,
                y: read_signal(&base.join(&r.y))?,
                x: read_optional(r.x.as_ref().map(|p| base.join(p)).as_ref())?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let model = SurrogateModel::build(&records, manifest.structure, &opts)?.with_scheme(scheme)?;
    write_surrogate_json(&a.out, &model)?;
    let temps: Vec<String> = model.temps().iter().map(|t| format_number(*t)).collect();
    println!("structure: {}", model.structure());
    println!("knots: {}", temps.join(" "));
    println!("scheme: {}", model.scheme());
    Ok(())
}

fn load_surrogate(path: &Path, scheme: Option<&str>) -> CliResult<SurrogateModel> {
    let model = reading(path, read_surrogate_json(path))?;
    match scheme {
        Some(s) => Ok(model.with_scheme(parse_scheme(s)?)?),
        None => Ok(model),
    }
}

pub fn surrogate_query(ctx: &Context, a: SurrogateQueryArgs) -> CliResult<()> {
    ctx.outputs().check_all(std::iter::once(&a.out).chain(a.params_out.as_ref()))?;
    let model = load_surrogate(&a.model, a.scheme.as_deref())?;
    let x = read_signal(&a.x)?;
    let traj = model.interpolate_params(a.temp)?;
    let sim = run_simulation(&traj, &x, None)?;
    write_signal_csv(&a.out, &sim)?;
    if let Some(path) = &a.params_out {
        write_trajectory_json(path, &traj)?;
    }
    let mut summary = Report::default();
    summary
        .add("temperature", format_number(a.temp))
        .add("scheme", model.scheme())
        .add("samples", sim.len());
    print!("{}", summary.text());
    Ok(())
}

pub fn surrogate_eval(ctx: &Context, a: SurrogateEvalArgs) -> CliResult<()> {
    if let Some(p) = &a.report {
        ctx.outputs().check(p)?;
    }
    let model = load_surrogate(&a.model, a.scheme.as_deref())?;
    let x = read_signal(&a.x)?;
    let y = read_signal(&a.y)?;
    let score = model.evaluate(a.temp, &x, &y)?;
    let mut report = Report::default();
    report
        .add("temperature", format_number(a.temp))
        .add("scheme", model.scheme())
        .add("structure", model.structure())
        .add("ess_sss", format_number(score))
        .add("ess_sss_percent", format_number(100.0 * score));
    if let Some(p) = &a.report {
        write_atomic(p, report.text().as_bytes())?;
    }
    print!("{}", report.text());
    Ok(())
}
