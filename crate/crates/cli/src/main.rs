//! `tvarx`: batch front end for synthesis, identification, structure
//! selection, spectra and temperature surrogates.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::CliError;

#[derive(Parser, Debug)]
#[command(name = "tvarx", version, about, long_about = None)]
struct Cli {
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,

    /// Seed for every stochastic step (default 0, or the config's seed for synth).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel steps; 0 uses all cores.
    #[arg(long, global = true, env = "TVARX_JOBS", default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a guided-wave record from a JSON plate configuration.
    Synth(SynthArgs),
    /// Estimate a TAR/TARX parameter trajectory.
    Identify(IdentifyArgs),
    /// Grid search over orders and forgetting factors.
    Select(SelectArgs),
    /// One-step-ahead prediction with a stored model.
    Predict(PredictArgs),
    /// Simulate a TARX model driven by an excitation record.
    Simulate(SimulateArgs),
    /// Frozen-time PSD, FRF and modal tracks of a stored model.
    Spectral(SpectralArgs),
    /// Short-time Fourier spectrogram of a record.
    Spectrogram(SpectrogramArgs),
    /// Temperature surrogate: build, query or evaluate.
    #[command(subcommand)]
    Surrogate(SurrogateCommand),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Plate configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output record (CSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the excitation channel: the same plate at its reference
    /// temperature, noise free.
    #[arg(long)]
    pub excitation_out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PassArg {
    Single,
    Three,
}

#[derive(Args, Debug, Clone)]
pub struct EstimatorArgs {
    /// Forward/backward/forward (three) or a single forward pass.
    #[arg(long, value_enum, default_value_t = PassArg::Three)]
    pub passes: PassArg,
    /// Initial covariance scale.
    #[arg(long, default_value_t = 1e4)]
    pub alpha: f64,
    /// Half-width M of the innovations-variance window.
    #[arg(long, default_value_t = 10)]
    pub variance_window: usize,
    /// Let the covariance grow without bound during unexcited stretches.
    #[arg(long)]
    pub unbounded_covariance: bool,
}

#[derive(Args, Debug)]
pub struct IdentifyArgs {
    /// Output record to model (CSV).
    #[arg(long)]
    pub y: PathBuf,
    /// Excitation record (CSV); required with --nb.
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub na: usize,
    #[arg(long)]
    pub nb: Option<usize>,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Trajectory JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Residual CSV (default: <out>.residuals.csv).
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    /// Report (default: <out>.report.txt).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// AR orders, `lo:hi` inclusive.
    #[arg(long, default_value = "2:22")]
    pub na_range: String,
    /// X orders, `lo:hi` inclusive; needs --x.
    #[arg(long)]
    pub nb_range: Option<String>,
    /// Forgetting factors, `lo:hi` or `lo:hi:step`.
    #[arg(long, default_value = "0.5:0.999")]
    pub lambda_range: String,
    /// Step for a two-part --lambda-range.
    #[arg(long, default_value_t = 0.001)]
    pub lambda_step: f64,
    /// rss_sss, ess_sss, bic or aic (default: ess_sss with --x, else rss_sss).
    #[arg(long)]
    pub criterion: Option<String>,
    /// Score gap under which the smaller AR order is preferred.
    #[arg(long, default_value_t = 1e-5)]
    pub parsimony_gap: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Ranked candidates (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Predicted record (CSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Residual CSV.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    /// Zero innovations.
    None,
    /// Gaussian innovations with the model's variance sequence.
    Model,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_enum, default_value_t = NoiseArg::None)]
    pub noise: NoiseArg,
    /// Reference record; when given, ESS/SSS is reported.
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpectralArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Number of frequencies from 0 to Nyquist.
    #[arg(long, default_value_t = 501)]
    pub freq_grid: usize,
    /// Order modal rows by nearest-frequency continuity instead of by value.
    #[arg(long)]
    pub tracks: bool,
    /// Directory for psd.csv, frf.csv, modal_frequencies.csv,
    /// modal_dampings.csv and modal_magnitudes.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpectrogramArgs {
    #[arg(long)]
    pub y: PathBuf,
    /// Hamming window length in samples.
    #[arg(long, default_value_t = 30)]
    pub window: usize,
    /// Overlap fraction.
    #[arg(long, default_value_t = 0.98)]
    pub overlap: f64,
    /// FFT length as a multiple of the window.
    #[arg(long, default_value_t = 100)]
    pub nfft_mult: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum SurrogateCommand {
    /// Identify one trajectory per training record listed in a manifest.
    Build(SurrogateBuildArgs),
    /// Simulate at a temperature.
    Query(SurrogateQueryArgs),
    /// ESS/SSS of the simulation at a temperature against a reference.
    Eval(SurrogateEvalArgs),
}

#[derive(Args, Debug)]
pub struct SurrogateBuildArgs {
    /// Manifest JSON: structure, records (temperature, y, x) and an
    /// optional scheme; paths are relative to the manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// linear, spline or v5cubic (overrides the manifest).
    #[arg(long)]
    pub scheme: Option<String>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SurrogateQueryArgs {
    /// Surrogate JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Query temperature (deg C).
    #[arg(long)]
    pub temp: f64,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub x: PathBuf,
    /// Simulated record (CSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the interpolated trajectory (JSON).
    #[arg(long)]
    pub params_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SurrogateEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub temp: f64,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub x: PathBuf,
    /// Reference record at the query temperature.
    #[arg(long)]
    pub y: PathBuf,
    /// Report file; the report always goes to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::validation(format!("cannot start {} workers: {e}", cli.jobs)))?;
    }
    let ctx = commands::Context {
        force: cli.force,
        seed: cli.seed,
    };
    match cli.command {
        Command::Synth(a) => commands::synth(&ctx, a),
        Command::Identify(a) => commands::identify(&ctx, a),
        Command::Select(a) => commands::select(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Spectral(a) => commands::spectral(&ctx, a),
        Command::Spectrogram(a) => commands::spectrogram(&ctx, a),
        Command::Surrogate(SurrogateCommand::Build(a)) => commands::surrogate_build(&ctx, a),
        Command::Surrogate(SurrogateCommand::Query(a)) => commands::surrogate_query(&ctx, a),
        Command::Surrogate(SurrogateCommand::Eval(a)) => commands::surrogate_eval(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
