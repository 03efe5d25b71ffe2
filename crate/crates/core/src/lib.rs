//! Time-varying AR/ARX identification for non-stationary signals.
//!
//! The crate covers the whole chain used to model guided-wave records that
//! change with temperature:
//!
//! * [`signal`] and [`synth`]: records, tone-burst actuation, decimation and
//!   a synthetic multi-packet plate response.
//! * [`nonparametric`]: STFT spectrogram and windowed mean-square tracking.
//! * [`model`]: TAR/TARX structures, one-step-ahead prediction, simulation.
//! * [`rml`]: exponentially weighted recursive estimation, including the
//!   forward/backward/forward scheme.
//! * [`selection`]: fit ratios, likelihood, AIC/BIC and grid search.
//! * [`frozen`]: frozen-time PSD, FRF and modal tracks.
//! * [`surrogate`]: per-temperature trajectories interpolated across
//!   temperature to simulate records where no data exist.
//! * [`io`]: CSV and JSON file formats.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod error;
pub mod filter;
pub mod frozen;
pub mod interp;
pub mod io;
pub mod model;
pub mod nonparametric;
pub mod rml;
pub mod roots;
pub mod selection;
pub mod signal;
pub mod surrogate;
pub mod synth;

pub use error::{Result, TvError};
pub use frozen::{frozen_frf, frozen_modes, frozen_psd, nyquist_grid, FrozenGrid, ModalTrack};
pub use interp::Scheme;
pub use model::{
    predict_one_step, regressor, simulate, EvalRange, ModelStructure, ParameterTrajectory,
    PredictionResult,
};
pub use nonparametric::{sliding_variance, spectrogram, SpectrogramSettings, TimeFrequencyGrid};
pub use rml::{
    estimate, identify, innovations_variance, rml_step, three_pass_estimate, Estimation,
    EstimationOptions, Passes, RmlState,
};
pub use selection::{
    aic, bic, ess_sss, gaussian_loglik, grid_search, lambda_grid, rss_sss, select_parsimonious,
    CandidateScore, CandidateStatus, Criterion, SearchGrid,
};
pub use signal::{decimate, tone_burst, Signal};
pub use surrogate::{SurrogateModel, TrainingRecord};
pub use synth::{synth_guided_wave, Acquisition, SynthConfig};
