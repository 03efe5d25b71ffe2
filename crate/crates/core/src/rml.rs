//! Recursive maximum-likelihood (exponentially weighted recursive least
//! squares) estimation of TAR/TARX parameter trajectories.
//!
//! Each step computes the a-priori prediction error with the previous
//! estimate, the adaptation gain `k = P phi / (lambda + phi' P phi)`, and
//! updates `theta += k e`, `P = (P - k phi' P) / lambda`. `P` is
//! re-symmetrized after every update and is otherwise left alone.

use ndarray::Array2;

use crate::error::{invalid, Result, TvError};
use crate::model::{fill_regressor, ModelStructure, ParameterTrajectory};
use crate::nonparametric::sliding_variance;
use crate::signal::Signal;

/// Running estimate and covariance of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct RmlState {
    theta: Vec<f64>,
    /// Row-major `d x d`.
    p: Vec<f64>,
    t: usize,
    scratch: Vec<f64>,
    trace_limit: Option<f64>,
}

impl RmlState {
    /// Zero parameter vector with covariance `alpha * I`.
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("initial covariance scale must be positive, got {alpha}")));
        }
        if dim == 0 {
            return Err(invalid("parameter dimension must be positive"));
        }
        let mut p = vec![0.0; dim * dim];
        for i in 0..dim {
            p[i * dim + i] = alpha;
        }
        Ok(RmlState {
            theta: vec![0.0; dim],
            p,
            t: 0,
            scratch: vec![0.0; dim],
            trace_limit: None,
        })
    }

    /// Starts from a given estimate and covariance (row-major).
    pub fn from_parts(theta: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let d = theta.len();
        if d == 0 || p.len() != d * d {
            return Err(invalid("covariance must be d x d for a d-dimensional estimate"));
        }
        Ok(RmlState {
            theta,
            p,
            t: 0,
            scratch: vec![0.0; d],
            trace_limit: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Covariance, row-major.
    pub fn covariance(&self) -> &[f64] {
        &self.p
    }

    pub fn covariance_matrix(&self) -> Array2<f64> {
        let d = self.dim();
        Array2::from_shape_vec((d, d), self.p.clone()).expect("square covariance")
    }

    /// Number of updates applied so far.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Caps `trace(P)`: when dividing by `lambda` would push the trace past
    /// `limit`, the division is reduced to land on it. Long stretches of
    /// zero regressors (silent gaps in noise-free records) otherwise inflate
    /// `P` by `1 / lambda` per sample without bound.
    pub fn with_trace_limit(mut self, limit: Option<f64>) -> Result<Self> {
        if let Some(l) = limit {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid("covariance trace limit must be positive"));
            }
        }
        self.trace_limit = limit;
        Ok(self)
    }

    pub fn trace_limit(&self) -> Option<f64> {
        self.trace_limit
    }

    pub(crate) fn restart_clock(&mut self) {
        self.t = 0;
    }

    /// One recursion step; returns the a-priori prediction error.
    pub fn step(&mut self, phi: &[f64], y: f64, lambda: f64) -> Result<f64> {
        let d = self.dim();
        if phi.len() != d {
            return Err(TvError::LengthMismatch {
                what: "regressor dimension",
                expected: d,
                actual: phi.len(),
            });
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(invalid(format!("forgetting factor must lie in (0, 1], got {lambda}")));
        }
        let t = self.t + 1;
        let fail = |reason: &str| TvError::NumericalFailure {
            t,
            reason: reason.to_string(),
        };

        let pred: f64 = phi.iter().zip(&self.theta).map(|(a, b)| a * b).sum();
        let err = y - pred;
        if !err.is_finite() {
            return Err(fail("non-finite prediction error"));
        }

        // u = P phi
        let u = &mut self.scratch;
        for i in 0..d {
            let row = &self.p[i * d..(i + 1) * d];
            u[i] = row.iter().zip(phi).map(|(a, b)| a * b).sum();
        }
        let denom = lambda + phi.iter().zip(u.iter()).map(|(a, b)| a * b).sum::<f64>();
        if !(denom.is_finite() && denom > 0.0) {
            return Err(fail("adaptation gain denominator is not positive and finite"));
        }

        for i in 0..d {
            self.theta[i] += u[i] / denom * err;
        }
        for i in 0..d {
            let ki = u[i] / denom;
            for j in 0..d {
                self.p[i * d + j] -= ki * u[j];
            }
        }
        let mut scale = 1.0 / lambda;
        if let Some(limit) = self.trace_limit {
            let tr: f64 = (0..d).map(|i| self.p[i * d + i]).sum();
            if tr * scale > limit {
                scale = (limit / tr).clamp(1.0, scale);
            }
        }
        if scale != 1.0 {
            for v in &mut self.p {
                *v *= scale;
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                let m = 0.5 * (self.p[i * d + j] + self.p[j * d + i]);
                self.p[i * d + j] = m;
                self.p[j * d + i] = m;
            }
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(fail("non-finite parameter estimate"));
        }
        if self.p.iter().any(|v| !v.is_finite()) {
            return Err(fail("non-finite covariance"));
        }
        self.t = t;
        Ok(err)
    }
}

/// Functional form of a single update, for callers that prefer values.
pub fn rml_step(state: &RmlState, phi: &[f64], y: f64, lambda: f64) -> Result<(RmlState, f64)> {
    let mut next = state.clone();
    let e = next.step(phi, y, lambda)?;
    Ok((next, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Passes {
    SingleForward,
    #[default]
    ThreePass,
}

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationOptions {
    /// Initial covariance scale, `P[0] = alpha * I`.
    pub alpha: f64,
    pub passes: Passes,
    /// Half-width of the innovations-variance window (`2M + 1` samples).
    pub variance_window_m: usize,
    /// Keep `trace(P) <= n_params * alpha` (see [`RmlState::with_trace_limit`]).
    pub bounded_covariance: bool,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        EstimationOptions {
            alpha: 1e4,
            passes: Passes::ThreePass,
            variance_window_m: 10,
            bounded_covariance: true,
        }
    }
}

/// Trajectory plus the a-priori residuals that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimation {
    pub trajectory: ParameterTrajectory,
    /// `e[t | t-1]`, computed with the estimate of the previous instant.
    pub residuals: Signal,
}

struct PassOutput {
    theta: Array2<f64>,
    residuals: Vec<f64>,
}

/// How a pass treats the first instants, whose regressors are zero padded.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Startup {
    /// Update on them like on any other instant.
    Update,
    /// Predict only. Used once the estimate already holds information: the
    /// padding stands in for unseen samples, and at `lambda = 1` a wrong
    /// equation fed here is never forgotten.
    PredictOnly,
}

fn run_pass(
    state: &mut RmlState,
    y: &[f64],
    x: Option<&[f64]>,
    s: &ModelStructure,
    startup: Startup,
) -> Result<PassOutput> {
    let d = s.n_params();
    let n = y.len();
    let padded = s.na.max(s.nb.unwrap_or(0));
    let mut phi = vec![0.0; d];
    let mut theta = Array2::zeros((n, d));
    let mut residuals = Vec::with_capacity(n);
    state.restart_clock();
    for t in 1..=n {
        fill_regressor(y, x, t, s.na, s.nb, &mut phi);
        let e = if startup == Startup::PredictOnly && t <= padded {
            y[t - 1] - phi.iter().zip(state.theta()).map(|(p, th)| p * th).sum::<f64>()
        } else {
            state.step(&phi, y[t - 1], s.lambda)?
        };
        residuals.push(e);
        for (dst, src) in theta.row_mut(t - 1).iter_mut().zip(state.theta()) {
            *dst = *src;
        }
    }
    Ok(PassOutput { theta, residuals })
}

fn check_inputs(y: &Signal, x: Option<&Signal>, s: &ModelStructure, opts: &EstimationOptions) -> Result<()> {
    s.validate()?;
    if !(opts.alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    match (s.nb, x) {
        (Some(_), None) => return Err(invalid("TARX structure requires an excitation signal")),
        (None, Some(_)) => return Err(invalid("TAR structure takes no excitation signal")),
        (Some(_), Some(x)) if x.len() != y.len() => {
            return Err(TvError::LengthMismatch {
                what: "excitation length",
                expected: y.len(),
                actual: x.len(),
            })
        }
        _ => {}
    }
    Ok(())
}

fn initial_state(s: &ModelStructure, opts: &EstimationOptions) -> Result<RmlState> {
    let d = s.n_params();
    let limit = opts.bounded_covariance.then_some(d as f64 * opts.alpha);
    RmlState::new(d, opts.alpha)?.with_trace_limit(limit)
}

fn finish(
    s: &ModelStructure,
    out: PassOutput,
    y: &Signal,
    opts: &EstimationOptions,
) -> Result<Estimation> {
    let m = opts.variance_window_m.min((out.residuals.len() - 1) / 2);
    let sigma2e = innovations_variance(&out.residuals, m)?;
    Ok(Estimation {
        trajectory: ParameterTrajectory::new(*s, out.theta, sigma2e)?.with_timebase(y.ts(), y.t0())?,
        residuals: y.with_samples(out.residuals)?,
    })
}

/// Single forward pass from a zero estimate and `alpha * I` covariance.
///
/// Requires more samples than parameters.
pub fn estimate(
    y: &Signal,
    x: Option<&Signal>,
    s: &ModelStructure,
    opts: &EstimationOptions,
) -> Result<Estimation> {
    check_inputs(y, x, s, opts)?;
    if y.len() <= s.n_params() {
        return Err(invalid(format!(
            "{} samples cannot identify {} parameters",
            y.len(),
            s.n_params()
        )));
    }
    let mut state = initial_state(s, opts)?;
    let out = run_pass(&mut state, y.samples(), x.map(Signal::samples), s, Startup::Update)?;
    finish(s, out, y, opts)
}

/// Forward, backward (time-reversed), then final forward pass; each pass
/// starts from the terminal estimate and covariance of the one before.
/// The final pass supplies the trajectory and residuals.
///
/// Only the first pass updates on the zero-padded startup regressors; the
/// later ones just predict there, so their residuals still cover every
/// instant.
pub fn three_pass_estimate(
    y: &Signal,
    x: Option<&Signal>,
    s: &ModelStructure,
    opts: &EstimationOptions,
) -> Result<Estimation> {
    check_inputs(y, x, s, opts)?;
    let ys = y.samples();
    let xs = x.map(Signal::samples);
    let mut state = initial_state(s, opts)?;

    run_pass(&mut state, ys, xs, s, Startup::Update)?;

    let y_rev: Vec<f64> = ys.iter().rev().copied().collect();
    let x_rev: Option<Vec<f64>> = xs.map(|x| x.iter().rev().copied().collect());
    run_pass(&mut state, &y_rev, x_rev.as_deref(), s, Startup::PredictOnly)?;

    let out = run_pass(&mut state, ys, xs, s, Startup::PredictOnly)?;
    finish(s, out, y, opts)
}

/// Dispatches on `opts.passes`.
pub fn identify(
    y: &Signal,
    x: Option<&Signal>,
    s: &ModelStructure,
    opts: &EstimationOptions,
) -> Result<Estimation> {
    match opts.passes {
        Passes::SingleForward => estimate(y, x, s, opts),
        Passes::ThreePass => three_pass_estimate(y, x, s, opts),
    }
}

/// Windowed innovations variance, `2M + 1` samples centered on each instant.
pub fn innovations_variance(residuals: &[f64], m: usize) -> Result<Vec<f64>> {
    sliding_variance(residuals, m)
}
