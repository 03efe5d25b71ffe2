//! TAR/TARX model structure, parameter trajectories, one-step-ahead
//! prediction and transfer-function simulation.
//!
//! Parameter rows are laid out as `[a_1 .. a_na, b_0 .. b_nb]`; `a_0 = 1` is
//! implicit. Samples before the start of a record are taken as zero.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TvError};
use crate::signal::Signal;

/// Default bound on |y| before a simulation is declared diverged.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// AR order, optional X order and forgetting factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelStructure {
    pub na: usize,
    pub nb: Option<usize>,
    pub lambda: f64,
}

impl ModelStructure {
    pub fn new(na: usize, nb: Option<usize>, lambda: f64) -> Result<Self> {
        let s = ModelStructure { na, nb, lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn tar(na: usize, lambda: f64) -> Result<Self> {
        Self::new(na, None, lambda)
    }

    pub fn tarx(na: usize, nb: usize, lambda: f64) -> Result<Self> {
        Self::new(na, Some(nb), lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.na == 0 {
            return Err(invalid("AR order na must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(invalid(format!(
                "forgetting factor must lie in (0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn has_x(&self) -> bool {
        self.nb.is_some()
    }

    /// Number of coefficients per time instant.
    pub fn n_params(&self) -> usize {
        self.na + self.nb.map_or(0, |nb| nb + 1)
    }

    /// Leading samples dominated by the zero initial conditions.
    pub fn transient(&self) -> usize {
        self.na.max(self.nb.map_or(0, |nb| nb + 1))
    }
}

impl std::fmt::Display for ModelStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.nb {
            Some(nb) => write!(f, "TARX({},{})_{}", self.na, nb, self.lambda),
            None => write!(f, "TAR({})_{}", self.na, self.lambda),
        }
    }
}

/// Per-instant parameter vectors and innovations variances.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTrajectory {
    structure: ModelStructure,
    theta: Array2<f64>,
    sigma2e: Vec<f64>,
    ts: f64,
    t0: f64,
}

impl ParameterTrajectory {
    pub fn new(structure: ModelStructure, theta: Array2<f64>, sigma2e: Vec<f64>) -> Result<Self> {
        structure.validate()?;
        let (rows, cols) = theta.dim();
        if cols != structure.n_params() {
            return Err(TvError::LengthMismatch {
                what: "parameter columns",
                expected: structure.n_params(),
                actual: cols,
            });
        }
        if rows == 0 {
            return Err(invalid("trajectory needs at least one time instant"));
        }
        if sigma2e.len() != rows {
            return Err(TvError::LengthMismatch {
                what: "innovations variance length",
                expected: rows,
                actual: sigma2e.len(),
            });
        }
        if sigma2e.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("innovations variances must be nonnegative"));
        }
        Ok(ParameterTrajectory {
            structure,
            theta,
            sigma2e,
            ts: 1.0,
            t0: 0.0,
        })
    }

    /// Attaches the sampling grid of the record the trajectory describes.
    pub fn with_timebase(mut self, ts: f64, t0: f64) -> Result<Self> {
        if !(ts > 0.0 && ts.is_finite() && t0.is_finite()) {
            return Err(invalid("trajectory sampling interval must be positive"));
        }
        self.ts = ts;
        self.t0 = t0;
        Ok(self)
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Analog time of each instant.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.ts + self.t0).collect()
    }

    /// Time-invariant trajectory repeating `row` for `n` instants.
    pub fn constant(structure: ModelStructure, row: &[f64], sigma2e: f64, n: usize) -> Result<Self> {
        let d = row.len();
        let theta = Array2::from_shape_fn((n, d), |(_, k)| row[k]);
        Self::new(structure, theta, vec![sigma2e; n])
    }

    pub fn structure(&self) -> &ModelStructure {
        &self.structure
    }

    pub fn theta(&self) -> &Array2<f64> {
        &self.theta
    }

    pub fn sigma2e(&self) -> &[f64] {
        &self.sigma2e
    }

    pub fn len(&self) -> usize {
        self.theta.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter row of 1-based instant `t`.
    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.theta.row(t - 1)
    }

    /// AR coefficients `a_1..a_na` at 1-based instant `t`.
    pub fn ar(&self, t: usize) -> Vec<f64> {
        self.theta.row(t - 1).iter().take(self.structure.na).copied().collect()
    }

    /// X coefficients `b_0..b_nb` at 1-based instant `t` (empty for TAR).
    pub fn x_coeffs(&self, t: usize) -> Vec<f64> {
        self.theta.row(t - 1).iter().skip(self.structure.na).copied().collect()
    }

    pub fn with_sigma2e(mut self, sigma2e: Vec<f64>) -> Result<Self> {
        if sigma2e.len() != self.len() {
            return Err(TvError::LengthMismatch {
                what: "innovations variance length",
                expected: self.len(),
                actual: sigma2e.len(),
            });
        }
        self.sigma2e = sigma2e;
        Ok(self)
    }
}

fn check_x(structure: &ModelStructure, y_len: usize, x: Option<&[f64]>) -> Result<()> {
    match (structure.nb, x) {
        (Some(_), None) => Err(invalid("TARX structure requires an excitation signal")),
        (None, Some(_)) => Err(invalid("TAR structure takes no excitation signal")),
        (Some(_), Some(x)) if x.len() != y_len => Err(TvError::LengthMismatch {
            what: "excitation length",
            expected: y_len,
            actual: x.len(),
        }),
        _ => Ok(()),
    }
}

/// Fills `phi` with the regressor at 1-based time `t` without bounds checks
/// beyond the zero-initial-condition rule.
pub(crate) fn fill_regressor(
    y: &[f64],
    x: Option<&[f64]>,
    t: usize,
    na: usize,
    nb: Option<usize>,
    phi: &mut [f64],
) {
    let idx = t - 1;
    for i in 1..=na {
        phi[i - 1] = if idx >= i { -y[idx - i] } else { 0.0 };
    }
    if let (Some(nb), Some(x)) = (nb, x) {
        for i in 0..=nb {
            phi[na + i] = if idx >= i { x[idx - i] } else { 0.0 };
        }
    }
}

/// Regressor `[-y[t-1] .. -y[t-na], x[t] .. x[t-nb]]` at 1-based time `t`.
pub fn regressor(y: &Signal, x: Option<&Signal>, t: usize, s: &ModelStructure) -> Result<Vec<f64>> {
    s.validate()?;
    let xs = x.map(Signal::samples);
    check_x(s, y.len(), xs)?;
    if t == 0 || t > y.len() {
        return Err(invalid(format!("time index {t} outside 1..={}", y.len())));
    }
    let mut phi = vec![0.0; s.n_params()];
    fill_regressor(y.samples(), xs, t, s.na, s.nb, &mut phi);
    Ok(phi)
}

/// Sample range, 0-based and half open, over which fit ratios are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalRange {
    pub start: usize,
    pub end: Option<usize>,
}

impl EvalRange {
    pub const FULL: EvalRange = EvalRange { start: 0, end: None };

    pub fn skip(start: usize) -> Self {
        EvalRange { start, end: None }
    }

    pub(crate) fn bounds(&self, n: usize) -> (usize, usize) {
        let end = self.end.unwrap_or(n).min(n);
        (self.start.min(end), end)
    }
}

/// One-step-ahead predictions, residuals and their RSS/SSS.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub predicted: Signal,
    pub residuals: Signal,
    pub rss_sss: f64,
}

/// `predicted[t] = phi[t]' theta[t]` and `residual[t] = y[t] - predicted[t]`.
pub fn predict_one_step(
    traj: &ParameterTrajectory,
    y: &Signal,
    x: Option<&Signal>,
    range: EvalRange,
) -> Result<PredictionResult> {
    let s = traj.structure();
    if traj.len() != y.len() {
        return Err(TvError::LengthMismatch {
            what: "trajectory length",
            expected: y.len(),
            actual: traj.len(),
        });
    }
    let xs = x.map(Signal::samples);
    check_x(s, y.len(), xs)?;
    let ys = y.samples();
    let mut phi = vec![0.0; s.n_params()];
    let mut predicted = Vec::with_capacity(ys.len());
    let mut residuals = Vec::with_capacity(ys.len());
    for t in 1..=ys.len() {
        fill_regressor(ys, xs, t, s.na, s.nb, &mut phi);
        let p: f64 = phi.iter().zip(traj.row(t).iter()).map(|(a, b)| a * b).sum();
        predicted.push(p);
        residuals.push(ys[t - 1] - p);
    }
    let (lo, hi) = range.bounds(ys.len());
    let rss: f64 = residuals[lo..hi].iter().map(|e| e * e).sum();
    let sss: f64 = ys[lo..hi].iter().map(|v| v * v).sum();
    let rss_sss = if sss > 0.0 { rss / sss } else { f64::NAN };
    Ok(PredictionResult {
        predicted: y.with_samples(predicted)?,
        residuals: y.with_samples(residuals)?,
        rss_sss,
    })
}

/// Drives the frozen-coefficient difference equation
/// `y[t] = -sum a_i[t] y[t-i] + sum b_i[t] x[t-i] + e[t]` from rest.
pub fn simulate(traj: &ParameterTrajectory, x: &Signal, noise: Option<&Signal>) -> Result<Signal> {
    simulate_guarded(traj, x, noise, OVERFLOW_GUARD)
}

pub fn simulate_guarded(
    traj: &ParameterTrajectory,
    x: &Signal,
    noise: Option<&Signal>,
    guard: f64,
) -> Result<Signal> {
    let s = traj.structure();
    let nb = s.nb.ok_or_else(|| {
        TvError::UnsupportedModel("simulation needs a TARX model with an excitation channel".into())
    })?;
    let n = traj.len();
    if x.len() != n {
        return Err(TvError::LengthMismatch {
            what: "excitation length",
            expected: n,
            actual: x.len(),
        });
    }
    if let Some(e) = noise {
        if e.len() != n {
            return Err(TvError::LengthMismatch {
                what: "noise length",
                expected: n,
                actual: e.len(),
            });
        }
    }
    let xs = x.samples();
    let es = noise.map(Signal::samples);
    let mut y = vec![0.0; n];
    for idx in 0..n {
        let row = traj.theta.row(idx);
        let mut acc = es.map_or(0.0, |e| e[idx]);
        for i in 1..=s.na.min(idx) {
            acc -= row[i - 1] * y[idx - i];
        }
        for i in 0..=nb.min(idx) {
            acc += row[s.na + i] * xs[idx - i];
        }
        if !(acc.abs() <= guard) {
            return Err(TvError::Diverged {
                t: idx + 1,
                value: acc.abs(),
                guard,
            });
        }
        y[idx] = acc;
    }
    x.with_samples(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn structure_invariants() {
        assert!(ModelStructure::tar(0, 0.9).is_err());
        assert!(ModelStructure::tar(2, 0.0).is_err());
        assert!(ModelStructure::tar(2, 1.01).is_err());
        let s = ModelStructure::tarx(6, 7, 0.6).unwrap();
        assert_eq!(s.n_params(), 14);
        assert_eq!(s.transient(), 8);
        assert_eq!(ModelStructure::tar(4, 1.0).unwrap().n_params(), 4);
    }

    #[test]
    fn regressor_examples() {
        let s = ModelStructure::tarx(2, 2, 0.9).unwrap();
        let phi = regressor(&sig(&[4.0, 5.0]), Some(&sig(&[3.0, 1.0])), 1, &s).unwrap();
        assert_eq!(phi, vec![0.0, 0.0, 3.0, 0.0, 0.0]);

        let s = ModelStructure::tar(2, 0.9).unwrap();
        let phi = regressor(&sig(&[1.0, 2.0, 3.0]), None, 3, &s).unwrap();
        assert_eq!(phi, vec![-2.0, -1.0]);

        let s = ModelStructure::tarx(1, 1, 0.9).unwrap();
        let phi = regressor(&sig(&[1.0, 2.0]), Some(&sig(&[5.0, 7.0])), 2, &s).unwrap();
        assert_eq!(phi, vec![-1.0, 7.0, 5.0]);

        assert!(regressor(&sig(&[1.0, 2.0]), Some(&sig(&[5.0, 7.0])), 3, &s).is_err());
        assert!(regressor(&sig(&[1.0, 2.0]), Some(&sig(&[5.0, 7.0])), 0, &s).is_err());
        assert!(regressor(&sig(&[1.0, 2.0]), None, 1, &s).is_err());
    }

    #[test]
    fn null_model_predicts_zero() {
        let s = ModelStructure::tar(2, 0.9).unwrap();
        let y = sig(&[1.0, -2.0, 0.5, 3.0]);
        let traj = ParameterTrajectory::constant(s, &[0.0, 0.0], 1.0, 4).unwrap();
        let p = predict_one_step(&traj, &y, None, EvalRange::FULL).unwrap();
        assert!(p.predicted.samples().iter().all(|v| *v == 0.0));
        assert_eq!(p.residuals.samples(), y.samples());
        assert_eq!(p.rss_sss, 1.0);
    }

    #[test]
    fn true_ar2_leaves_no_residual() {
        let a = [-1.5, 0.7];
        let mut y = vec![1.0, 0.3];
        for t in 2..50 {
            y.push(-a[0] * y[t - 1] - a[1] * y[t - 2]);
        }
        let s = ModelStructure::tar(2, 1.0).unwrap();
        let traj = ParameterTrajectory::constant(s, &a, 1.0, 50).unwrap();
        let p = predict_one_step(&traj, &sig(&y), None, EvalRange::FULL).unwrap();
        for e in &p.residuals.samples()[2..] {
            assert_abs_diff_eq!(*e, 0.0, epsilon = 1e-12);
        }
        assert!(predict_one_step(&traj, &sig(&y[..10]), None, EvalRange::FULL).is_err());
    }

    #[test]
    fn zero_input_simulates_silence() {
        let s = ModelStructure::tarx(2, 1, 0.9).unwrap();
        let traj = ParameterTrajectory::constant(s, &[-1.2, 0.5, 1.0, 0.3], 1.0, 20).unwrap();
        let y = simulate(&traj, &sig(&[0.0; 20]), None).unwrap();
        assert!(y.samples().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_response_matches_scalar_recursion() {
        let (a1, a2, b0, b1) = (-1.6, 0.81, 0.5, -0.2);
        let s = ModelStructure::tarx(2, 1, 1.0).unwrap();
        let traj = ParameterTrajectory::constant(s, &[a1, a2, b0, b1], 1.0, 64).unwrap();
        let mut x = vec![0.0; 64];
        x[0] = 1.0;
        let y = simulate(&traj, &sig(&x), None).unwrap();
        let (mut y1, mut y2) = (0.0f64, 0.0f64);
        for n in 0..64 {
            let xn = if n == 0 { 1.0 } else { 0.0 };
            let xn1 = if n == 1 { 1.0 } else { 0.0 };
            let v = -a1 * y1 - a2 * y2 + b0 * xn + b1 * xn1;
            assert_abs_diff_eq!(y.samples()[n], v, epsilon = 1e-12);
            y2 = y1;
            y1 = v;
        }
    }

    #[test]
    fn simulation_rejects_tar_and_reports_divergence() {
        let s = ModelStructure::tar(1, 0.9).unwrap();
        let traj = ParameterTrajectory::constant(s, &[-0.5], 1.0, 5).unwrap();
        assert!(matches!(
            simulate(&traj, &sig(&[1.0; 5]), None),
            Err(TvError::UnsupportedModel(_))
        ));

        let s = ModelStructure::tarx(1, 0, 0.9).unwrap();
        let traj = ParameterTrajectory::constant(s, &[-10.0, 1.0], 1.0, 40).unwrap();
        let mut x = vec![0.0; 40];
        x[0] = 1.0;
        match simulate(&traj, &sig(&x), None) {
            Err(TvError::Diverged { t, .. }) => assert_eq!(t, 14),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_validation() {
        let s = ModelStructure::tar(2, 0.9).unwrap();
        assert!(ParameterTrajectory::new(s, Array2::zeros((3, 3)), vec![0.0; 3]).is_err());
        assert!(ParameterTrajectory::new(s, Array2::zeros((3, 2)), vec![0.0; 2]).is_err());
        assert!(ParameterTrajectory::new(s, Array2::zeros((3, 2)), vec![-1.0; 3]).is_err());
    }
}
