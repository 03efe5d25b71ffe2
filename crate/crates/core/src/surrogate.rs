//! Temperature-indexed surrogate built from per-temperature parameter
//! trajectories.
//!
//! A single structure is identified at each training temperature. To reach
//! a temperature without data, every coefficient `theta_k[t]` is
//! interpolated across temperature on its own, and `sigma2e[t]` is
//! interpolated in log space so it stays positive.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{invalid, Result, TvError};
use crate::interp::{weights, Scheme};
use crate::model::{simulate, ModelStructure, ParameterTrajectory};
use crate::rml::{three_pass_estimate, EstimationOptions};
use crate::selection::{ess_sss, VARIANCE_FLOOR};
use crate::signal::Signal;

/// One training record.
#[derive(Debug, Clone)]
pub struct TrainingRecord {
    pub temperature: f64,
    pub y: Signal,
    pub x: Option<Signal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    structure: ModelStructure,
    temps: Vec<f64>,
    trajectories: Vec<ParameterTrajectory>,
    scheme: Scheme,
}

impl SurrogateModel {
    /// Estimates one trajectory per record with the three-pass scheme and
    /// stores them sorted by temperature. The scheme starts as linear.
    pub fn build(
        records: &[TrainingRecord],
        structure: ModelStructure,
        opts: &EstimationOptions,
    ) -> Result<Self> {
        if records.len() < 2 {
            return Err(invalid("a surrogate needs records at two or more temperatures"));
        }
        let n = records[0].y.len();
        for r in records {
            if r.y.len() != n {
                return Err(TvError::LengthMismatch {
                    what: "record length",
                    expected: n,
                    actual: r.y.len(),
                });
            }
        }
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|a, b| records[*a].temperature.total_cmp(&records[*b].temperature));
        let temps: Vec<f64> = order.iter().map(|i| records[*i].temperature).collect();
        if temps.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate training temperature"));
        }
        let trajectories = order
            .par_iter()
            .map(|&i| {
                let r = &records[i];
                three_pass_estimate(&r.y, r.x.as_ref(), &structure, opts).map(|e| e.trajectory)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(structure, temps, trajectories, Scheme::Linear)
    }

    /// Assembles a surrogate from stored trajectories, checking that they
    /// agree on structure, length and sampling.
    pub fn from_parts(
        structure: ModelStructure,
        temps: Vec<f64>,
        trajectories: Vec<ParameterTrajectory>,
        scheme: Scheme,
    ) -> Result<Self> {
        structure.validate()?;
        if temps.len() != trajectories.len() {
            return Err(TvError::LengthMismatch {
                what: "trajectory count",
                expected: temps.len(),
                actual: trajectories.len(),
            });
        }
        Scheme::Linear.check_knots(&temps)?;
        let first = &trajectories[0];
        for tr in &trajectories {
            if *tr.structure() != structure {
                return Err(invalid("trajectories must share the surrogate structure"));
            }
            if tr.len() != first.len() {
                return Err(TvError::LengthMismatch {
                    what: "trajectory length",
                    expected: first.len(),
                    actual: tr.len(),
                });
            }
            if tr.ts() != first.ts() {
                return Err(invalid("trajectories must share the sampling interval"));
            }
        }
        let m = SurrogateModel {
            structure,
            temps,
            trajectories,
            scheme: Scheme::Linear,
        };
        m.with_scheme(scheme)
    }

    /// Switches the interpolation scheme, refusing schemes that need more
    /// training temperatures than the surrogate has.
    pub fn with_scheme(mut self, scheme: Scheme) -> Result<Self> {
        scheme.check_knots(&self.temps)?;
        self.scheme = scheme;
        Ok(self)
    }

    pub fn structure(&self) -> &ModelStructure {
        &self.structure
    }

    pub fn temps(&self) -> &[f64] {
        &self.temps
    }

    pub fn trajectories(&self) -> &[ParameterTrajectory] {
        &self.trajectories
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn ts(&self) -> f64 {
        self.trajectories[0].ts()
    }

    pub fn len(&self) -> usize {
        self.trajectories[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cubic convolution treats the knots as equally spaced in index space;
    /// this reports when that is only an approximation.
    pub fn uniform_knots(&self) -> bool {
        let h = self.temps[1] - self.temps[0];
        self.temps
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
    }

    /// Trajectory at `temperature`. A training temperature returns its
    /// stored trajectory unchanged.
    pub fn interpolate_params(&self, temperature: f64) -> Result<ParameterTrajectory> {
        let w = weights(self.scheme, &self.temps, temperature)?;
        if let Some(i) = self.temps.iter().position(|t| *t == temperature) {
            return Ok(self.trajectories[i].clone());
        }
        let first = &self.trajectories[0];
        let (n, d) = first.theta().dim();
        let mut theta = Array2::zeros((n, d));
        let mut log_var = vec![0.0; n];
        for (wi, tr) in w.iter().zip(&self.trajectories) {
            if *wi == 0.0 {
                continue;
            }
            theta.scaled_add(*wi, tr.theta());
            for (acc, v) in log_var.iter_mut().zip(tr.sigma2e()) {
                *acc += wi * v.max(VARIANCE_FLOOR).ln();
            }
        }
        let sigma2e = log_var.into_iter().map(f64::exp).collect();
        ParameterTrajectory::new(self.structure, theta, sigma2e)?.with_timebase(first.ts(), first.t0())
    }

    /// Simulated response at `temperature` to the excitation `x`, driven by
    /// `noise` when given.
    pub fn simulate_at_temperature(
        &self,
        temperature: f64,
        x: &Signal,
        noise: Option<&Signal>,
    ) -> Result<Signal> {
        let traj = self.interpolate_params(temperature)?;
        simulate(&traj, x, noise)
    }

    /// ESS/SSS of the zero-noise simulation at `temperature` against a
    /// reference record.
    pub fn evaluate(&self, temperature: f64, x: &Signal, y_ref: &Signal) -> Result<f64> {
        let sim = self.simulate_at_temperature(temperature, x, None)?;
        ess_sss(&sim, y_ref)
    }
}
