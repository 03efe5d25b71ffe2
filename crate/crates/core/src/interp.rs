//! One-dimensional interpolation across a small set of knots.
//!
//! Every scheme here is linear in the knot values, so a query reduces to a
//! weight vector over the knots. The surrogate model computes the weights
//! once per query temperature and applies them to every coefficient.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Piecewise linear; the end segments extend outside the knots.
    Linear,
    /// Natural cubic spline; the end pieces extend outside the knots.
    Spline,
    /// Keys cubic convolution (a = -0.5), interior queries only.
    V5Cubic,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Linear, Scheme::Spline, Scheme::V5Cubic];

    pub fn min_knots(self) -> usize {
        match self {
            Scheme::Linear => 2,
            Scheme::V5Cubic => 3,
            Scheme::Spline => 4,
        }
    }

    pub fn extrapolates(self) -> bool {
        !matches!(self, Scheme::V5Cubic)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Linear => "linear",
            Scheme::Spline => "spline",
            Scheme::V5Cubic => "v5cubic",
        }
    }

    /// Refuses knot sets this scheme cannot work with.
    pub fn check_knots(self, knots: &[f64]) -> Result<()> {
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(invalid("knots must be finite"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("knots must be strictly increasing"));
        }
        if knots.len() < self.min_knots() {
            return Err(TvError::InterpolationRefused(format!(
                "{} interpolation requires at least {} data points, got {}",
                self.name(),
                self.min_knots(),
                knots.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Scheme::Linear),
            "spline" => Ok(Scheme::Spline),
            "v5cubic" => Ok(Scheme::V5Cubic),
            other => Err(invalid(format!(
                "unknown scheme '{other}' (expected linear, spline or v5cubic)"
            ))),
        }
    }
}

/// Weights `w` such that the interpolant at `q` equals `sum_i w[i] * v[i]`
/// for any knot values `v`.
pub fn weights(scheme: Scheme, knots: &[f64], q: f64) -> Result<Vec<f64>> {
    scheme.check_knots(knots)?;
    if !q.is_finite() {
        return Err(invalid("query point must be finite"));
    }
    let n = knots.len();
    if let Some(i) = knots.iter().position(|k| *k == q) {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        return Ok(w);
    }
    match scheme {
        Scheme::Linear => Ok(linear_weights(knots, q)),
        Scheme::Spline => Ok(spline_weights(knots, q)),
        Scheme::V5Cubic => {
            if q < knots[0] || q > knots[n - 1] {
                return Err(TvError::InterpolationRefused(format!(
                    "cubic convolution (v5cubic) cannot be used for extrapolation: \
                     {q} lies outside [{}, {}]",
                    knots[0],
                    knots[n - 1]
                )));
            }
            Ok(cubic_convolution_weights(knots, q))
        }
    }
}

/// Scalar convenience wrapper around [`weights`].
pub fn interpolate(scheme: Scheme, knots: &[f64], values: &[f64], q: f64) -> Result<f64> {
    if values.len() != knots.len() {
        return Err(TvError::LengthMismatch {
            what: "knot values",
            expected: knots.len(),
            actual: values.len(),
        });
    }
    let w = weights(scheme, knots, q)?;
    Ok(w.iter().zip(values).map(|(a, b)| a * b).sum())
}

/// Index of the interval used for `q`; end intervals cover the outside.
fn segment(knots: &[f64], q: f64) -> usize {
    let n = knots.len();
    knots[1..n - 1].partition_point(|k| *k <= q)
}

fn linear_weights(knots: &[f64], q: f64) -> Vec<f64> {
    let j = segment(knots, q);
    let b = (q - knots[j]) / (knots[j + 1] - knots[j]);
    let mut w = vec![0.0; knots.len()];
    w[j] = 1.0 - b;
    w[j + 1] = b;
    w
}

/// Second derivatives of the natural spline through `y`.
fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // tridiagonal system for interior nodes, solved by forward elimination
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    let mut upper = vec![0.0; k];
    for i in 0..k {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
    }
    for i in 1..k {
        let lower = x[i + 1] - x[i];
        let f = lower / diag[i - 1];
        diag[i] -= f * upper[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    m
}

fn spline_weights(knots: &[f64], q: f64) -> Vec<f64> {
    let n = knots.len();
    let j = segment(knots, q);
    let h = knots[j + 1] - knots[j];
    let a = (knots[j + 1] - q) / h;
    let b = 1.0 - a;
    let ca = (a * a * a - a) * h * h / 6.0;
    let cb = (b * b * b - b) * h * h / 6.0;
    let mut unit = vec![0.0; n];
    (0..n)
        .map(|i| {
            unit[i] = 1.0;
            let m = natural_second_derivatives(knots, &unit);
            unit[i] = 0.0;
            let direct = if i == j {
                a
            } else if i == j + 1 {
                b
            } else {
                0.0
            };
            direct + ca * m[j] + cb * m[j + 1]
        })
        .collect()
}

/// Keys kernel on index space. Non-uniform knots are mapped so that knot
/// `i` sits at index `i` and the query keeps its fractional position inside
/// its interval. Ghost values beyond the ends follow the cubic-exact rule
/// `f[-1] = 3 f[0] - 3 f[1] + f[2]`.
fn cubic_convolution_weights(knots: &[f64], q: f64) -> Vec<f64> {
    let n = knots.len();
    let j = segment(knots, q);
    let u = (q - knots[j]) / (knots[j + 1] - knots[j]);
    let u2 = u * u;
    let u3 = u2 * u;
    let kernel = [
        (-u3 + 2.0 * u2 - u) / 2.0,
        (3.0 * u3 - 5.0 * u2 + 2.0) / 2.0,
        (-3.0 * u3 + 4.0 * u2 + u) / 2.0,
        (u3 - u2) / 2.0,
    ];
    let mut w = vec![0.0; n];
    for (off, kw) in kernel.iter().enumerate() {
        let idx = j as i64 - 1 + off as i64;
        if idx < 0 {
            w[0] += 3.0 * kw;
            w[1] -= 3.0 * kw;
            w[2] += kw;
        } else if idx as usize >= n {
            w[n - 1] += 3.0 * kw;
            w[n - 2] -= 3.0 * kw;
            w[n - 3] += kw;
        } else {
            w[idx as usize] += kw;
        }
    }
    w
}
