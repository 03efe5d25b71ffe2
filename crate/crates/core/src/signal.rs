//! Uniformly sampled real signals, tone-burst actuation and decimation.
//!
//! Discrete time is 1-based: sample `t` (t = 1..=N) sits at analog time
//! `(t - 1) * ts + t0`. Internally samples live in a 0-based `Vec`.

use std::f64::consts::PI;

use crate::error::{invalid, Result, TvError};
use crate::filter;

/// A uniformly sampled real-valued record.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    ts: f64,
    t0: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, ts: f64) -> Result<Self> {
        Self::with_start(samples, ts, 0.0)
    }

    pub fn with_start(samples: Vec<f64>, ts: f64, t0: f64) -> Result<Self> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(invalid(format!("sampling interval must be positive, got {ts}")));
        }
        if samples.is_empty() {
            return Err(invalid("signal must contain at least one sample"));
        }
        if !t0.is_finite() {
            return Err(invalid("start time must be finite"));
        }
        Ok(Signal { samples, ts, t0 })
    }

    /// All-zero record of `n` samples.
    pub fn zeros(n: usize, ts: f64) -> Result<Self> {
        Self::new(vec![0.0; n], ts)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn fs(&self) -> f64 {
        1.0 / self.ts
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Analog time of 1-based sample `t`.
    pub fn time_of(&self, t: usize) -> f64 {
        (t as f64 - 1.0) * self.ts + self.t0
    }

    /// Analog time of every sample, in order.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.len()).map(|t| self.time_of(t)).collect()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Same sampling grid, new values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::with_start(samples, self.ts, self.t0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Signal {
            samples: self.samples.iter().map(|v| v * c).collect(),
            ts: self.ts,
            t0: self.t0,
        }
    }

    /// Keeps samples from 0-based index `start` onward, at most `len` of them.
    ///
    /// The start time moves with the crop so analog times are preserved.
    pub fn crop(&self, start: usize, len: Option<usize>) -> Result<Self> {
        if start >= self.len() {
            return Err(invalid(format!(
                "crop start {start} is beyond the record length {}",
                self.len()
            )));
        }
        let end = match len {
            Some(l) => (start + l).min(self.len()),
            None => self.len(),
        };
        if end == start {
            return Err(invalid("crop length must be at least one sample"));
        }
        Self::with_start(
            self.samples[start..end].to_vec(),
            self.ts,
            self.t0 + start as f64 * self.ts,
        )
    }

    /// Zero-extends (or truncates) the record to exactly `n` samples.
    pub fn resized(&self, n: usize) -> Result<Self> {
        let mut s = self.samples.clone();
        s.resize(n, 0.0);
        self.with_samples(s)
    }
}

/// Symmetric Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n)
            .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / (n - 1) as f64).cos())
            .collect(),
    }
}

/// Hamming-windowed sine burst of `cycles` periods at `center_freq`.
///
/// The burst lasts `round(cycles / center_freq / ts)` samples and is scaled
/// so that its largest absolute sample equals `amplitude`.
pub fn tone_burst(cycles: u32, center_freq: f64, amplitude: f64, ts: f64) -> Result<Signal> {
    if cycles == 0 {
        return Err(invalid("tone burst needs at least one cycle"));
    }
    if !(ts > 0.0) {
        return Err(invalid("sampling interval must be positive"));
    }
    if !(center_freq > 0.0) {
        return Err(invalid("center frequency must be positive"));
    }
    if center_freq >= 0.5 / ts {
        return Err(TvError::Sampling(format!(
            "center frequency {center_freq} Hz is at or above the Nyquist frequency {} Hz",
            0.5 / ts
        )));
    }
    let n = (cycles as f64 / center_freq / ts).round() as usize;
    let n = n.max(1);
    let window = hamming(n);
    let raw: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(k, w)| w * (2.0 * PI * center_freq * k as f64 * ts).sin())
        .collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let samples = if peak > 0.0 && amplitude != 0.0 {
        let scale = amplitude / peak;
        raw.into_iter().map(|v| v * scale).collect()
    } else {
        vec![0.0; n]
    };
    Signal::new(samples, ts)
}

/// Low-pass filters (zero phase) and keeps every `factor`-th sample.
///
/// The anti-alias filter is a Hamming-windowed sinc of order `8 * factor`
/// with cutoff at 0.8 of the output Nyquist frequency, applied forward and
/// backward.
pub fn decimate(sig: &Signal, factor: usize) -> Result<Signal> {
    if factor == 0 {
        return Err(TvError::Sampling("decimation factor must be at least 1".into()));
    }
    if factor > sig.len() {
        return Err(TvError::Sampling(format!(
            "decimation factor {factor} exceeds the record length {}",
            sig.len()
        )));
    }
    if factor == 1 {
        return Ok(sig.clone());
    }
    // cutoff in cycles/sample of the input rate
    let cutoff = 0.8 * 0.5 / factor as f64;
    let taps = filter::lowpass_fir(8 * factor, cutoff);
    let smoothed = filter::filtfilt_fir(&taps, sig.samples());
    let kept: Vec<f64> = smoothed.into_iter().step_by(factor).collect();
    Signal::with_start(kept, sig.ts() * factor as f64, sig.t0())
}
