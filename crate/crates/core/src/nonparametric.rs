//! Short-time Fourier spectrogram and windowed mean-square tracking.

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{invalid, Result};
use crate::signal::{hamming, Signal};

/// Power over a (frequency, time) grid. `values` is `freqs.len() x times.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrequencyGrid {
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    pub values: Array2<f64>,
    /// Spacing of the frequency grid, `fs / nfft`.
    pub freq_resolution: f64,
}

/// Settings for [`spectrogram`]. Defaults are a 30-sample Hamming window,
/// 98 % overlap and an FFT 100 times the window length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrogramSettings {
    pub window_len: usize,
    pub overlap: f64,
    pub nfft_multiple: usize,
}

impl Default for SpectrogramSettings {
    fn default() -> Self {
        SpectrogramSettings {
            window_len: 30,
            overlap: 0.98,
            nfft_multiple: 100,
        }
    }
}

impl SpectrogramSettings {
    pub fn hop(&self) -> usize {
        (self.window_len as f64 * (1.0 - self.overlap)).round() as usize
    }

    pub fn nfft(&self) -> usize {
        self.window_len * self.nfft_multiple
    }
}

/// Hamming-windowed, zero-padded STFT.
///
/// Each column holds the one-sided energy distribution of one frame:
/// `|X_k|^2 / nfft`, doubled for bins that have a mirrored negative-frequency
/// partner, so a column sums to the windowed frame energy. Frame times are
/// the analog times of the frame centers.
pub fn spectrogram(sig: &Signal, settings: SpectrogramSettings) -> Result<TimeFrequencyGrid> {
    let SpectrogramSettings {
        window_len,
        overlap,
        nfft_multiple,
    } = settings;
    if window_len == 0 || nfft_multiple == 0 {
        return Err(invalid("window length and FFT multiple must be positive"));
    }
    if window_len > sig.len() {
        return Err(invalid(format!(
            "window length {window_len} exceeds the record length {}",
            sig.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(invalid("overlap fraction must lie in [0, 1)"));
    }
    let hop = settings.hop();
    if hop == 0 {
        return Err(invalid("overlap leaves a hop of zero samples"));
    }
    let nfft = settings.nfft();
    let nbins = nfft / 2 + 1;
    let window = hamming(window_len);
    let starts: Vec<usize> = (0..=sig.len() - window_len).step_by(hop).collect();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let x = sig.samples();
    let columns: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
            for k in 0..window_len {
                buf[k].re = x[s + k] * window[k];
            }
            fft.process(&mut buf);
            (0..nbins)
                .map(|k| {
                    let mirrored = k != 0 && !(nfft.is_multiple_of(2) && k == nfft / 2);
                    let p = buf[k].norm_sqr() / nfft as f64;
                    if mirrored {
                        2.0 * p
                    } else {
                        p
                    }
                })
                .collect()
        })
        .collect();

    let mut values = Array2::zeros((nbins, starts.len()));
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[[i, j]] = *v;
        }
    }
    let fs = sig.fs();
    let center = (window_len as f64 - 1.0) / 2.0;
    Ok(TimeFrequencyGrid {
        times: starts
            .iter()
            .map(|&s| sig.t0() + (s as f64 + center) * sig.ts())
            .collect(),
        freqs: (0..nbins).map(|k| k as f64 * fs / nfft as f64).collect(),
        values,
        freq_resolution: fs / nfft as f64,
    })
}

/// Centered mean of squares over `2M + 1` samples.
///
/// Windows that run past either end are truncated and divided by the number
/// of samples actually inside, so the output has the input's length.
pub fn sliding_variance(series: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if 2 * m + 1 > n {
        return Err(invalid(format!(
            "window of {} samples is longer than the series ({n})",
            2 * m + 1
        )));
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in series {
        acc += v * v;
        prefix.push(acc);
    }
    Ok((0..n)
        .map(|t| {
            let lo = t.saturating_sub(m);
            let hi = (t + m).min(n - 1);
            if m == 0 {
                return series[t] * series[t];
            }
            // direct sum for short windows keeps rounding tight
            let s = if hi - lo < 64 {
                series[lo..=hi].iter().map(|v| v * v).sum::<f64>()
            } else {
                prefix[hi + 1] - prefix[lo]
            };
            (s / (hi - lo + 1) as f64).max(0.0)
        })
        .collect())
}
