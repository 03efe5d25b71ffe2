//! FIR design and zero-phase application used by decimation.

use std::f64::consts::PI;

use crate::signal::hamming;

/// Hamming-windowed sinc low-pass of the given order (order + 1 taps).
///
/// `cutoff` is in cycles per sample (0 < cutoff < 0.5). Taps are scaled to
/// unit DC gain.
pub fn lowpass_fir(order: usize, cutoff: f64) -> Vec<f64> {
    let n = order + 1;
    let w = hamming(n);
    let mid = order as f64 / 2.0;
    let mut h: Vec<f64> = (0..n)
        .map(|k| {
            let m = k as f64 - mid;
            let ideal = if m == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * m).sin() / (PI * m)
            };
            ideal * w[k]
        })
        .collect();
    let dc: f64 = h.iter().sum();
    for v in &mut h {
        *v /= dc;
    }
    h
}

/// Causal FIR filtering with zero initial state.
fn lfilter(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, h) in taps.iter().enumerate().take(n + 1) {
            acc += h * x[n - k];
        }
        *out = acc;
    }
    y
}

/// Forward-backward FIR filtering with odd reflection padding at both ends.
pub fn filtfilt_fir(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = (3 * taps.len()).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    let mut fwd = lfilter(taps, &ext);
    fwd.reverse();
    let mut back = lfilter(taps, &fwd);
    back.reverse();
    back[pad..pad + n].to_vec()
}
