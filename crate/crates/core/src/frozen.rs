//! Frozen-time spectra and modal tracks.
//!
//! At every instant the time-varying model is treated as a stationary one
//! with the coefficients of that instant. Frequencies are stored in Hz.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result, TvError};
use crate::model::ParameterTrajectory;
use crate::roots::monic_roots;

/// Poles at least this close to the unit circle are marked marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-12;

/// Frozen PSD (and FRF magnitude for TARX) over a frequency grid.
/// Matrices are `freqs.len() x times.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenGrid {
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    pub psd: Array2<f64>,
    pub frf_mag: Option<Array2<f64>>,
    /// `(freq index, time index)` where the AR polynomial vanished; the
    /// corresponding values are `+inf`.
    pub singular: Vec<(usize, usize)>,
}

/// `freqs` evenly spaced from 0 to Nyquist inclusive.
pub fn nyquist_grid(ts: f64, count: usize) -> Vec<f64> {
    let nyq = 0.5 / ts;
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|k| nyq * k as f64 / (count - 1) as f64).collect(),
    }
}

fn poly_at(coeffs: impl Iterator<Item = f64>, z_inv: Complex64, leading_one: bool) -> Complex64 {
    // sum c_i z^{-i}, with c_0 = 1 when leading_one
    let mut acc = if leading_one {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    let mut pow = if leading_one {
        z_inv
    } else {
        Complex64::new(1.0, 0.0)
    };
    for c in coeffs {
        acc += pow * c;
        pow *= z_inv;
    }
    acc
}

fn check_grid(traj: &ParameterTrajectory, freqs: &[f64]) -> Result<()> {
    let nyq = 0.5 / traj.ts();
    if freqs.iter().any(|f| !(*f >= 0.0 && *f <= nyq * (1.0 + 1e-12))) {
        return Err(invalid(format!("frequency grid must lie within [0, {nyq}] Hz")));
    }
    Ok(())
}

fn compute(traj: &ParameterTrajectory, freqs: &[f64]) -> Result<FrozenGrid> {
    check_grid(traj, freqs)?;
    let s = traj.structure();
    let ts = traj.ts();
    let n = traj.len();
    let with_x = s.has_x();
    let z_inv: Vec<Complex64> = freqs
        .iter()
        .map(|f| Complex64::from_polar(1.0, -2.0 * PI * f * ts))
        .collect();

    // per instant: (|B/A|^2 column, singular rows)
    let cols: Vec<(Vec<f64>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = traj.theta().row(i);
            let mut gains = Vec::with_capacity(freqs.len());
            let mut bad = Vec::new();
            for (k, zi) in z_inv.iter().enumerate() {
                let a = poly_at(row.iter().take(s.na).copied(), *zi, true);
                let b = if with_x {
                    poly_at(row.iter().skip(s.na).copied(), *zi, false)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                if a.norm() == 0.0 {
                    gains.push(f64::INFINITY);
                    bad.push(k);
                } else {
                    gains.push((b / a).norm_sqr());
                }
            }
            (gains, bad)
        })
        .collect();

    let mut psd = Array2::zeros((freqs.len(), n));
    let mut frf = with_x.then(|| Array2::zeros((freqs.len(), n)));
    let mut singular = Vec::new();
    for (j, (gains, bad)) in cols.into_iter().enumerate() {
        let var = traj.sigma2e()[j];
        for (k, g) in gains.into_iter().enumerate() {
            psd[[k, j]] = if g.is_infinite() { f64::INFINITY } else { g * var };
            if let Some(f) = frf.as_mut() {
                f[[k, j]] = if g.is_infinite() {
                    f64::INFINITY
                } else {
                    g.sqrt() * var.sqrt()
                };
            }
        }
        singular.extend(bad.into_iter().map(|k| (k, j)));
    }
    Ok(FrozenGrid {
        times: traj.times(),
        freqs: freqs.to_vec(),
        psd,
        frf_mag: frf,
        singular,
    })
}

/// `S(f, t) = |B(e^{-jwTs}, t) / A(e^{-jwTs}, t)|^2 * sigma2e[t]`, with
/// `B = 1` for TAR models. For TARX models the FRF magnitude is filled too.
pub fn frozen_psd(traj: &ParameterTrajectory, freqs: &[f64]) -> Result<FrozenGrid> {
    compute(traj, freqs)
}

/// `|H(f, t)| = |B / A| * sigma_e[t]`; only defined for TARX models.
pub fn frozen_frf(traj: &ParameterTrajectory, freqs: &[f64]) -> Result<FrozenGrid> {
    if !traj.structure().has_x() {
        return Err(TvError::UnsupportedModel(
            "the frozen FRF needs a TARX model with an X polynomial".into(),
        ));
    }
    compute(traj, freqs)
}

/// Natural frequency (Hz) and damping ratio of one discrete pole.
///
/// `w_n = |ln z| / Ts` and `zeta = -cos(arg(ln z))`.
pub fn pole_to_mode(z: Complex64, ts: f64) -> (f64, f64) {
    let l = z.ln();
    let wn = l.norm() / ts;
    let zeta = -(l.arg()).cos();
    (wn / (2.0 * PI), zeta)
}

/// Discrete pole of a continuous mode with natural frequency `fn_hz` and
/// damping ratio `zeta < 1`.
pub fn mode_to_pole(fn_hz: f64, zeta: f64, ts: f64) -> Complex64 {
    let wn = 2.0 * PI * fn_hz;
    let s = Complex64::new(-zeta * wn, wn * (1.0 - zeta * zeta).sqrt());
    (s * ts).exp()
}

/// AR coefficients `[a_1 .. a_n]` of the monic polynomial with the given
/// poles (complex poles are paired with their conjugates).
pub fn poles_to_ar(poles: &[Complex64]) -> Vec<f64> {
    let mut expanded: Vec<Complex64> = Vec::new();
    for p in poles {
        expanded.push(*p);
        if p.im != 0.0 {
            expanded.push(p.conj());
        }
    }
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for p in expanded {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * p;
        }
        c = next;
    }
    c.into_iter().skip(1).map(|v| v.re).collect()
}

/// Modal content of the frozen AR polynomial over time.
///
/// Matrices are `modes x times`; each column lists the modes of one instant
/// ascending by frequency, padded with NaN when an instant has fewer modes
/// than the widest one.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTrack {
    pub times: Vec<f64>,
    pub frequencies: Array2<f64>,
    pub dampings: Array2<f64>,
    pub pole_magnitudes: Array2<f64>,
    /// Pole lies on the real axis (non-oscillatory).
    pub real_pole: Array2<bool>,
    /// Some pole of the instant has modulus above `1 - MARGINAL_TOLERANCE`.
    pub marginal: Vec<bool>,
    /// Root finding failed at the instant; its column is all NaN.
    pub failed: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    freq: f64,
    zeta: f64,
    mag: f64,
    real: bool,
}

fn instant_modes(ar: &[f64], ts: f64) -> Option<Vec<Mode>> {
    let roots = monic_roots(ar)?;
    let mut modes: Vec<Mode> = roots
        .into_iter()
        .filter(|z| z.im >= 0.0)
        .map(|z| {
            let (freq, zeta) = pole_to_mode(z, ts);
            Mode {
                freq,
                zeta,
                mag: z.norm(),
                real: z.im == 0.0,
            }
        })
        .collect();
    modes.sort_by(|a, b| a.freq.total_cmp(&b.freq).then(a.zeta.total_cmp(&b.zeta)));
    Some(modes)
}

/// Roots of the frozen AR polynomial at each instant, mapped to natural
/// frequency and damping. Conjugate pairs appear once.
pub fn frozen_modes(traj: &ParameterTrajectory) -> Result<ModalTrack> {
    let s = traj.structure();
    if s.na == 0 {
        return Err(invalid("modal analysis needs na >= 1"));
    }
    let ts = traj.ts();
    let per: Vec<Option<Vec<Mode>>> = (1..=traj.len())
        .into_par_iter()
        .map(|t| instant_modes(&traj.ar(t), ts))
        .collect();
    let rows = per
        .iter()
        .map(|m| m.as_ref().map_or(0, Vec::len))
        .max()
        .unwrap_or(0);
    let n = traj.len();
    let mut frequencies = Array2::from_elem((rows, n), f64::NAN);
    let mut dampings = Array2::from_elem((rows, n), f64::NAN);
    let mut pole_magnitudes = Array2::from_elem((rows, n), f64::NAN);
    let mut real_pole = Array2::from_elem((rows, n), false);
    let mut marginal = vec![false; n];
    let mut failed = vec![false; n];
    for (j, modes) in per.into_iter().enumerate() {
        match modes {
            None => failed[j] = true,
            Some(modes) => {
                for (i, m) in modes.iter().enumerate() {
                    frequencies[[i, j]] = m.freq;
                    dampings[[i, j]] = m.zeta;
                    pole_magnitudes[[i, j]] = m.mag;
                    real_pole[[i, j]] = m.real;
                }
                marginal[j] = modes.iter().any(|m| m.mag > 1.0 - MARGINAL_TOLERANCE);
            }
        }
    }
    Ok(ModalTrack {
        times: traj.times(),
        frequencies,
        dampings,
        pole_magnitudes,
        real_pole,
        marginal,
        failed,
    })
}

impl ModalTrack {
    pub fn mode_count(&self) -> usize {
        self.frequencies.nrows()
    }

    /// Reorders rows so each track follows the nearest frequency of the
    /// previous instant (greedy matching on |df|). Returns
    /// `(frequencies, dampings)` in track order.
    pub fn continuous_tracks(&self) -> (Array2<f64>, Array2<f64>) {
        let (rows, n) = self.frequencies.dim();
        let mut f_out = Array2::from_elem((rows, n), f64::NAN);
        let mut z_out = Array2::from_elem((rows, n), f64::NAN);
        let mut prev: Vec<f64> = vec![f64::NAN; rows];
        for j in 0..n {
            let cur: Vec<usize> = (0..rows)
                .filter(|&i| !self.frequencies[[i, j]].is_nan())
                .collect();
            let mut slot_of: Vec<Option<usize>> = vec![None; rows];
            let mut used_slot = vec![false; rows];
            let mut used_mode = vec![false; rows];
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (slot, pf) in prev.iter().enumerate() {
                if pf.is_nan() {
                    continue;
                }
                for &m in &cur {
                    pairs.push(((self.frequencies[[m, j]] - pf).abs(), slot, m));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            for (_, slot, m) in pairs {
                if !used_slot[slot] && !used_mode[m] {
                    used_slot[slot] = true;
                    used_mode[m] = true;
                    slot_of[m] = Some(slot);
                }
            }
            // unmatched modes take the lowest free slots in frequency order
            for &m in &cur {
                if slot_of[m].is_none() {
                    let free = (0..rows).find(|&s| !used_slot[s]).expect("free slot");
                    used_slot[free] = true;
                    slot_of[m] = Some(free);
                }
            }
            let mut next = vec![f64::NAN; rows];
            for &m in &cur {
                let slot = slot_of[m].expect("assigned");
                f_out[[slot, j]] = self.frequencies[[m, j]];
                z_out[[slot, j]] = self.dampings[[m, j]];
                next[slot] = self.frequencies[[m, j]];
            }
            // keep the last known frequency for slots that went empty
            for s in 0..rows {
                if next[s].is_nan() {
                    next[s] = prev[s];
                }
            }
            prev = next;
        }
        (f_out, z_out)
    }
}
