//! Synthetic temperature-dependent guided-wave records.
//!
//! Each wave packet is a delayed, scaled copy of the actuation. Group
//! velocities differ per mode; there is no intra-packet dispersion. Boundary
//! echoes add `2 * plate_length` of path per bounce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{decimate, tone_burst, Signal};

/// Parameters of the synthetic plate response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub plate_length: f64,
    pub propagation_distance: f64,
    pub mode_velocities: Vec<f64>,
    pub mode_amplitudes: Vec<f64>,
    pub reflection_count: u32,
    pub reflection_decay: f64,
    pub temperature: f64,
    pub temp_ref: f64,
    pub delay_sensitivity: f64,
    pub amplitude_sensitivity: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Aluminum-plate-like two-mode setup: S0 and A0 packets over 152.4 mm
    /// on a 304.8 mm plate, one boundary echo per mode.
    pub fn plate_analog(temperature: f64) -> Self {
        SynthConfig {
            plate_length: 0.3048,
            propagation_distance: 0.1524,
            mode_velocities: vec![4600.0, 2540.0],
            mode_amplitudes: vec![0.1, 0.25],
            reflection_count: 1,
            reflection_decay: 0.6,
            temperature,
            temp_ref: 25.0,
            delay_sensitivity: 1e-4,
            amplitude_sensitivity: -2e-3,
            noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_velocities.is_empty() {
            return Err(invalid("at least one wave packet is required"));
        }
        if self.mode_velocities.len() != self.mode_amplitudes.len() {
            return Err(invalid(format!(
                "{} mode velocities but {} mode amplitudes",
                self.mode_velocities.len(),
                self.mode_amplitudes.len()
            )));
        }
        if self.mode_velocities.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("mode velocities must be positive"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(invalid("noise_std must be nonnegative"));
        }
        if !(self.reflection_decay > 0.0 && self.reflection_decay <= 1.0) {
            return Err(invalid("reflection_decay must lie in (0, 1]"));
        }
        if !(self.plate_length >= 0.0 && self.propagation_distance >= 0.0) {
            return Err(invalid("plate length and propagation distance must be nonnegative"));
        }
        Ok(())
    }

    /// Temperature scaling of packet amplitude.
    pub fn amplitude_factor(&self) -> f64 {
        1.0 + self.amplitude_sensitivity * (self.temperature - self.temp_ref)
    }

    /// Arrival delay in seconds of mode `p` after `bounce` boundary echoes.
    pub fn arrival(&self, p: usize, bounce: u32) -> f64 {
        let path = self.propagation_distance + 2.0 * bounce as f64 * self.plate_length;
        path / self.mode_velocities[p]
            * (1.0 + self.delay_sensitivity * (self.temperature - self.temp_ref))
    }

    /// The same plate at the reference temperature without noise.
    pub fn reference(&self) -> Self {
        SynthConfig {
            temperature: self.temp_ref,
            noise_std: 0.0,
            ..self.clone()
        }
    }

    pub fn at_temperature(&self, temperature: f64) -> Self {
        SynthConfig {
            temperature,
            ..self.clone()
        }
    }
}

/// Linear interpolation of a zero-extended sequence at fractional index `u`.
fn sample_at(x: &[f64], u: f64) -> f64 {
    let i = u.floor();
    let frac = u - i;
    let i = i as i64;
    let get = |k: i64| -> f64 {
        if k < 0 || k as usize >= x.len() {
            0.0
        } else {
            x[k as usize]
        }
    };
    get(i) * (1.0 - frac) + get(i + 1) * frac
}

/// Superposes delayed, scaled actuation copies for every packet and echo,
/// then adds seeded white Gaussian noise.
///
/// The output shares the actuation's sampling interval and lasts
/// `round(duration / ts)` samples.
pub fn synth_guided_wave(cfg: &SynthConfig, actuation: &Signal, duration: f64) -> Result<Signal> {
    cfg.validate()?;
    let ts = actuation.ts();
    let n = (duration / ts).round() as usize;
    if n == 0 {
        return Err(invalid("duration is shorter than one sample"));
    }
    let latest = (0..cfg.mode_velocities.len())
        .map(|p| cfg.arrival(p, cfg.reflection_count))
        .fold(0.0f64, f64::max);
    if latest > duration {
        return Err(invalid(format!(
            "duration {duration:e} s does not cover the latest arrival at {latest:e} s"
        )));
    }

    let act = actuation.samples();
    let gain_t = cfg.amplitude_factor();
    let mut out = vec![0.0; n];
    for p in 0..cfg.mode_velocities.len() {
        let mut gain = cfg.mode_amplitudes[p] * gain_t;
        for bounce in 0..=cfg.reflection_count {
            let delay = cfg.arrival(p, bounce) / ts;
            // support of the delayed copy in output samples
            let first = delay.floor().max(0.0) as usize;
            let last = ((delay + act.len() as f64).ceil() as usize).min(n);
            for (k, o) in out.iter_mut().enumerate().take(last).skip(first) {
                *o += gain * sample_at(act, k as f64 - delay);
            }
            gain *= cfg.reflection_decay;
        }
    }

    if cfg.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, cfg.noise_std).map_err(|e| invalid(e.to_string()))?;
        for o in &mut out {
            *o += normal.sample(&mut rng);
        }
    }
    Signal::with_start(out, ts, actuation.t0())
}

/// Tone-burst acquisition chain: synthesize at a high raw rate, decimate,
/// then drop the time-of-flight part of the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub cycles: u32,
    pub center_freq: f64,
    pub amplitude: f64,
    pub raw_rate: f64,
    pub decimation: usize,
    pub duration: f64,
    /// First kept sample (0-based, after decimation).
    pub crop_start: usize,
    pub crop_len: Option<usize>,
}

impl Default for Acquisition {
    /// 5-cycle 250 kHz burst sampled at 24 MHz, decimated by 12 to 2 MHz,
    /// cropped to 601 samples starting at 30 us.
    fn default() -> Self {
        Acquisition {
            cycles: 5,
            center_freq: 250e3,
            amplitude: 45.0,
            raw_rate: 24e6,
            decimation: 12,
            duration: 340e-6,
            crop_start: 60,
            crop_len: Some(601),
        }
    }
}

impl Acquisition {
    pub fn actuation(&self) -> Result<Signal> {
        tone_burst(self.cycles, self.center_freq, self.amplitude, 1.0 / self.raw_rate)
    }

    fn finish(&self, raw: &Signal) -> Result<Signal> {
        let dec = decimate(raw, self.decimation)?;
        dec.crop(self.crop_start, self.crop_len)
    }

    /// Received record for `cfg`.
    pub fn record(&self, cfg: &SynthConfig) -> Result<Signal> {
        let act = self.actuation()?;
        let raw = synth_guided_wave(cfg, &act, self.duration)?;
        self.finish(&raw)
    }

    /// Exogenous channel for TARX identification: the same plate at its
    /// reference temperature, noise free, through the same chain.
    pub fn excitation(&self, cfg: &SynthConfig) -> Result<Signal> {
        self.record(&cfg.reference())
    }
}
