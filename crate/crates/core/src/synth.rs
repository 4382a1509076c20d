//! Deterministic synthetic vibration.
//!
//! [`gen_rig_signal`] produces a rotating-machine-like signal: shaft-locked
//! harmonics and fixed tones over Gaussian noise, optionally with an
//! inner-race fault modelled as a train of exponentially decaying resonant
//! bursts. [`gen_from_dictionary`] runs the sparse signal model forward from
//! a known dictionary and event list.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::encoder::Event;
use crate::error::{Error, Result};
use crate::signal::{window_rng, Signal};

/// Ball-pass frequency of the inner race for a 6205 deep-groove bearing, in
/// multiples of the shaft frequency.
pub const BPFI_ORDER: f64 = 5.4152;

/// Shaft speeds of the four load cases (0 to 3 HP), Hz.
pub const LOAD_CASE_SHAFT_HZ: [f64; 4] =
    [1797.0 / 60.0, 1772.0 / 60.0, 1750.0 / 60.0, 1730.0 / 60.0];

/// Burst jitter as a fraction of the fault period (uniform, +/-).
const BURST_JITTER: f64 = 0.005;
/// Bursts are truncated after this many decay constants.
const BURST_SPAN_TAUS: f64 = 10.0;

const STREAM_PHASES: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_FAULT: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    pub impulse_rate_hz: f64,
    pub resonance_hz: f64,
    pub decay_tau_s: f64,
    /// Peak amplitude of each burst.
    pub severity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    pub sample_rate: u32,
    pub shaft_hz: f64,
    /// Amplitudes of the 1x, 2x, 3x, ... shaft harmonics.
    #[serde(default)]
    pub shaft_harmonics: Vec<f64>,
    /// Fixed `(frequency Hz, amplitude)` tones.
    #[serde(default)]
    pub tone_components: Vec<(f64, f64)>,
    pub noise_sigma: f64,
    #[serde(default)]
    pub fault: Option<FaultConfig>,
    pub seed: u64,
}

impl RigConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let nyquist = f64::from(self.sample_rate) / 2.0;
        if !(self.shaft_hz >= 0.0) {
            return Err(Error::invalid("shaft frequency must be non-negative"));
        }
        for (h, &amp) in self.shaft_harmonics.iter().enumerate() {
            let f = (h + 1) as f64 * self.shaft_hz;
            if !(amp >= 0.0) || f >= nyquist {
                return Err(Error::invalid(format!(
                    "shaft harmonic {} invalid ({f} Hz, amp {amp})",
                    h + 1
                )));
            }
        }
        for &(f, amp) in &self.tone_components {
            if !(f >= 0.0 && f < nyquist) || !(amp >= 0.0) {
                return Err(Error::invalid(format!("tone ({f} Hz, amp {amp}) invalid")));
            }
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::invalid("noise sigma must be non-negative"));
        }
        if let Some(f) = &self.fault {
            if !(f.impulse_rate_hz > 0.0) || !(f.decay_tau_s > 0.0) || !(f.severity >= 0.0) {
                return Err(Error::invalid(
                    "fault rate and decay must be positive, severity non-negative",
                ));
            }
            if !(f.resonance_hz >= 0.0 && f.resonance_hz < nyquist) {
                return Err(Error::invalid("fault resonance must lie below Nyquist"));
            }
        }
        Ok(())
    }
}

pub fn gen_rig_signal(config: &RigConfig, duration_s: f64) -> Result<Signal> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::invalid("duration must be positive"));
    }
    let n = (duration_s * f64::from(config.sample_rate)).round() as usize;
    if n == 0 {
        return Err(Error::invalid("duration shorter than one sample"));
    }
    gen_rig_samples(config, n)
}

/// [`gen_rig_signal`] with the length given in samples.
pub fn gen_rig_samples(config: &RigConfig, n: usize) -> Result<Signal> {
    config.validate()?;
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    let fs = f64::from(config.sample_rate);
    let mut x = vec![0.0; n];

    let mut phase_rng = window_rng(config.seed, STREAM_PHASES);
    let tones = config
        .shaft_harmonics
        .iter()
        .enumerate()
        .map(|(h, &a)| ((h + 1) as f64 * config.shaft_hz, a))
        .chain(config.tone_components.iter().copied());
    for (f, amp) in tones {
        let phase = phase_rng.gen_range(0.0..2.0 * PI);
        let w = 2.0 * PI * f / fs;
        for (i, v) in x.iter_mut().enumerate() {
            *v += amp * (w * i as f64 + phase).sin();
        }
    }

    if config.noise_sigma > 0.0 {
        let normal =
            Normal::new(0.0, config.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = window_rng(config.seed, STREAM_NOISE);
        for v in &mut x {
            *v += normal.sample(&mut rng);
        }
    }

    if let Some(fault) = &config.fault {
        add_fault_bursts(&mut x, fs, fault, config.seed);
    }
    Signal::new(x, config.sample_rate)
}

fn add_fault_bursts(x: &mut [f64], fs: f64, fault: &FaultConfig, seed: u64) {
    let mut rng = window_rng(seed, STREAM_FAULT);
    let period = 1.0 / fault.impulse_rate_hz;
    let duration = x.len() as f64 / fs;
    let span = BURST_SPAN_TAUS * fault.decay_tau_s;
    let w = 2.0 * PI * fault.resonance_hz;
    // Start one burst early so the window opens mid-ring-down like a cut
    // from a continuous recording.
    let t0 = rng.gen_range(0.0..period) - period;
    let mut j = 0u64;
    loop {
        let onset = t0 + j as f64 * period + rng.gen_range(-BURST_JITTER..BURST_JITTER) * period;
        j += 1;
        if onset >= duration {
            break;
        }
        let first = (onset * fs).ceil().max(0.0) as usize;
        let last = (((onset + span) * fs).floor() as isize).min(x.len() as isize - 1);
        if last < first as isize {
            continue;
        }
        for (i, v) in x.iter_mut().enumerate().take(last as usize + 1).skip(first) {
            let dt = i as f64 / fs - onset;
            *v += fault.severity * (-dt / fault.decay_tau_s).exp() * (w * dt).sin();
        }
    }
}

/// `x(t) = noise(t) + sum_i a_i phi_{m(i)}(t - tau_i)` with i.i.d. Gaussian noise.
pub fn gen_from_dictionary(
    dictionary: &Dictionary,
    events: &[Event],
    noise_sigma: f64,
    length: usize,
    sample_rate: u32,
    seed: u64,
) -> Result<Signal> {
    let mut x = gaussian_noise(length, noise_sigma, seed)?;
    for e in events {
        let atom = dictionary
            .atom(e.atom_id)
            .ok_or_else(|| Error::invalid(format!("unknown atom id {}", e.atom_id)))?;
        if e.shift + atom.len() > length {
            return Err(Error::invalid(format!(
                "event at shift {} does not fit in {length} samples",
                e.shift
            )));
        }
        for (v, w) in x[e.shift..e.shift + atom.len()]
            .iter_mut()
            .zip(atom.waveform())
        {
            *v += e.amplitude * w;
        }
    }
    Signal::new(x, sample_rate)
}

/// The noise realization [`gen_from_dictionary`] adds for `seed`.
pub fn gaussian_noise(length: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::EmptySignal);
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("noise sigma must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; length]);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = window_rng(seed, STREAM_NOISE);
    Ok((0..length).map(|_| normal.sample(&mut rng)).collect())
}

/// Named operating conditions of the synthetic rig.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Baseline,
    Ir7,
    Ir14,
}

impl Preset {
    pub fn from_label(label: &str) -> Option<Self> {
        match label.to_ascii_lowercase().as_str() {
            "bl" | "baseline" => Some(Preset::Baseline),
            "ir7" => Some(Preset::Ir7),
            "ir14" => Some(Preset::Ir14),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::Baseline => "BL",
            Preset::Ir7 => "IR7",
            Preset::Ir14 => "IR14",
        }
    }

    pub fn fault(self, shaft_hz: f64) -> Option<FaultConfig> {
        let rate = BPFI_ORDER * shaft_hz;
        match self {
            Preset::Baseline => None,
            Preset::Ir7 => Some(FaultConfig {
                impulse_rate_hz: rate,
                resonance_hz: 3300.0,
                decay_tau_s: 1.0e-3,
                severity: 1.5,
            }),
            Preset::Ir14 => Some(FaultConfig {
                impulse_rate_hz: rate,
                resonance_hz: 2400.0,
                decay_tau_s: 1.2e-3,
                severity: 3.0,
            }),
        }
    }

    pub fn rig(self, shaft_hz: f64, seed: u64) -> RigConfig {
        RigConfig {
            sample_rate: 12_000,
            shaft_hz,
            shaft_harmonics: vec![0.1, 0.05],
            // gear-mesh-like tones keep the healthy machine below ~1 kHz
            tone_components: vec![(590.0, 0.6), (1020.0, 0.4)],
            noise_sigma: 0.03,
            fault: self.fault(shaft_hz),
            seed,
        }
    }
}
