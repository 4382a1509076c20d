//! Hebbian dictionary adaptation.
//!
//! After a window has been encoded, every activated atom moves along the sum
//! of its amplitude-weighted residual slices, scaled by the learning rate over
//! the residual variance, and is then renormalized:
//!
//! ```text
//! phi_m <- normalize(phi_m + (eta / sigma^2) * sum_{i: m(i) = m} a_i * r[tau_i .. tau_i + len_m])
//! ```
//!
//! where `r` is the final matching-pursuit residual of the window. Atoms that
//! fired no events are left untouched.

use serde::{Deserialize, Serialize};

use crate::dictionary::{l2_norm, normalized, Dictionary};
use crate::encoder::{encode, EncodeResult, Event, StopCondition};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Tuned for 5 s windows at 12 kHz: the step is not normalized by the event
/// count, so shorter or sparser windows tolerate a larger rate.
pub const DEFAULT_LEARNING_RATE: f64 = 1e-6;
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub learning_rate: f64,
    pub variance_floor: f64,
    pub renormalize: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            renormalize: true,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        // eta = 0 is allowed: it is the no-learning null run.
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.variance_floor > 0.0) {
            return Err(Error::invalid("variance floor must be positive"));
        }
        Ok(())
    }
}

/// Population variance of the residual, bounded below by `floor`.
pub fn residual_variance(residual: &Signal, floor: f64) -> f64 {
    let x = residual.samples();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.max(floor)
}

/// Per-atom sums of amplitude-weighted residual slices.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientAccumulator {
    gradients: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl GradientAccumulator {
    pub fn zeros(dictionary: &Dictionary) -> Self {
        Self {
            gradients: dictionary
                .atoms()
                .iter()
                .map(|a| vec![0.0; a.len()])
                .collect(),
            counts: vec![0; dictionary.len()],
        }
    }

    pub fn gradient(&self, atom: usize) -> &[f64] {
        &self.gradients[atom]
    }

    pub fn count(&self, atom: usize) -> usize {
        self.counts[atom]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

pub fn accumulate(
    events: &[Event],
    original: &Signal,
    residual: &Signal,
    dictionary: &Dictionary,
) -> Result<GradientAccumulator> {
    if original.len() != residual.len() {
        return Err(Error::invalid("original and residual lengths differ"));
    }
    let r = residual.samples();
    let mut acc = GradientAccumulator::zeros(dictionary);
    for e in events {
        let len = dictionary
            .atom(e.atom_id)
            .ok_or_else(|| Error::invalid(format!("event references unknown atom {}", e.atom_id)))?
            .len();
        if e.shift + len > r.len() {
            return Err(Error::invalid(format!(
                "event shift {} leaves the {}-sample residual",
                e.shift,
                r.len()
            )));
        }
        for (g, v) in acc.gradients[e.atom_id]
            .iter_mut()
            .zip(&r[e.shift..e.shift + len])
        {
            *g += e.amplitude * v;
        }
        acc.counts[e.atom_id] += 1;
    }
    Ok(acc)
}

/// What one update did to each atom.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateReport {
    /// `|phi_new - phi_old|` per atom; zero for untouched atoms.
    pub delta_norms: Vec<f64>,
    /// Atoms whose update was skipped because it was not finite or collapsed
    /// the waveform to zero.
    pub rejected: Vec<usize>,
}

pub fn apply_update(
    dictionary: &mut Dictionary,
    grad: &GradientAccumulator,
    residual_var: f64,
    config: &LearnConfig,
) -> Result<UpdateReport> {
    config.validate()?;
    if !(residual_var >= config.variance_floor) {
        return Err(Error::invalid(format!(
            "residual variance {residual_var} is below the floor {}",
            config.variance_floor
        )));
    }
    let step = config.learning_rate / residual_var;
    let mut report = UpdateReport {
        delta_norms: vec![0.0; dictionary.len()],
        rejected: Vec::new(),
    };
    if step == 0.0 {
        return Ok(report);
    }
    for m in 0..dictionary.len() {
        if grad.counts[m] == 0 {
            continue;
        }
        let old = dictionary.atoms()[m].waveform();
        let moved: Vec<f64> = old
            .iter()
            .zip(&grad.gradients[m])
            .map(|(p, g)| p + step * g)
            .collect();
        if moved.iter().any(|v| !v.is_finite()) {
            report.rejected.push(m);
            continue;
        }
        let new = if config.renormalize {
            match normalized(moved) {
                Some(w) => w,
                None => {
                    report.rejected.push(m);
                    continue;
                }
            }
        } else {
            moved
        };
        let diff: Vec<f64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
        report.delta_norms[m] = l2_norm(&diff);
        dictionary.set_waveform(m, new);
    }
    dictionary.bump_updates();
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub encoding: EncodeResult,
    pub update: UpdateReport,
    pub residual_variance: f64,
}

/// Encodes `window` with the current dictionary, then applies one update
/// from that encoding's events and final residual.
pub fn learn_step(
    window: &Signal,
    dictionary: &mut Dictionary,
    stop: &StopCondition,
    config: &LearnConfig,
) -> Result<StepOutcome> {
    let encoding = encode(window, dictionary, stop)?;
    let var = residual_variance(&encoding.residual, config.variance_floor);
    let grad = accumulate(&encoding.events, window, &encoding.residual, dictionary)?;
    let update = apply_update(dictionary, &grad, var, config)?;
    Ok(StepOutcome {
        encoding,
        update,
        residual_variance: var,
    })
}
