//! Drift and feature metrics of an evolving dictionary.
//!
//! * evolution rate: `1 - max_lag |ncc(phi_now, phi_past)|`, where `phi_past`
//!   is the same atom `delta` seconds of stream time earlier;
//! * center frequency: spectral centroid of the atom's zero-padded
//!   periodogram;
//! * event rate: activations per second over a trailing window.
//!
//! [`Monitor`] keeps the snapshot ring and trailing event log needed to
//! produce a [`MonitorReport`] at each reporting instant, and raises an alert
//! for an atom once its evolution rate has exceeded the threshold for
//! `alert_hold` consecutive reports.

use std::collections::VecDeque;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Atom, Snapshot};
use crate::error::{Error, Result};

/// Two stream times closer than this are the same instant.
pub const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    /// Lag between compared snapshots, seconds of stream time.
    pub delta_s: f64,
    pub report_interval_s: f64,
    pub event_rate_window_s: f64,
    pub alert_threshold: f64,
    pub alert_hold: u32,
    /// Largest relative shift scanned by the evolution rate. `None` uses a
    /// quarter of the atom length.
    pub max_lag: Option<usize>,
    /// Zero-padding factor of the periodogram behind the center frequency.
    pub psd_padding: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            delta_s: 600.0,
            report_interval_s: 5.0,
            event_rate_window_s: 1800.0,
            alert_threshold: 0.1,
            alert_hold: 2,
            max_lag: None,
            psd_padding: 8,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta_s),
            ("report interval", self.report_interval_s),
            ("event-rate window", self.event_rate_window_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.alert_hold == 0 {
            return Err(Error::invalid("alert hold must be at least one report"));
        }
        if self.psd_padding == 0 {
            return Err(Error::invalid(
                "periodogram padding factor must be at least 1",
            ));
        }
        Ok(())
    }

    fn lag_for(&self, len: usize) -> usize {
        self.max_lag.unwrap_or(len / 4).min(len.saturating_sub(1))
    }
}

/// Evolution rate with the default lag range (a quarter of the atom length).
pub fn evolution_rate(now: &Atom, past: &Atom) -> Result<f64> {
    evolution_rate_with_lag(now.waveform(), past.waveform(), now.len() / 4)
}

/// `1 - max_{|lag| <= max_lag} |sum_k now[k] past[k + lag]| / (|now| |past|)`,
/// clamped to `[0, 1]`.
///
/// Identical inputs give exactly 0, and swapping the arguments gives a
/// bit-identical result.
pub fn evolution_rate_with_lag(now: &[f64], past: &[f64], max_lag: usize) -> Result<f64> {
    if now.len() != past.len() {
        return Err(Error::invalid(format!(
            "atom length mismatch: {} vs {}",
            now.len(),
            past.len()
        )));
    }
    let len = now.len() as isize;
    let e_now: f64 = now.iter().map(|v| v * v).sum();
    let e_past: f64 = past.iter().map(|v| v * v).sum();
    if !(e_now > 0.0) || !(e_past > 0.0) {
        return Err(Error::Numeric("evolution rate of a zero-norm atom".into()));
    }
    let denom = (e_now * e_past).sqrt();
    let max_lag = (max_lag as isize).min(len - 1);
    let mut best = 0.0f64;
    for lag in -max_lag..=max_lag {
        // Iterate in ascending `now` index for lag >= 0 and ascending `past`
        // index for lag < 0 so that swapping arguments sums identical products
        // in identical order.
        let s: f64 = if lag >= 0 {
            let l = lag as usize;
            now[..now.len() - l]
                .iter()
                .zip(&past[l..])
                .map(|(a, b)| a * b)
                .sum()
        } else {
            let l = (-lag) as usize;
            past[..past.len() - l]
                .iter()
                .zip(&now[l..])
                .map(|(b, a)| a * b)
                .sum()
        };
        best = best.max(s.abs());
    }
    Ok(1.0 - (best / denom).min(1.0))
}

/// Spectral centroid in Hz with the default 8x zero padding.
pub fn center_frequency(atom: &Atom, sample_rate: u32) -> Result<f64> {
    center_frequency_padded(atom.waveform(), sample_rate, 8)
}

/// `sum f P(f) / sum P(f)` over the one-sided periodogram of `waveform`
/// zero-padded to `padding * len` samples.
pub fn center_frequency_padded(waveform: &[f64], sample_rate: u32, padding: usize) -> Result<f64> {
    if waveform.is_empty() || padding == 0 {
        return Err(Error::invalid("empty waveform or zero padding"));
    }
    let size = waveform.len() * padding;
    let mut buf: Vec<Complex<f64>> = waveform
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let half = size / 2;
    let nyquist_bin = size % 2 == 0;
    let bin_hz = f64::from(sample_rate) / size as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, c) in buf[..=half].iter().enumerate() {
        // interior bins carry their negative-frequency twin
        let w = if k == 0 || (nyquist_bin && k == half) {
            1.0
        } else {
            2.0
        };
        let p = w * c.norm_sqr();
        num += k as f64 * bin_hz * p;
        den += p;
    }
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Numeric(
            "center frequency of a zero-energy atom".into(),
        ));
    }
    Ok(num / den)
}

/// An activation placed on the stream clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedEvent {
    pub time: f64,
    pub atom_id: usize,
}

/// Events per second for each atom over `(now - window_s, now]`.
pub fn event_rate(
    events: &[TimedEvent],
    n_atoms: usize,
    now: f64,
    window_s: f64,
) -> Result<Vec<f64>> {
    if !(window_s > 0.0) {
        return Err(Error::invalid("event-rate window must be positive"));
    }
    let mut counts = vec![0usize; n_atoms];
    let start = now - window_s;
    for e in events {
        if e.time > start && e.time <= now {
            let c = counts
                .get_mut(e.atom_id)
                .ok_or_else(|| Error::invalid(format!("event for unknown atom {}", e.atom_id)))?;
            *c += 1;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / window_s).collect())
}

/// Time-ordered ring of snapshots covering at least `2 * delta` of history.
#[derive(Debug, Clone, Default)]
pub struct SnapshotBuffer {
    snapshots: VecDeque<Snapshot>,
}

impl SnapshotBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, snapshot: Snapshot) -> Result<()> {
        if let Some(last) = self.snapshots.back() {
            if snapshot.stream_time() < last.stream_time() {
                return Err(Error::invalid("snapshots must arrive in stream-time order"));
            }
        }
        self.snapshots.push_back(snapshot);
        Ok(())
    }

    /// Drops snapshots older than `horizon` seconds before the newest one,
    /// keeping the newest snapshot at or before the cutoff.
    pub fn prune(&mut self, horizon: f64) {
        let Some(now) = self.latest().map(Snapshot::stream_time) else {
            return;
        };
        let cutoff = now - horizon;
        while self.snapshots.len() >= 2 && self.snapshots[1].stream_time() <= cutoff + TIME_EPS {
            self.snapshots.pop_front();
        }
    }

    pub fn latest(&self) -> Option<&Snapshot> {
        self.snapshots.back()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter()
    }

    /// Snapshot to compare against at `target`: the exact match when present
    /// (`approximate = false`), else the nearest earlier one, else the
    /// earliest available.
    pub fn at_or_before(&self, target: f64) -> Option<(&Snapshot, bool)> {
        let mut found = None;
        for s in &self.snapshots {
            if s.stream_time() <= target + TIME_EPS {
                found = Some(s);
            } else {
                break;
            }
        }
        match found {
            Some(s) => Some((s, (s.stream_time() - target).abs() > TIME_EPS)),
            None => self.snapshots.front().map(|s| (s, true)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomMetrics {
    pub evolution_rate: f64,
    pub center_frequency_hz: f64,
    pub event_rate_per_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub stream_time: f64,
    /// Stream time of the snapshot the evolution rate compared against.
    pub lag_time: f64,
    /// True when no snapshot sat exactly `delta` in the past.
    pub approximate: bool,
    pub atoms: Vec<AtomMetrics>,
    /// Atoms currently in alert.
    pub alerts: Vec<usize>,
}

pub const REPORT_CSV_HEADER: &str =
    "stream_time,atom_id,evolution_rate,center_freq_hz,event_rate,alert,approximate";

impl MonitorReport {
    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.atoms.iter().enumerate().map(move |(id, m)| {
            format!(
                "{},{id},{},{},{},{},{}",
                self.stream_time,
                m.evolution_rate,
                m.center_frequency_hz,
                m.event_rate_per_s,
                u8::from(self.alerts.contains(&id)),
                u8::from(self.approximate)
            )
        })
    }

    pub fn max_evolution_rate(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.evolution_rate)
            .fold(0.0, f64::max)
    }
}

/// Computes one report from the newest snapshot in `buffer`. `streaks`
/// holds the per-atom count of consecutive over-threshold reports and is
/// advanced in place.
pub fn report(
    buffer: &SnapshotBuffer,
    events: &[TimedEvent],
    config: &MonitorConfig,
    sample_rate: u32,
    streaks: &mut [u32],
) -> Result<MonitorReport> {
    let now = buffer
        .latest()
        .ok_or_else(|| Error::invalid("monitor has no snapshots"))?;
    let t = now.stream_time();
    let (past, approximate) = buffer
        .at_or_before(t - config.delta_s)
        .expect("buffer is non-empty");
    let dict_now = now.dictionary();
    let dict_past = past.dictionary();
    if dict_now.len() != dict_past.len() || streaks.len() != dict_now.len() {
        return Err(Error::invalid("atom count changed between snapshots"));
    }

    let rate_window = config.event_rate_window_s.min(t);
    let rates = if rate_window > 0.0 {
        event_rate(events, dict_now.len(), t, rate_window)?
    } else {
        vec![0.0; dict_now.len()]
    };

    let mut atoms = Vec::with_capacity(dict_now.len());
    let mut alerts = Vec::new();
    for (m, (a_now, a_past)) in dict_now.atoms().iter().zip(dict_past.atoms()).enumerate() {
        let er = evolution_rate_with_lag(
            a_now.waveform(),
            a_past.waveform(),
            config.lag_for(a_now.len()),
        )?;
        let cf = center_frequency_padded(a_now.waveform(), sample_rate, config.psd_padding)?;
        if er > config.alert_threshold {
            streaks[m] = streaks[m].saturating_add(1);
        } else {
            streaks[m] = 0;
        }
        if streaks[m] >= config.alert_hold {
            alerts.push(m);
        }
        atoms.push(AtomMetrics {
            evolution_rate: er,
            center_frequency_hz: cf,
            event_rate_per_s: rates[m],
        });
    }
    Ok(MonitorReport {
        stream_time: t,
        lag_time: past.stream_time(),
        approximate,
        atoms,
        alerts,
    })
}

/// Stateful monitor: snapshot ring, trailing event log and alert streaks.
#[derive(Debug, Clone)]
pub struct Monitor {
    config: MonitorConfig,
    sample_rate: u32,
    buffer: SnapshotBuffer,
    events: VecDeque<TimedEvent>,
    streaks: Vec<u32>,
}

impl Monitor {
    pub fn new(config: MonitorConfig, sample_rate: u32, n_atoms: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            sample_rate,
            buffer: SnapshotBuffer::new(),
            events: VecDeque::new(),
            streaks: vec![0; n_atoms],
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn buffer(&self) -> &SnapshotBuffer {
        &self.buffer
    }

    pub fn streaks(&self) -> &[u32] {
        &self.streaks
    }

    pub fn restore_streaks(&mut self, streaks: Vec<u32>) -> Result<()> {
        if streaks.len() != self.streaks.len() {
            return Err(Error::invalid(
                "alert streak count does not match atom count",
            ));
        }
        self.streaks = streaks;
        Ok(())
    }

    pub fn record_snapshot(&mut self, snapshot: Snapshot) -> Result<()> {
        self.buffer.push(snapshot)?;
        self.buffer.prune(2.0 * self.config.delta_s);
        Ok(())
    }

    /// Appends events (in time order) and forgets those that have left the
    /// event-rate window.
    pub fn record_events(&mut self, events: impl IntoIterator<Item = TimedEvent>) {
        self.events.extend(events);
        if let Some(last) = self.events.back().map(|e| e.time) {
            let cutoff = last - self.config.event_rate_window_s;
            while self.events.front().is_some_and(|e| e.time <= cutoff) {
                self.events.pop_front();
            }
        }
    }

    pub fn report(&mut self) -> Result<MonitorReport> {
        let events = self.events.make_contiguous();
        report(
            &self.buffer,
            events,
            &self.config,
            self.sample_rate,
            &mut self.streaks,
        )
    }
}
