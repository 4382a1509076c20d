//! Shift-invariant matching pursuit.
//!
//! Each iteration picks the (atom, shift) with the largest absolute
//! correlation against the current residual, records the signed correlation
//! as the event amplitude and subtracts the scaled atom. After the first full
//! correlation pass, only the correlations overlapping the subtracted support
//! change; they are patched through a precomputed atom-pair cross-correlation
//! table, and a tournament tree over fixed blocks of shifts keeps the global
//! argmax current in logarithmic time.

use std::fmt::Write as _;

use crate::correlate::{correlate, FftCorrelator, FFT_MIN_ATOM_LEN};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::signal::{energy, Signal, ENERGY_BLOCK};

/// Events per sample at which the pursuit stops by default: a tenfold
/// reduction of the data rate.
pub const DEFAULT_MAX_EVENTS_PER_SAMPLE: f64 = 0.1;
pub const DEFAULT_MIN_SRR_DB: f64 = 12.0;

/// Correlations are compared after quantizing to this absolute step so that
/// ties resolve identically whichever correlation path produced them.
pub const TIE_QUANTUM: f64 = 1e-12;

/// An amplitude at or below this fraction of the window's L2 norm is treated
/// as zero and ends the pursuit.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

const SHIFT_BLOCK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub atom_id: usize,
    pub shift: usize,
    pub amplitude: f64,
}

/// Pursuit stops at whichever bound is reached first.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StopCondition {
    pub max_events_per_sample: Option<f64>,
    pub min_srr_db: Option<f64>,
}

impl Default for StopCondition {
    fn default() -> Self {
        Self {
            max_events_per_sample: Some(DEFAULT_MAX_EVENTS_PER_SAMPLE),
            min_srr_db: Some(DEFAULT_MIN_SRR_DB),
        }
    }
}

impl StopCondition {
    pub fn new(max_events_per_sample: Option<f64>, min_srr_db: Option<f64>) -> Result<Self> {
        let s = Self {
            max_events_per_sample,
            min_srr_db,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_events_per_sample.is_none() && self.min_srr_db.is_none() {
            return Err(Error::invalid(
                "stop condition needs a sparsity bound or an SRR target",
            ));
        }
        if let Some(r) = self.max_events_per_sample {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid(format!(
                    "max events per sample must be positive, got {r}"
                )));
            }
        }
        if let Some(db) = self.min_srr_db {
            if db.is_nan() {
                return Err(Error::invalid("SRR target is NaN"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EncodeResult {
    /// In extraction order.
    pub events: Vec<Event>,
    pub residual: Signal,
    pub srr_db: f64,
    pub events_per_sample: f64,
    /// SRR after each extracted event.
    pub srr_trace: Vec<f64>,
}

impl EncodeResult {
    /// Sum of all events placed back on a zero signal.
    pub fn reconstruction(&self, dictionary: &Dictionary) -> Vec<f64> {
        let mut out = vec![0.0; self.residual.len()];
        for e in &self.events {
            let atom = dictionary.atoms()[e.atom_id].waveform();
            for (o, a) in out[e.shift..e.shift + atom.len()].iter_mut().zip(atom) {
                *o += e.amplitude * a;
            }
        }
        out
    }
}

/// `10 log10(|original|^2 / |residual|^2)`; `+inf` for an exactly zero residual.
pub fn srr_db(original: &[f64], residual: &[f64]) -> Result<f64> {
    if original.len() != residual.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            original.len(),
            residual.len()
        )));
    }
    let e0 = energy(original);
    if !(e0 > 0.0) {
        return Err(Error::invalid("original signal has zero energy"));
    }
    Ok(srr_from_energies(e0, energy(residual)))
}

fn srr_from_energies(e0: f64, e: f64) -> f64 {
    if e <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (e0 / e).log10()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    key: f64,
    atom: u32,
    shift: u32,
}

impl Candidate {
    const NONE: Candidate = Candidate {
        key: f64::NEG_INFINITY,
        atom: u32::MAX,
        shift: u32::MAX,
    };

    fn new(value: f64, atom: usize, shift: usize) -> Self {
        Self {
            key: quantize(value),
            atom: atom as u32,
            shift: shift as u32,
        }
    }

    /// Larger |correlation| wins; ties go to the lower atom id, then shift.
    fn beats(&self, other: &Candidate) -> bool {
        self.key > other.key
            || (self.key == other.key && (self.atom, self.shift) < (other.atom, other.shift))
    }
}

fn quantize(v: f64) -> f64 {
    (v.abs() / TIE_QUANTUM).round()
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if b.beats(&a) {
        b
    } else {
        a
    }
}

/// Best (atom, shift) over all correlations, with the deterministic tie-break.
pub fn best_event(residual: &[f64], dictionary: &Dictionary) -> Result<Event> {
    if dictionary.is_empty() {
        return Err(Error::invalid("empty dictionary"));
    }
    let mut best = Candidate::NONE;
    let mut amplitude = 0.0;
    for atom in dictionary.atoms() {
        let c = correlate(residual, atom.waveform())?;
        for (shift, &v) in c.iter().enumerate() {
            let cand = Candidate::new(v, atom.id(), shift);
            if cand.beats(&best) {
                best = cand;
                amplitude = v;
            }
        }
    }
    Ok(Event {
        atom_id: best.atom as usize,
        shift: best.shift as usize,
        amplitude,
    })
}

fn check_event(n: usize, event: &Event, dictionary: &Dictionary) -> Result<usize> {
    let atom = dictionary
        .atom(event.atom_id)
        .ok_or_else(|| Error::invalid(format!("unknown atom id {}", event.atom_id)))?;
    if event.shift + atom.len() > n {
        return Err(Error::invalid(format!(
            "event at shift {} with atom of length {} overruns {n} samples",
            event.shift,
            atom.len()
        )));
    }
    Ok(atom.len())
}

/// Returns `residual - a * atom(t - shift)`.
pub fn subtract_event(residual: &Signal, event: &Event, dictionary: &Dictionary) -> Result<Signal> {
    let mut out = residual.samples().to_vec();
    subtract_in_place(&mut out, event, dictionary)?;
    Signal::new(out, residual.sample_rate())
}

pub(crate) fn subtract_in_place(
    residual: &mut [f64],
    event: &Event,
    dictionary: &Dictionary,
) -> Result<()> {
    check_event(residual.len(), event, dictionary)?;
    let atom = dictionary.atoms()[event.atom_id].waveform();
    for (r, a) in residual[event.shift..event.shift + atom.len()]
        .iter_mut()
        .zip(atom)
    {
        *r -= event.amplitude * a;
    }
    Ok(())
}

/// Decomposes `window` into events until `stop` is met or no correlation
/// remains above the amplitude floor.
pub fn encode(
    window: &Signal,
    dictionary: &Dictionary,
    stop: &StopCondition,
) -> Result<EncodeResult> {
    stop.validate()?;
    let n = window.len();
    if dictionary.max_atom_len() > n {
        return Err(Error::invalid(format!(
            "window of {n} samples is shorter than the longest atom ({})",
            dictionary.max_atom_len()
        )));
    }
    let x = window.samples();
    let e0 = energy(x);
    if e0 == 0.0 {
        return Ok(EncodeResult {
            events: Vec::new(),
            residual: window.clone(),
            srr_db: f64::INFINITY,
            events_per_sample: 0.0,
            srr_trace: Vec::new(),
        });
    }
    if !e0.is_finite() {
        return Err(Error::Numeric("window energy overflows".into()));
    }

    let mut state = Pursuit::new(x, dictionary);
    let floor = AMPLITUDE_FLOOR * e0.sqrt();
    let max_events = stop.max_events_per_sample.map(|r| r * n as f64);
    let mut events = Vec::new();
    let mut srr_trace = Vec::new();
    let mut e = e0;

    loop {
        if let Some(cap) = max_events {
            if events.len() as f64 >= cap {
                break;
            }
        }
        if let Some(target) = stop.min_srr_db {
            if srr_from_energies(e0, e) >= target {
                break;
            }
        }
        let event = state.best();
        if !(event.amplitude.abs() > floor) {
            break;
        }
        state.subtract(&event);
        e = state.energy();
        events.push(event);
        srr_trace.push(srr_from_energies(e0, e));
    }

    let residual = state.residual;
    if let Some(i) = residual.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "residual became non-finite at sample {i}"
        )));
    }
    let srr = srr_db(x, &residual)?;
    let events_per_sample = events.len() as f64 / n as f64;
    Ok(EncodeResult {
        events,
        residual: Signal::new(residual, window.sample_rate())?,
        srr_db: srr,
        events_per_sample,
        srr_trace,
    })
}

/// Mutable pursuit state for one window.
struct Pursuit<'a> {
    dict: &'a Dictionary,
    residual: Vec<f64>,
    /// Per atom: correlation at every valid shift.
    corr: Vec<Vec<f64>>,
    /// `gram[p][q][d + len_p - 1] = sum_k atom_p[k] * atom_q[k + d]`.
    gram: Vec<Vec<Vec<f64>>>,
    /// First tree leaf of each atom's block run.
    leaf_base: Vec<usize>,
    tree: Vec<Candidate>,
    tree_leaves: usize,
    block_energy: Vec<f64>,
}

impl<'a> Pursuit<'a> {
    fn new(x: &[f64], dict: &'a Dictionary) -> Self {
        let n = x.len();
        let corr: Vec<Vec<f64>> = if dict.max_atom_len() >= FFT_MIN_ATOM_LEN {
            let fft = FftCorrelator::new(x);
            dict.atoms()
                .iter()
                .map(|a| fft.correlate(a.waveform()))
                .collect()
        } else {
            dict.atoms()
                .iter()
                .map(|a| crate::correlate::correlate_direct(x, a.waveform()))
                .collect()
        };

        let gram = dict
            .atoms()
            .iter()
            .map(|p| {
                dict.atoms()
                    .iter()
                    .map(|q| full_xcorr(p.waveform(), q.waveform()))
                    .collect()
            })
            .collect();

        let mut leaf_base = Vec::with_capacity(dict.len());
        let mut leaves = 0;
        for a in dict.atoms() {
            leaf_base.push(leaves);
            leaves += (n - a.len() + 1).div_ceil(SHIFT_BLOCK);
        }
        let tree_leaves = leaves.next_power_of_two();
        let mut state = Self {
            dict,
            residual: x.to_vec(),
            corr,
            gram,
            leaf_base,
            tree: vec![Candidate::NONE; 2 * tree_leaves],
            tree_leaves,
            block_energy: x
                .chunks(ENERGY_BLOCK)
                .map(|c| c.iter().map(|v| v * v).sum())
                .collect(),
        };
        for m in 0..dict.len() {
            let blocks = state.corr[m].len().div_ceil(SHIFT_BLOCK);
            for b in 0..blocks {
                let leaf = state.tree_leaves + state.leaf_base[m] + b;
                state.tree[leaf] = state.block_best(m, b);
            }
        }
        for i in (1..tree_leaves).rev() {
            state.tree[i] = better(state.tree[2 * i], state.tree[2 * i + 1]);
        }
        state
    }

    fn block_best(&self, m: usize, block: usize) -> Candidate {
        let c = &self.corr[m];
        let start = block * SHIFT_BLOCK;
        let end = (start + SHIFT_BLOCK).min(c.len());
        let mut best = Candidate::NONE;
        for (s, &v) in c[start..end].iter().enumerate() {
            let cand = Candidate::new(v, m, start + s);
            if cand.beats(&best) {
                best = cand;
            }
        }
        best
    }

    fn best(&self) -> Event {
        let top = self.tree[1];
        if top.atom == u32::MAX {
            return Event {
                atom_id: 0,
                shift: 0,
                amplitude: 0.0,
            };
        }
        Event {
            atom_id: top.atom as usize,
            shift: top.shift as usize,
            amplitude: self.corr[top.atom as usize][top.shift as usize],
        }
    }

    fn subtract(&mut self, event: &Event) {
        let q = event.atom_id;
        let tau = event.shift;
        let a = event.amplitude;
        let atom_q = self.dict.atoms()[q].waveform();
        let len_q = atom_q.len();
        for (r, w) in self.residual[tau..tau + len_q].iter_mut().zip(atom_q) {
            *r -= a * w;
        }

        for p in 0..self.dict.len() {
            let len_p = self.dict.atoms()[p].len();
            let c = &mut self.corr[p];
            let lo = tau.saturating_sub(len_p - 1);
            let hi = (tau + len_q - 1).min(c.len() - 1);
            if lo > hi {
                continue;
            }
            let g = &self.gram[p][q];
            // s - tau + len_p - 1 >= 0 because s >= tau - (len_p - 1)
            let g_off = lo + len_p - 1 - tau;
            for (cv, gv) in c[lo..=hi].iter_mut().zip(&g[g_off..]) {
                *cv -= a * gv;
            }
            for b in lo / SHIFT_BLOCK..=hi / SHIFT_BLOCK {
                let cand = self.block_best(p, b);
                self.set_leaf(self.leaf_base[p] + b, cand);
            }
        }

        for b in tau / ENERGY_BLOCK..=(tau + len_q - 1) / ENERGY_BLOCK {
            let start = b * ENERGY_BLOCK;
            let end = (start + ENERGY_BLOCK).min(self.residual.len());
            self.block_energy[b] = self.residual[start..end].iter().map(|v| v * v).sum();
        }
    }

    fn set_leaf(&mut self, leaf: usize, cand: Candidate) {
        let mut i = self.tree_leaves + leaf;
        self.tree[i] = cand;
        while i > 1 {
            i /= 2;
            self.tree[i] = better(self.tree[2 * i], self.tree[2 * i + 1]);
        }
    }

    /// Matches [`energy`] on the current residual bit-for-bit.
    fn energy(&self) -> f64 {
        self.block_energy.iter().sum()
    }
}

/// Full linear cross-correlation: `out[d + p.len() - 1] = sum_k p[k] * q[k + d]`
/// for `d` in `-(p.len()-1)..q.len()`.
fn full_xcorr(p: &[f64], q: &[f64]) -> Vec<f64> {
    let lp = p.len() as isize;
    let lq = q.len() as isize;
    (-(lp - 1)..lq)
        .map(|d| {
            let k0 = (-d).max(0);
            let k1 = lp.min(lq - d);
            (k0..k1).map(|k| p[k as usize] * q[(k + d) as usize]).sum()
        })
        .collect()
}

/// CSV header of the event stream.
pub const EVENT_CSV_HEADER: &str = "window,atom_id,shift,amplitude";

/// One event-stream row. Amplitudes carry 17 significant digits, which
/// round-trips every `f64` exactly.
pub fn format_event_row(window: u64, event: &Event) -> String {
    let mut s = String::with_capacity(48);
    let _ = write!(
        s,
        "{window},{},{},{:.16e}",
        event.atom_id, event.shift, event.amplitude
    );
    s
}

pub fn parse_event_row(line: &str) -> Result<(u64, Event)> {
    let bad = |m: &str| Error::Parse {
        line: 0,
        message: format!("{m} in event row '{line}'"),
    };
    let mut it = line.trim().split(',');
    let mut next = |what: &str| it.next().ok_or_else(|| bad(&format!("missing {what}")));
    let window = next("window")?.parse().map_err(|_| bad("bad window"))?;
    let atom_id = next("atom_id")?.parse().map_err(|_| bad("bad atom id"))?;
    let shift = next("shift")?.parse().map_err(|_| bad("bad shift"))?;
    let amplitude: f64 = next("amplitude")?
        .parse()
        .map_err(|_| bad("bad amplitude"))?;
    Ok((
        window,
        Event {
            atom_id,
            shift,
            amplitude,
        },
    ))
}
