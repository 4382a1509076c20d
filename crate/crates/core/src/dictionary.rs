//! Atoms, dictionaries, snapshots and the binary dictionary file format.
//!
//! File layout (all little-endian): magic `DICT`, `u32` version, `u32` atom
//! count, then per atom a `u32` length followed by that many `f64` samples.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const DEFAULT_ATOMS: usize = 16;
pub const DEFAULT_ATOM_LEN: usize = 50;

/// Unit-norm tolerance enforced on load and checked by tests.
pub const NORM_TOLERANCE: f64 = 1e-9;

const MAGIC: &[u8; 4] = b"DICT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    id: usize,
    waveform: Vec<f64>,
}

impl Atom {
    /// Wraps a waveform without normalizing it.
    pub fn new(id: usize, waveform: Vec<f64>) -> Result<Self> {
        if waveform.len() < 2 {
            return Err(Error::invalid("atoms need at least two samples"));
        }
        if let Some(i) = waveform.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "atom {id} has a non-finite sample at {i}"
            )));
        }
        Ok(Self { id, waveform })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn waveform(&self) -> &[f64] {
        &self.waveform
    }

    pub fn len(&self) -> usize {
        self.waveform.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waveform.is_empty()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.waveform)
    }
}

pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Scales `atom` to unit L2 norm.
pub fn normalize_atom(atom: Atom) -> Result<Atom> {
    let id = atom.id;
    let waveform = normalized(atom.waveform)
        .ok_or_else(|| Error::Numeric(format!("atom {id} has zero norm")))?;
    Ok(Atom { id, waveform })
}

pub(crate) fn normalized(mut w: Vec<f64>) -> Option<Vec<f64>> {
    let n = l2_norm(&w);
    if !(n > 0.0) || !n.is_finite() {
        return None;
    }
    for v in &mut w {
        *v /= n;
    }
    Some(w)
}

#[derive(Debug, Clone)]
pub struct Dictionary {
    atoms: Vec<Atom>,
    created_unix_ms: u64,
    updates: u64,
}

impl Dictionary {
    /// Builds a dictionary from raw waveforms; ids follow list order.
    pub fn from_waveforms(waveforms: Vec<Vec<f64>>) -> Result<Self> {
        if waveforms.is_empty() {
            return Err(Error::MalformedDictionary("dictionary has no atoms".into()));
        }
        let atoms = waveforms
            .into_iter()
            .enumerate()
            .map(|(id, w)| Atom::new(id, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            atoms,
            created_unix_ms: now_ms(),
            updates: 0,
        })
    }

    /// Like [`Dictionary::from_waveforms`] but normalizes every atom.
    pub fn from_waveforms_normalized(waveforms: Vec<Vec<f64>>) -> Result<Self> {
        let mut d = Self::from_waveforms(waveforms)?;
        d.atoms = d
            .atoms
            .into_iter()
            .map(normalize_atom)
            .collect::<Result<Vec<_>>>()?;
        Ok(d)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, id: usize) -> Option<&Atom> {
        self.atoms.get(id)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn max_atom_len(&self) -> usize {
        self.atoms.iter().map(Atom::len).max().unwrap_or(0)
    }

    pub fn created_unix_ms(&self) -> u64 {
        self.created_unix_ms
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn same_atoms(&self, other: &Dictionary) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                a.waveform.len() == b.waveform.len()
                    && a.waveform
                        .iter()
                        .zip(&b.waveform)
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    /// Replaces one atom's waveform. The caller is responsible for the
    /// unit-norm invariant.
    pub(crate) fn set_waveform(&mut self, id: usize, waveform: Vec<f64>) {
        debug_assert_eq!(self.atoms[id].waveform.len(), waveform.len());
        self.atoms[id].waveform = waveform;
    }

    pub(crate) fn bump_updates(&mut self) {
        self.updates += 1;
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out =
            Vec::with_capacity(12 + self.atoms.iter().map(|a| 4 + 8 * a.len()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.atoms.len() as u32).to_le_bytes());
        for a in &self.atoms {
            out.extend_from_slice(&(a.len() as u32).to_le_bytes());
            for v in &a.waveform {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::MalformedDictionary("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::MalformedDictionary(format!(
                "unsupported version {version}"
            )));
        }
        let m = cur.u32()? as usize;
        if m == 0 {
            return Err(Error::MalformedDictionary("dictionary has no atoms".into()));
        }
        let mut waveforms = Vec::with_capacity(m.min(4096));
        for id in 0..m {
            let len = cur.u32()? as usize;
            if len < 2 {
                return Err(Error::MalformedDictionary(format!(
                    "atom {id} has length {len}"
                )));
            }
            let raw = cur.take(
                len.checked_mul(8)
                    .ok_or_else(|| Error::MalformedDictionary("atom length overflows".into()))?,
            )?;
            let w: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let n = l2_norm(&w);
            if !n.is_finite() || (n - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::MalformedDictionary(format!(
                    "atom {id} is not unit norm (norm {n})"
                )));
            }
            waveforms.push(w);
        }
        if cur.pos != bytes.len() {
            return Err(Error::MalformedDictionary(format!(
                "{} trailing bytes",
                bytes.len() - cur.pos
            )));
        }
        Self::from_waveforms(waveforms)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::MalformedDictionary(format!("truncated at byte {}", self.bytes.len()))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// `m` atoms of length `len`, each an i.i.d. standard-normal draw scaled to
/// unit norm. The seed fully determines the result.
pub fn init_dictionary(m: usize, len: usize, seed: u64) -> Result<Dictionary> {
    if m == 0 {
        return Err(Error::invalid("dictionary needs at least one atom"));
    }
    if len < 2 {
        return Err(Error::invalid("atom length must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waveforms = Vec::with_capacity(m);
    while waveforms.len() < m {
        let draw: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
        // redraw on the (practically impossible) zero vector
        if let Some(w) = normalized(draw) {
            waveforms.push(w);
        }
    }
    Dictionary::from_waveforms(waveforms)
}

pub fn save_dictionary(dict: &Dictionary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dict.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Dictionary::from_bytes(&bytes)
}

/// Frozen copy of a dictionary tagged with the amount of signal (in
/// seconds) that had been processed when it was taken.
#[derive(Debug, Clone)]
pub struct Snapshot {
    dictionary: Dictionary,
    stream_time: f64,
}

impl Snapshot {
    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn stream_time(&self) -> f64 {
        self.stream_time
    }
}

pub fn take_snapshot(dictionary: &Dictionary, stream_time: f64) -> Snapshot {
    Snapshot {
        dictionary: dictionary.clone(),
        stream_time,
    }
}
