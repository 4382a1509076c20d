//! Sampled signals, on-disk formats, segment manifests and the randomized
//! windowing protocol used to feed the learner.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 12_000;
pub const DEFAULT_WINDOW_LEN: usize = 60_000;

/// Block length used by [`energy`]. Every energy figure in the crate is summed
/// in these blocks so that incremental trackers reproduce it bit-for-bit.
pub const ENERGY_BLOCK: usize = 256;

/// A uniformly sampled, finite, non-empty real waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed signal; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn slice(&self, offset: usize, len: usize) -> Result<Signal> {
        let end = offset
            .checked_add(len)
            .filter(|&e| e <= self.samples.len())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "slice {offset}..{} exceeds signal of {} samples",
                    offset.saturating_add(len),
                    self.samples.len()
                ))
            })?;
        Signal::new(self.samples[offset..end].to_vec(), self.sample_rate)
    }
}

/// Sum of squares, accumulated in fixed blocks of [`ENERGY_BLOCK`] samples.
pub fn energy(x: &[f64]) -> f64 {
    x.chunks(ENERGY_BLOCK)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalFormat {
    #[serde(rename = "csv-column")]
    CsvColumn,
    #[serde(rename = "raw-f32le")]
    RawF32Le,
    #[serde(rename = "raw-f64le")]
    RawF64Le,
}

impl SignalFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SignalFormat::CsvColumn => "csv",
            SignalFormat::RawF32Le => "f32",
            SignalFormat::RawF64Le => "f64",
        }
    }
}

impl fmt::Display for SignalFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalFormat::CsvColumn => "csv-column",
            SignalFormat::RawF32Le => "raw-f32le",
            SignalFormat::RawF64Le => "raw-f64le",
        })
    }
}

impl FromStr for SignalFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv-column" | "csv" => Ok(SignalFormat::CsvColumn),
            "raw-f32le" | "f32" => Ok(SignalFormat::RawF32Le),
            "raw-f64le" | "f64" => Ok(SignalFormat::RawF64Le),
            other => Err(Error::invalid(format!("unknown signal format '{other}'"))),
        }
    }
}

pub fn load_signal(
    path: impl AsRef<Path>,
    format: SignalFormat,
    sample_rate: u32,
) -> Result<Signal> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let samples = match format {
        SignalFormat::CsvColumn => parse_csv_column(&bytes)?,
        SignalFormat::RawF32Le => decode_raw::<4>(&bytes, |b| f64::from(f32::from_le_bytes(b)))?,
        SignalFormat::RawF64Le => decode_raw::<8>(&bytes, f64::from_le_bytes)?,
    };
    Signal::new(samples, sample_rate)
}

fn decode_raw<const W: usize>(bytes: &[u8], decode: impl Fn([u8; W]) -> f64) -> Result<Vec<f64>> {
    if bytes.is_empty() {
        return Err(Error::EmptySignal);
    }
    if bytes.len() % W != 0 {
        return Err(Error::Parse {
            line: 0,
            message: format!(
                "{} bytes is not a multiple of the {W}-byte sample width",
                bytes.len()
            ),
        });
    }
    Ok(bytes
        .chunks_exact(W)
        .map(|c| decode(c.try_into().expect("chunk width")))
        .collect())
}

fn parse_csv_column(bytes: &[u8]) -> Result<Vec<f64>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => {
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: out.len() });
                }
                out.push(v);
            }
            // A single leading header line is tolerated.
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("non-numeric record '{line}'"),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(out)
}

/// Writes `signal` to `path`. Raw f32 output rounds each sample to the
/// nearest `f32`; csv uses the shortest decimal that reparses exactly.
pub fn write_signal(signal: &Signal, path: impl AsRef<Path>, format: SignalFormat) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        match format {
            SignalFormat::CsvColumn => {
                for v in signal.samples() {
                    writeln!(w, "{v:e}")?;
                }
            }
            SignalFormat::RawF32Le => {
                for &v in signal.samples() {
                    w.write_all(&(v as f32).to_le_bytes())?;
                }
            }
            SignalFormat::RawF64Le => {
                for v in signal.samples() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// One labeled recording, e.g. a single load case of the baseline machine.
#[derive(Debug, Clone)]
pub struct Segment {
    pub label: String,
    pub signal: Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub format: SignalFormat,
    pub sample_rate: u32,
    pub label: String,
}

/// TOML list of `[[segment]]` tables. Relative paths resolve against the
/// manifest's own directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, rename = "segment")]
    pub segments: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads every segment, resolving relative paths against `base_dir`.
    pub fn load_segments(&self, base_dir: &Path) -> Result<Vec<Segment>> {
        self.segments
            .iter()
            .map(|entry| {
                let p = if entry.path.is_absolute() {
                    entry.path.clone()
                } else {
                    base_dir.join(&entry.path)
                };
                Ok(Segment {
                    label: entry.label.clone(),
                    signal: load_signal(&p, entry.format, entry.sample_rate)?,
                })
            })
            .collect()
    }
}

/// Randomized but addressable window schedule over a set of segments.
///
/// Window `i` is drawn from its own ChaCha stream (`stream = i`), so any
/// window can be regenerated without replaying the ones before it. Windows
/// never straddle segment boundaries.
#[derive(Debug, Clone)]
pub struct WindowPlan {
    window_len: usize,
    segments: Vec<Segment>,
    rng_seed: u64,
    total_windows: u64,
}

impl WindowPlan {
    pub fn new(
        window_len: usize,
        segments: Vec<Segment>,
        rng_seed: u64,
        total_windows: u64,
    ) -> Result<Self> {
        if window_len == 0 {
            return Err(Error::invalid("window length must be positive"));
        }
        if segments.is_empty() {
            return Err(Error::invalid("window plan needs at least one segment"));
        }
        let rate = segments[0].signal.sample_rate();
        for s in &segments {
            if s.signal.len() < window_len {
                return Err(Error::invalid(format!(
                    "segment '{}' has {} samples, shorter than the {window_len}-sample window",
                    s.label,
                    s.signal.len()
                )));
            }
            if s.signal.sample_rate() != rate {
                return Err(Error::invalid(
                    "all segments in a plan must share one sample rate",
                ));
            }
        }
        Ok(Self {
            window_len,
            segments,
            rng_seed,
            total_windows,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment index and sample offset of window `index`.
    pub fn locate(&self, index: u64) -> Result<(usize, usize)> {
        if index >= self.total_windows {
            return Err(Error::invalid(format!(
                "window {index} out of range (plan has {})",
                self.total_windows
            )));
        }
        let mut rng = window_rng(self.rng_seed, index);
        let seg = rng.gen_range(0..self.segments.len());
        let len = self.segments[seg].signal.len();
        if len < self.window_len {
            return Err(Error::invalid("window longer than the chosen segment"));
        }
        let offset = rng.gen_range(0..=len - self.window_len);
        Ok((seg, offset))
    }

    pub fn next_window(&self, index: u64) -> Result<Signal> {
        let (seg, offset) = self.locate(index)?;
        self.segments[seg].signal.slice(offset, self.window_len)
    }
}

/// Counter-addressed generator: an independent ChaCha8 stream per ordinal.
pub fn window_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
