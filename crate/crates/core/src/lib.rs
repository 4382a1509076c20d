//! Online shift-invariant dictionary learning for vibration condition monitoring.
//!
//! A vibration signal is modelled as a sparse superposition of short unit-norm
//! waveforms ("atoms") placed at arbitrary shifts, plus noise. Matching pursuit
//! ([`encoder`]) decomposes each analysis window into events, the [`learner`]
//! nudges every activated atom along the amplitude-weighted residual, and the
//! [`monitor`] tracks how fast each atom drifts, where its spectral energy sits,
//! and how often it fires. A change in machine condition shows up as a burst of
//! atom drift.
//!
//! [`pipeline`] wires these together into reproducible, resumable runs; the
//! `atomwatch` binary is a thin front-end over it.

pub mod correlate;
pub mod dictionary;
pub mod encoder;
pub mod error;
pub mod learner;
pub mod monitor;
pub mod pipeline;
pub mod signal;
pub mod synth;

pub use dictionary::{init_dictionary, normalize_atom, Atom, Dictionary, Snapshot};
pub use encoder::{encode, EncodeResult, Event, StopCondition};
pub use error::{Error, ErrorKind, Result};
pub use learner::{learn_step, LearnConfig};
pub use monitor::{MonitorConfig, MonitorReport};
pub use pipeline::{resume, run, RunConfig, RunOptions, RunSummary};
pub use signal::{Signal, SignalFormat};
