//! Reproducible, resumable learning runs.
//!
//! A run walks a schedule of labeled stages (e.g. BL -> IR7 -> IR14). Each
//! stage contributes a fixed number of windows; window `k` of the whole run
//! is drawn from the counter-addressed stream `k` of the signal seed, so a
//! run can be stopped and resumed without changing which windows it sees.
//!
//! Output directory layout:
//!
//! ```text
//! run.toml                 the effective configuration
//! events.csv               window,atom_id,shift,amplitude
//! learning.csv             per-window encode/update log
//! monitor.csv              one row per atom per report
//! snapshots/snap_*.dict    dictionary at every report (file name = windows done)
//! checkpoint.toml          resume point, written with every snapshot
//! dictionary_final.dict    written once the schedule completes
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::{
    init_dictionary, load_dictionary, save_dictionary, take_snapshot, Dictionary, DEFAULT_ATOMS,
    DEFAULT_ATOM_LEN,
};
use crate::encoder::{format_event_row, parse_event_row, StopCondition, EVENT_CSV_HEADER};
use crate::error::{Error, Result};
use crate::learner::{learn_step, LearnConfig};
use crate::monitor::{
    center_frequency_padded, AtomMetrics, Monitor, MonitorConfig, MonitorReport, TimedEvent,
    REPORT_CSV_HEADER, TIME_EPS,
};
use crate::signal::{
    window_rng, Manifest, Signal, WindowPlan, DEFAULT_SAMPLE_RATE, DEFAULT_WINDOW_LEN,
};
use crate::synth::{gen_rig_samples, Preset, LOAD_CASE_SHAFT_HZ};

pub const DEFAULT_STAGE_S: f64 = 300.0;

pub const CONFIG_FILE: &str = "run.toml";
pub const EVENTS_FILE: &str = "events.csv";
pub const LEARNING_FILE: &str = "learning.csv";
pub const MONITOR_FILE: &str = "monitor.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.toml";
pub const FINAL_DICTIONARY_FILE: &str = "dictionary_final.dict";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const EVOLUTION_FILE: &str = "evolution_rate.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const TABLE_FILE: &str = "table1.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunParams {
    pub sample_rate: u32,
    pub window_len: usize,
    pub signal_seed: u64,
    pub dict_seed: u64,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            window_len: DEFAULT_WINDOW_LEN,
            signal_seed: 1,
            dict_seed: 1,
        }
    }
}

/// Where windows come from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceConfig {
    /// Built-in rig presets, chosen by stage label (`BL`, `IR7`, `IR14`).
    #[default]
    Synthetic,
    /// Recorded segments; a stage draws windows from segments with its label.
    Manifest { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DictionaryParams {
    pub atoms: usize,
    pub atom_len: usize,
}

impl Default for DictionaryParams {
    fn default() -> Self {
        Self {
            atoms: DEFAULT_ATOMS,
            atom_len: DEFAULT_ATOM_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub label: String,
    #[serde(default = "default_stage_s")]
    pub duration_s: f64,
}

fn default_stage_s() -> f64 {
    DEFAULT_STAGE_S
}

fn default_stages() -> Vec<StageSpec> {
    ["BL", "IR7", "IR14"]
        .into_iter()
        .map(|label| StageSpec {
            label: label.into(),
            duration_s: DEFAULT_STAGE_S,
        })
        .collect()
}

/// Everything that determines a run. Two runs with equal configs produce
/// byte-identical output directories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunParams,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub dictionary: DictionaryParams,
    /// When the `[stop]` table is present, an absent key disables that bound.
    #[serde(default)]
    pub stop: StopCondition,
    #[serde(default)]
    pub learn: LearnConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default = "default_stages", rename = "stage")]
    pub stages: Vec<StageSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run: RunParams::default(),
            source: SourceConfig::default(),
            dictionary: DictionaryParams::default(),
            stop: StopCondition::default(),
            learn: LearnConfig::default(),
            monitor: MonitorConfig::default(),
            stages: default_stages(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if self.dictionary.atoms == 0 || self.dictionary.atom_len < 2 {
            return Err(Error::Config(
                "dictionary needs at least one atom of length >= 2".into(),
            ));
        }
        if self.run.window_len < self.dictionary.atom_len {
            return Err(Error::Config("window is shorter than an atom".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::Config("schedule has no stages".into()));
        }
        for s in &self.stages {
            if !(s.duration_s > 0.0) || !s.duration_s.is_finite() {
                return Err(Error::Config(format!(
                    "stage {} has non-positive duration",
                    s.label
                )));
            }
            if self.source == SourceConfig::Synthetic && Preset::from_label(&s.label).is_none() {
                return Err(Error::Config(format!(
                    "no synthetic preset for stage label '{}'",
                    s.label
                )));
            }
        }
        self.stop.validate()?;
        self.learn.validate()?;
        self.monitor.validate()?;
        Ok(())
    }

    pub fn window_seconds(&self) -> f64 {
        self.run.window_len as f64 / f64::from(self.run.sample_rate)
    }

    /// Stream time after `windows` windows.
    pub fn stream_time(&self, windows: u64) -> f64 {
        (windows as f64 * self.run.window_len as f64) / f64::from(self.run.sample_rate)
    }

    /// Stages resolved to window ranges.
    pub fn schedule(&self) -> Vec<Stage> {
        let mut start = 0;
        self.stages
            .iter()
            .map(|s| {
                let n = ((s.duration_s / self.window_seconds()).round() as u64).max(1);
                let stage = Stage {
                    label: s.label.clone(),
                    first_window: start,
                    end_window: start + n,
                };
                start += n;
                stage
            })
            .collect()
    }

    pub fn total_windows(&self) -> u64 {
        self.schedule().last().map_or(0, |s| s.end_window)
    }
}

/// A stage as a half-open range of window ordinals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub label: String,
    pub first_window: u64,
    pub end_window: u64,
}

impl Stage {
    pub fn contains(&self, window: u64) -> bool {
        (self.first_window..self.end_window).contains(&window)
    }
}

enum WindowSource {
    Synthetic,
    Recorded(BTreeMap<String, WindowPlan>),
}

impl WindowSource {
    fn open(config: &RunConfig) -> Result<Self> {
        match &config.source {
            SourceConfig::Synthetic => Ok(WindowSource::Synthetic),
            SourceConfig::Manifest { path } => {
                let manifest = Manifest::read(path)?;
                let base = path.parent().unwrap_or(Path::new("."));
                let segments = manifest.load_segments(base)?;
                if let Some(s) = segments
                    .iter()
                    .find(|s| s.signal.sample_rate() != config.run.sample_rate)
                {
                    return Err(Error::Config(format!(
                        "segment '{}' is sampled at {} Hz, run expects {} Hz",
                        s.label,
                        s.signal.sample_rate(),
                        config.run.sample_rate
                    )));
                }
                let total = config.total_windows();
                let mut plans = BTreeMap::new();
                for stage in &config.stages {
                    if plans.contains_key(&stage.label) {
                        continue;
                    }
                    let own: Vec<_> = segments
                        .iter()
                        .filter(|s| s.label == stage.label)
                        .cloned()
                        .collect();
                    if own.is_empty() {
                        return Err(Error::Config(format!(
                            "manifest has no segment labeled '{}'",
                            stage.label
                        )));
                    }
                    let plan =
                        WindowPlan::new(config.run.window_len, own, config.run.signal_seed, total)?;
                    plans.insert(stage.label.clone(), plan);
                }
                Ok(WindowSource::Recorded(plans))
            }
        }
    }

    fn window(&self, config: &RunConfig, label: &str, ordinal: u64) -> Result<Signal> {
        match self {
            WindowSource::Synthetic => synthetic_window(config, label, ordinal),
            WindowSource::Recorded(plans) => plans[label].next_window(ordinal),
        }
    }
}

/// Window `ordinal` of a synthetic run: load case and rig seed both come
/// from stream `ordinal` of the signal seed.
pub fn synthetic_window(config: &RunConfig, label: &str, ordinal: u64) -> Result<Signal> {
    let preset = Preset::from_label(label)
        .ok_or_else(|| Error::Config(format!("no synthetic preset for '{label}'")))?;
    let mut rng = window_rng(config.run.signal_seed, ordinal);
    let shaft = LOAD_CASE_SHAFT_HZ[rng.gen_range(0..LOAD_CASE_SHAFT_HZ.len())];
    let mut rig = preset.rig(shaft, rng.gen());
    rig.sample_rate = config.run.sample_rate;
    gen_rig_samples(&rig, config.run.window_len)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    windows_done: u64,
    streaks: Vec<u32>,
    events_bytes: u64,
    learning_bytes: u64,
    monitor_bytes: u64,
    complete: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Stop (as if interrupted) once this many windows of the run are done.
    pub stop_after: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub windows_done: u64,
    pub total_windows: u64,
    pub complete: bool,
}

struct Logs {
    events: BufWriter<File>,
    learning: BufWriter<File>,
    monitor: BufWriter<File>,
}

impl Logs {
    fn open(out: &Path) -> Result<Self> {
        let open = |name: &str| -> Result<BufWriter<File>> {
            let p = out.join(name);
            let f = OpenOptions::new()
                .append(true)
                .create(true)
                .open(&p)
                .map_err(|e| Error::io(&p, e))?;
            Ok(BufWriter::new(f))
        };
        Ok(Self {
            events: open(EVENTS_FILE)?,
            learning: open(LEARNING_FILE)?,
            monitor: open(MONITOR_FILE)?,
        })
    }

    /// Flushes everything and returns the (events, learning, monitor) sizes.
    fn flush(&mut self, out: &Path) -> Result<(u64, u64, u64)> {
        let size = |w: &mut BufWriter<File>, name: &str| -> Result<u64> {
            let p = out.join(name);
            w.flush().map_err(|e| Error::io(&p, e))?;
            Ok(w.get_ref().metadata().map_err(|e| Error::io(&p, e))?.len())
        };
        Ok((
            size(&mut self.events, EVENTS_FILE)?,
            size(&mut self.learning, LEARNING_FILE)?,
            size(&mut self.monitor, MONITOR_FILE)?,
        ))
    }
}

fn write_line(w: &mut impl Write, line: &str, out: &Path, name: &str) -> Result<()> {
    writeln!(w, "{line}").map_err(|e| Error::io(out.join(name), e))
}

fn learning_header(m: usize) -> String {
    let mut h = String::from("window,stream_time,stage,events,srr_db");
    for i in 0..m {
        let _ = write!(h, ",count_{i}");
    }
    for i in 0..m {
        let _ = write!(h, ",dphi_{i}");
    }
    h
}

pub fn snapshot_path(out: &Path, windows_done: u64) -> PathBuf {
    out.join(SNAPSHOT_DIR)
        .join(format!("snap_{windows_done:08}.dict"))
}

/// Snapshot files of a run directory as `(windows_done, path)`, in order.
pub fn list_snapshots(out: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let dir = out.join(SNAPSHOT_DIR);
    let mut snaps = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name();
        let Some(n) = name
            .to_str()
            .and_then(|n| n.strip_prefix("snap_"))
            .and_then(|n| n.strip_suffix(".dict"))
            .and_then(|n| n.parse::<u64>().ok())
        else {
            continue;
        };
        snaps.push((n, entry.path()));
    }
    snaps.sort();
    Ok(snaps)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_checkpoint(out: &Path) -> Result<Checkpoint> {
    let p = out.join(CHECKPOINT_FILE);
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

/// Starts a fresh run in `out`, replacing any previous run there.
pub fn run(config: &RunConfig, out: &Path, options: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(out.join(SNAPSHOT_DIR)).map_err(|e| Error::io(out, e))?;
    for (_, p) in list_snapshots(out)? {
        fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
    }
    let final_dict = out.join(FINAL_DICTIONARY_FILE);
    if final_dict.exists() {
        fs::remove_file(&final_dict).map_err(|e| Error::io(&final_dict, e))?;
    }
    fs::write(out.join(CONFIG_FILE), config.to_toml()?)
        .map_err(|e| Error::io(out.join(CONFIG_FILE), e))?;
    let m = config.dictionary.atoms;
    for (name, header) in [
        (EVENTS_FILE, EVENT_CSV_HEADER.to_string()),
        (LEARNING_FILE, learning_header(m)),
        (MONITOR_FILE, REPORT_CSV_HEADER.to_string()),
    ] {
        let p = out.join(name);
        fs::write(&p, format!("{header}\n")).map_err(|e| Error::io(&p, e))?;
    }

    let dictionary = init_dictionary(m, config.dictionary.atom_len, config.run.dict_seed)?;
    let mut monitor = Monitor::new(config.monitor, config.run.sample_rate, m)?;
    monitor.record_snapshot(take_snapshot(&dictionary, 0.0))?;
    let mut logs = Logs::open(out)?;
    checkpoint(out, &dictionary, &monitor, &mut logs, 0, false)?;
    drive(config, out, options, dictionary, monitor, logs, 0)
}

/// Continues the run in `out` from its last checkpoint. Log lines written
/// after that checkpoint are discarded and regenerated.
pub fn resume(out: &Path, options: &RunOptions) -> Result<RunSummary> {
    let config = RunConfig::load(out.join(CONFIG_FILE))?;
    config.validate()?;
    let ck = read_checkpoint(out)?;
    for (name, len) in [
        (EVENTS_FILE, ck.events_bytes),
        (LEARNING_FILE, ck.learning_bytes),
        (MONITOR_FILE, ck.monitor_bytes),
    ] {
        let p = out.join(name);
        let f = OpenOptions::new()
            .write(true)
            .open(&p)
            .map_err(|e| Error::io(&p, e))?;
        f.set_len(len).map_err(|e| Error::io(&p, e))?;
    }
    for (n, p) in list_snapshots(out)? {
        if n > ck.windows_done {
            fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }

    let monitor = rebuild_monitor(&config, out, config.monitor, ck.windows_done)?;
    let mut monitor = monitor;
    monitor.restore_streaks(ck.streaks.clone())?;
    let dictionary = load_dictionary(snapshot_path(out, ck.windows_done))?;
    let logs = Logs::open(out)?;
    if ck.complete {
        return Ok(RunSummary {
            windows_done: ck.windows_done,
            total_windows: config.total_windows(),
            complete: true,
        });
    }
    drive(
        &config,
        out,
        options,
        dictionary,
        monitor,
        logs,
        ck.windows_done,
    )
}

/// Monitor state as it stood right after the report at `windows_done`.
fn rebuild_monitor(
    config: &RunConfig,
    out: &Path,
    mcfg: MonitorConfig,
    windows_done: u64,
) -> Result<Monitor> {
    let m = config.dictionary.atoms;
    let mut monitor = Monitor::new(mcfg, config.run.sample_rate, m)?;
    for (n, p) in list_snapshots(out)? {
        if n > windows_done {
            break;
        }
        monitor.record_snapshot(take_snapshot(&load_dictionary(p)?, config.stream_time(n)))?;
    }
    let horizon = config.stream_time(windows_done) - mcfg.event_rate_window_s;
    let events = read_events(out)?;
    monitor.record_events(
        events
            .into_iter()
            .filter(|(w, _)| *w < windows_done)
            .map(|(w, e)| timed(config, w, e.atom_id, e.shift))
            .filter(|e| e.time > horizon),
    );
    Ok(monitor)
}

fn timed(config: &RunConfig, window: u64, atom_id: usize, shift: usize) -> TimedEvent {
    TimedEvent {
        time: config.stream_time(window) + shift as f64 / f64::from(config.run.sample_rate),
        atom_id,
    }
}

fn checkpoint(
    out: &Path,
    dictionary: &Dictionary,
    monitor: &Monitor,
    logs: &mut Logs,
    windows_done: u64,
    complete: bool,
) -> Result<()> {
    save_dictionary(dictionary, snapshot_path(out, windows_done))?;
    let (events_bytes, learning_bytes, monitor_bytes) = logs.flush(out)?;
    let ck = Checkpoint {
        windows_done,
        streaks: monitor.streaks().to_vec(),
        events_bytes,
        learning_bytes,
        monitor_bytes,
        complete,
    };
    let text = toml::to_string(&ck).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&out.join(CHECKPOINT_FILE), &text)
}

fn next_report_after(t: f64, interval: f64) -> f64 {
    ((t / interval + TIME_EPS).floor() + 1.0) * interval
}

fn drive(
    config: &RunConfig,
    out: &Path,
    options: &RunOptions,
    mut dictionary: Dictionary,
    mut monitor: Monitor,
    mut logs: Logs,
    start: u64,
) -> Result<RunSummary> {
    let schedule = config.schedule();
    let total = config.total_windows();
    let source = WindowSource::open(config)?;
    let interval = config.monitor.report_interval_s;
    let mut next_report = next_report_after(config.stream_time(start), interval);

    for k in start..total {
        if options.stop_after.is_some_and(|s| k >= s) {
            logs.flush(out)?;
            return Ok(RunSummary {
                windows_done: k,
                total_windows: total,
                complete: false,
            });
        }
        let stage = schedule
            .iter()
            .find(|s| s.contains(k))
            .expect("schedule covers every window");
        let window = source.window(config, &stage.label, k)?;
        let step = learn_step(&window, &mut dictionary, &config.stop, &config.learn)?;
        let done = k + 1;
        let t = config.stream_time(done);

        let enc = &step.encoding;
        let mut counts = vec![0usize; dictionary.len()];
        for e in &enc.events {
            counts[e.atom_id] += 1;
            write_line(&mut logs.events, &format_event_row(k, e), out, EVENTS_FILE)?;
        }
        let mut row = format!(
            "{k},{t},{},{},{}",
            stage.label,
            enc.events.len(),
            enc.srr_db
        );
        for c in &counts {
            let _ = write!(row, ",{c}");
        }
        for d in &step.update.delta_norms {
            let _ = write!(row, ",{d}");
        }
        write_line(&mut logs.learning, &row, out, LEARNING_FILE)?;
        monitor.record_events(
            enc.events
                .iter()
                .map(|e| timed(config, k, e.atom_id, e.shift)),
        );

        if t >= next_report - TIME_EPS || done == stage.end_window {
            monitor.record_snapshot(take_snapshot(&dictionary, t))?;
            let report = monitor.report()?;
            for line in report.csv_rows() {
                write_line(&mut logs.monitor, &line, out, MONITOR_FILE)?;
            }
            next_report = next_report_after(t, interval);
            checkpoint(out, &dictionary, &monitor, &mut logs, done, done == total)?;
        }
    }
    save_dictionary(&dictionary, out.join(FINAL_DICTIONARY_FILE))?;
    Ok(RunSummary {
        windows_done: total,
        total_windows: total,
        complete: true,
    })
}

/// All rows of a run's event log as `(window, event)`.
pub fn read_events(out: &Path) -> Result<Vec<(u64, crate::encoder::Event)>> {
    let p = out.join(EVENTS_FILE);
    let f = File::open(&p).map_err(|e| Error::io(&p, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&p, e))?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let row = parse_event_row(&line).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                line: i + 1,
                message,
            },
            other => other,
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reports of a finished or partial run, parsed back from `monitor.csv`.
pub fn load_reports(out: &Path) -> Result<Vec<MonitorReport>> {
    let p = out.join(MONITOR_FILE);
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let mut reports: Vec<MonitorReport> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = |what: &str| Error::Parse {
            line: i + 1,
            message: format!("{what} in monitor row '{line}'"),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad("bad number"));
        let t = num(0)?;
        let id: usize = f[1].parse().map_err(|_| bad("bad atom id"))?;
        let metrics = AtomMetrics {
            evolution_rate: num(2)?,
            center_frequency_hz: num(3)?,
            event_rate_per_s: num(4)?,
        };
        let new_report = reports.last().map_or(true, |r| r.stream_time != t);
        if new_report {
            reports.push(MonitorReport {
                stream_time: t,
                lag_time: f64::NAN,
                approximate: f[6] == "1",
                atoms: Vec::new(),
                alerts: Vec::new(),
            });
        }
        let r = reports.last_mut().expect("just pushed");
        if id != r.atoms.len() {
            return Err(bad("atom rows out of order"));
        }
        if f[5] == "1" {
            r.alerts.push(id);
        }
        r.atoms.push(metrics);
    }
    Ok(reports)
}

/// Replays a run's snapshots and event log through a monitor with a
/// (possibly different) configuration. The snapshot cadence is the one the
/// run was recorded with.
pub fn recompute_monitor(out: &Path, monitor_config: MonitorConfig) -> Result<Vec<MonitorReport>> {
    let config = RunConfig::load(out.join(CONFIG_FILE))?;
    let m = config.dictionary.atoms;
    let mut monitor = Monitor::new(monitor_config, config.run.sample_rate, m)?;
    let events = read_events(out)?;
    let mut next_event = 0;
    let mut reports = Vec::new();
    for (n, p) in list_snapshots(out)? {
        let dict = load_dictionary(&p)?;
        let upto = events[next_event..].partition_point(|(w, _)| *w < n) + next_event;
        monitor.record_events(
            events[next_event..upto]
                .iter()
                .map(|(w, e)| timed(&config, *w, e.atom_id, e.shift)),
        );
        next_event = upto;
        monitor.record_snapshot(take_snapshot(&dict, config.stream_time(n)))?;
        if n > 0 {
            reports.push(monitor.report()?);
        }
    }
    Ok(reports)
}

/// Per-stage features of the dictionary as it stood at the end of a stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
    pub center_frequency_hz: Vec<f64>,
    /// Activations per second over the whole stage.
    pub event_rate_per_s: Vec<f64>,
}

impl StageSummary {
    /// Event-rate-weighted mean center frequency of the atoms that fired.
    pub fn weighted_center_frequency(&self) -> Option<f64> {
        let total: f64 = self.event_rate_per_s.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let acc: f64 = self
            .center_frequency_hz
            .iter()
            .zip(&self.event_rate_per_s)
            .map(|(c, r)| c * r)
            .sum();
        Some(acc / total)
    }
}

/// Summaries for every stage the run has completed.
pub fn stage_summaries(out: &Path) -> Result<Vec<StageSummary>> {
    let config = RunConfig::load(out.join(CONFIG_FILE))?;
    let m = config.dictionary.atoms;
    let events = read_events(out)?;
    let snaps: BTreeMap<u64, PathBuf> = list_snapshots(out)?.into_iter().collect();
    let mut out_rows = Vec::new();
    for stage in config.schedule() {
        let Some(path) = snaps.get(&stage.end_window) else {
            break;
        };
        let dict = load_dictionary(path)?;
        let cf = dict
            .atoms()
            .iter()
            .map(|a| {
                center_frequency_padded(
                    a.waveform(),
                    config.run.sample_rate,
                    config.monitor.psd_padding,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let start_s = config.stream_time(stage.first_window);
        let end_s = config.stream_time(stage.end_window);
        let mut counts = vec![0usize; m];
        for (w, e) in &events {
            if stage.contains(*w) {
                counts[e.atom_id] += 1;
            }
        }
        out_rows.push(StageSummary {
            label: stage.label.clone(),
            start_s,
            end_s,
            center_frequency_hz: cf,
            event_rate_per_s: counts
                .iter()
                .map(|&c| c as f64 / (end_s - start_s))
                .collect(),
        });
    }
    Ok(out_rows)
}

/// Writes `evolution_rate.csv`, `scatter.csv` and `table1.csv` into `dest`.
pub fn write_report(out: &Path, dest: &Path) -> Result<()> {
    fs::create_dir_all(dest).map_err(|e| Error::io(dest, e))?;
    let reports = load_reports(out)?;
    let stages = stage_summaries(out)?;
    let m = reports.first().map_or(0, |r| r.atoms.len());

    let mut evo = String::from("stream_time");
    for i in 0..m {
        let _ = write!(evo, ",atom_{i}");
    }
    evo.push_str(",max\n");
    for r in &reports {
        let _ = write!(evo, "{}", r.stream_time);
        for a in &r.atoms {
            let _ = write!(evo, ",{}", a.evolution_rate);
        }
        let _ = writeln!(evo, ",{}", r.max_evolution_rate());
    }

    let mut scatter = String::from("atom,center_freq,event_rate,stage\n");
    for s in &stages {
        for (i, (c, r)) in s
            .center_frequency_hz
            .iter()
            .zip(&s.event_rate_per_s)
            .enumerate()
        {
            let _ = writeln!(scatter, "{i},{c},{r},{}", s.label);
        }
    }

    let mut table = String::from("atom");
    for s in &stages {
        let _ = write!(table, ",center_freq_hz_{}", s.label);
    }
    for s in &stages {
        let _ = write!(table, ",event_rate_{}", s.label);
    }
    table.push('\n');
    let n_atoms = stages.first().map_or(0, |s| s.center_frequency_hz.len());
    for i in 0..n_atoms {
        let _ = write!(table, "{i}");
        for s in &stages {
            let _ = write!(table, ",{}", s.center_frequency_hz[i]);
        }
        for s in &stages {
            let _ = write!(table, ",{}", s.event_rate_per_s[i]);
        }
        table.push('\n');
    }

    for (name, text) in [
        (EVOLUTION_FILE, evo),
        (SCATTER_FILE, scatter),
        (TABLE_FILE, table),
    ] {
        let p = dest.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}
