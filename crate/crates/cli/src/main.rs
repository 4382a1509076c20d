use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atomwatch::dictionary::{init_dictionary, load_dictionary, DEFAULT_ATOMS, DEFAULT_ATOM_LEN};
use atomwatch::encoder::{format_event_row, EVENT_CSV_HEADER};
use atomwatch::monitor::REPORT_CSV_HEADER;
use atomwatch::pipeline::{self, SourceConfig};
use atomwatch::signal::{load_signal, write_signal, Manifest, ManifestEntry, DEFAULT_SAMPLE_RATE};
use atomwatch::synth::{gen_rig_signal, Preset, LOAD_CASE_SHAFT_HZ};
use atomwatch::{encode, Error, ErrorKind, RunConfig, RunOptions, SignalFormat, StopCondition};
use clap::{Args, Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "atomwatch",
    version,
    about = "Shift-invariant dictionary learning for vibration monitoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic rig recording.
    Gen(GenArgs),
    /// Decompose one signal into events with a fixed dictionary.
    Encode(EncodeArgs),
    /// Run (or resume) a staged learning experiment.
    Learn(LearnArgs),
    /// Recompute monitor reports of a run, e.g. with a different lag.
    Monitor(MonitorArgs),
    /// Write evolution-rate, scatter and per-stage table files for a run.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// bl, ir7 or ir14
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 60.0)]
    seconds: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Load case 0-3 (0 HP .. 3 HP).
    #[arg(long, default_value_t = 0)]
    load: usize,
    #[arg(long, default_value_t = SignalFormat::RawF64Le)]
    format: SignalFormat,
    /// Output file; defaults to `<preset>_s<seed>.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also add the file to this manifest (created if missing).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct StopArgs {
    /// Stop once the SRR reaches this many dB ("off" to disable).
    #[arg(long, value_parser = parse_bound)]
    min_srr_db: Option<Bound>,
    /// Stop once events reach this fraction of the sample count ("off" to disable).
    #[arg(long, value_parser = parse_bound)]
    max_events_per_sample: Option<Bound>,
}

impl StopArgs {
    fn apply(&self, stop: &mut StopCondition) {
        if let Some(v) = self.min_srr_db {
            stop.min_srr_db = v.0;
        }
        if let Some(v) = self.max_events_per_sample {
            stop.max_events_per_sample = v.0;
        }
    }
}

/// A stop bound; `None` disables it.
#[derive(Clone, Copy)]
struct Bound(Option<f64>);

fn parse_bound(s: &str) -> Result<Bound, String> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(Bound(None));
    }
    s.parse::<f64>()
        .map(|v| Bound(Some(v)))
        .map_err(|e| e.to_string())
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = SignalFormat::RawF64Le)]
    format: SignalFormat,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: u32,
    /// Dictionary file; without it a random dictionary is drawn from --seed-dict.
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed_dict: u64,
    #[arg(long, default_value_t = DEFAULT_ATOMS)]
    atoms: usize,
    #[arg(long, default_value_t = DEFAULT_ATOM_LEN)]
    atom_len: usize,
    /// Event CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Residual output (same format as the input).
    #[arg(long)]
    residual: Option<PathBuf>,
    #[command(flatten)]
    stop: StopArgs,
}

#[derive(Args)]
struct LearnArgs {
    /// Run configuration (TOML). Defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed_signal: Option<u64>,
    #[arg(long)]
    seed_dict: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta_seconds: Option<f64>,
    #[command(flatten)]
    stop: StopArgs,
    /// Continue the run in --out from its last checkpoint.
    #[arg(long, conflicts_with_all = ["config", "seed_signal", "seed_dict", "eta", "delta_seconds"])]
    resume: bool,
    /// Stop after this many windows of the run (for staged execution).
    #[arg(long)]
    stop_after: Option<u64>,
}

#[derive(Args)]
struct MonitorArgs {
    /// Run directory.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    delta_seconds: Option<f64>,
    /// Output CSV; defaults to `<run>/monitor_recomputed.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory.
    #[arg(long)]
    run: PathBuf,
    /// Destination directory; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Encode(a) => encode_cmd(a),
        Command::Learn(a) => learn(a),
        Command::Monitor(a) => monitor(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            })
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn gen(a: GenArgs) -> atomwatch::Result<()> {
    let preset = Preset::from_label(&a.preset)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{}'", a.preset)))?;
    let shaft = *LOAD_CASE_SHAFT_HZ
        .get(a.load)
        .ok_or_else(|| Error::InvalidArgument(format!("load case {} out of range 0-3", a.load)))?;
    let signal = gen_rig_signal(&preset.rig(shaft, a.seed), a.seconds)?;
    let out = a.out.unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}_s{}.{}",
            preset.label().to_ascii_lowercase(),
            a.seed,
            a.format.extension()
        ))
    });
    write_signal(&signal, &out, a.format)?;

    if let Some(mpath) = a.manifest {
        let mut manifest = if mpath.exists() {
            Manifest::read(&mpath)?
        } else {
            Manifest::default()
        };
        // Store the path relative to the manifest when it lives beside it.
        let base = mpath.parent().unwrap_or(Path::new(""));
        let rel = out
            .strip_prefix(base)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| out.clone());
        manifest.segments.retain(|s| s.path != rel);
        manifest.segments.push(ManifestEntry {
            path: rel,
            format: a.format,
            sample_rate: signal.sample_rate(),
            label: preset.label().to_string(),
        });
        manifest.write(&mpath)?;
    }
    println!("{} samples -> {}", signal.len(), out.display());
    Ok(())
}

fn encode_cmd(a: EncodeArgs) -> atomwatch::Result<()> {
    let dictionary = match &a.dictionary {
        Some(p) => load_dictionary(p)?,
        None => init_dictionary(a.atoms, a.atom_len, a.seed_dict)?,
    };
    let signal = load_signal(&a.input, a.format, a.sample_rate)?;
    let mut stop = StopCondition::default();
    a.stop.apply(&mut stop);
    let result = encode(&signal, &dictionary, &stop)?;

    let mut text = String::with_capacity(48 * (result.events.len() + 1));
    text.push_str(EVENT_CSV_HEADER);
    text.push('\n');
    for e in &result.events {
        text.push_str(&format_event_row(0, e));
        text.push('\n');
    }
    std::fs::write(&a.out, text).map_err(|e| io_err(&a.out, e))?;
    if let Some(r) = &a.residual {
        write_signal(&result.residual, r, a.format)?;
    }
    println!(
        "{} events, srr {:.3} dB, {:.4} events/sample",
        result.events.len(),
        result.srr_db,
        result.events_per_sample
    );
    Ok(())
}

fn learn(a: LearnArgs) -> atomwatch::Result<()> {
    let options = RunOptions {
        stop_after: a.stop_after,
    };
    let summary = if a.resume {
        if a.stop.min_srr_db.is_some() || a.stop.max_events_per_sample.is_some() {
            return Err(Error::InvalidArgument(
                "a resumed run keeps its recorded stop condition".into(),
            ));
        }
        pipeline::resume(&a.out, &options)?
    } else {
        let mut config = match &a.config {
            Some(p) => {
                let mut c = RunConfig::load(p)?;
                if let SourceConfig::Manifest { path } = &mut c.source {
                    if path.is_relative() {
                        *path = p.parent().unwrap_or(Path::new("")).join(&*path);
                    }
                }
                c
            }
            None => RunConfig::default(),
        };
        if let Some(s) = a.seed_signal {
            config.run.signal_seed = s;
        }
        if let Some(s) = a.seed_dict {
            config.run.dict_seed = s;
        }
        if let Some(eta) = a.eta {
            config.learn.learning_rate = eta;
        }
        if let Some(d) = a.delta_seconds {
            config.monitor.delta_s = d;
        }
        a.stop.apply(&mut config.stop);
        pipeline::run(&config, &a.out, &options)?
    };
    println!(
        "{}/{} windows{}",
        summary.windows_done,
        summary.total_windows,
        if summary.complete { ", complete" } else { "" }
    );
    Ok(())
}

fn monitor(a: MonitorArgs) -> atomwatch::Result<()> {
    let config = RunConfig::load(a.run.join(pipeline::CONFIG_FILE))?;
    let mut mcfg = config.monitor;
    if let Some(d) = a.delta_seconds {
        mcfg.delta_s = d;
    }
    let reports = pipeline::recompute_monitor(&a.run, mcfg)?;
    let out = a
        .out
        .unwrap_or_else(|| a.run.join("monitor_recomputed.csv"));
    let mut text = String::from(REPORT_CSV_HEADER);
    text.push('\n');
    for r in &reports {
        for line in r.csv_rows() {
            text.push_str(&line);
            text.push('\n');
        }
    }
    std::fs::write(&out, text).map_err(|e| io_err(&out, e))?;
    let peak = reports
        .iter()
        .map(|r| r.max_evolution_rate())
        .fold(0.0, f64::max);
    println!(
        "{} reports, peak evolution rate {peak:.4} -> {}",
        reports.len(),
        out.display()
    );
    Ok(())
}

fn report(a: ReportArgs) -> atomwatch::Result<()> {
    let dest = a.out.unwrap_or_else(|| a.run.clone());
    pipeline::write_report(&a.run, &dest)?;
    for s in pipeline::stage_summaries(&a.run)? {
        match s.weighted_center_frequency() {
            Some(cf) => println!("{}: weighted center frequency {cf:.0} Hz", s.label),
            None => println!("{}: no events", s.label),
        }
    }
    Ok(())
}
