//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Tolerances are pinned below.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use atomwatch::correlate::{correlate_direct, correlate_with, CorrelationPath};
use atomwatch::encoder::{best_event, subtract_event};
use atomwatch::learner::accumulate;
use atomwatch::monitor::{center_frequency_padded, evolution_rate_with_lag};
use atomwatch::pipeline::{
    load_reports, stage_summaries, synthetic_window, RunParams, StageSpec, EVENTS_FILE,
    FINAL_DICTIONARY_FILE,
};
use atomwatch::signal::{energy, window_rng};
use atomwatch::synth::{gaussian_noise, gen_from_dictionary};
use atomwatch::{
    encode, init_dictionary, learn_step, resume, run, Dictionary, Event, LearnConfig,
    MonitorConfig, RunConfig, RunOptions, Signal, StopCondition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: u32 = 12_000;

const RECOVERY_TRIALS: usize = 100;
const RECOVERY_AMP_RTOL: f64 = 1e-9;
const RECOVERY_MIN_SRR_DB: f64 = 100.0;
const RECOVERY_BUDGET: Duration = Duration::from_secs(10);

const ENERGY_ITERATIONS: usize = 1000;
const ENERGY_RTOL: f64 = 1e-9;

const CORRELATION_PAIRS: usize = 100;
const CORRELATION_RTOL: f64 = 1e-9;

const GRADIENT_INSTANCES: usize = 20;
const GRADIENT_RTOL: f64 = 1e-5;

const PLANTED_SEEDS: u64 = 5;
const PLANTED_MIN_PASS: usize = 4;
const PLANTED_WINDOWS: u64 = 600;
const PLANTED_WINDOW_LEN: usize = 2000;
const PLANTED_EVENTS: usize = 8;
const PLANTED_ETA: f64 = 1e-4;
const PLANTED_MIN_SIMILARITY: f64 = 0.95;
const PLANTED_BUDGET: Duration = Duration::from_secs(120);

const RIG_SEEDS: u64 = 5;
const RIG_MIN_PASS: usize = 4;
const RIG_DELTA_S: f64 = 30.0;
const SPIKE_FACTOR: f64 = 3.0;
const BASELINE_SPAN_S: f64 = 100.0;
const RIG_BUDGET: Duration = Duration::from_secs(300);
const CENTROID_GAIN: f64 = 1.5;

const ENCODE_BUDGET: Duration = Duration::from_secs(1);
const ENCODE_SRR_DB: f64 = 12.0;
const SUITE_BUDGET: Duration = Duration::from_secs(600);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Signal {
    Signal::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), FS).unwrap()
}

fn mp_exact_recovery() -> Outcome {
    let t0 = Instant::now();
    let stop = StopCondition::new(Some(0.1), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (n, len, k) = (1000usize, 50usize, 10usize);
    let mut failures = 0;
    let mut worst_srr = f64::INFINITY;
    for trial in 0..RECOVERY_TRIALS {
        let d = init_dictionary(16, len, 5000 + trial as u64).unwrap();
        // non-overlapping slots: 10 atoms plus random gaps fill the window
        let slack = n - k * len;
        let mut cuts: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=slack)).collect();
        cuts.sort_unstable();
        let planted: Vec<Event> = cuts
            .iter()
            .enumerate()
            .map(|(i, &c)| Event {
                atom_id: rng.gen_range(0..16),
                shift: c + i * len,
                amplitude: rng.gen_range(1.0..3.0) * if rng.gen() { 1.0 } else { -1.0 },
            })
            .collect();
        let x = gen_from_dictionary(&d, &planted, 0.0, n, FS, 0).unwrap();
        let r = encode(&x, &d, &stop).unwrap();
        let mut got = r.events.clone();
        got.sort_by_key(|e| e.shift);
        let ok = got.len() == k
            && got.iter().zip(&planted).all(|(g, p)| {
                g.atom_id == p.atom_id
                    && g.shift == p.shift
                    && (g.amplitude - p.amplitude).abs() <= RECOVERY_AMP_RTOL * p.amplitude.abs()
            })
            && r.srr_db >= RECOVERY_MIN_SRR_DB;
        worst_srr = worst_srr.min(r.srr_db);
        failures += usize::from(!ok);
    }
    let elapsed = t0.elapsed();
    outcome(
        failures == 0 && elapsed < RECOVERY_BUDGET,
        format!(
            "{failures}/{RECOVERY_TRIALS} trials wrong, worst srr {worst_srr:.1} dB, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn energy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let d = init_dictionary(16, 50, 202).unwrap();
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < ENERGY_ITERATIONS {
        let mut r = random_signal(rng.gen_range(200..2000), &mut rng);
        for _ in 0..50 {
            let e = best_event(r.samples(), &d).unwrap();
            let next = subtract_event(&r, &e, &d).unwrap();
            let before = energy(r.samples());
            let err =
                (energy(next.samples()) - (before - e.amplitude * e.amplitude)).abs() / before;
            worst = worst.max(err);
            r = next;
            done += 1;
        }
    }
    let mut non_monotone = 0;
    for _ in 0..20 {
        let x = random_signal(rng.gen_range(500..5000), &mut rng);
        let r = encode(&x, &d, &StopCondition::default()).unwrap();
        non_monotone += r.srr_trace.windows(2).filter(|w| w[1] < w[0]).count();
    }
    outcome(
        worst <= ENERGY_RTOL && non_monotone == 0,
        format!(
            "worst relative error {worst:.2e} over {done} iterations, {non_monotone} SRR decreases"
        ),
    )
}

fn correlation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for i in 0..CORRELATION_PAIRS {
        let n = rng.gen_range(2..3000);
        // include the edge cases: one-tap atoms and atoms spanning the signal
        let l = match i % 10 {
            0 => 1,
            1 => n,
            2 => n - 1,
            _ => rng.gen_range(1..=n.min(300)),
        };
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let direct = correlate_direct(&x, &a);
        let fft = correlate_with(&x, &a, CorrelationPath::Fft).unwrap();
        let scale = energy(&x).sqrt() * energy(&a).sqrt();
        let err = direct
            .iter()
            .zip(&fft)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
            / scale;
        worst = worst.max(if direct.len() == fft.len() {
            err
        } else {
            f64::INFINITY
        });
    }
    outcome(
        worst <= CORRELATION_RTOL,
        format!("worst error {worst:.2e} relative to |x||a| over {CORRELATION_PAIRS} pairs"),
    )
}

/// `|x - sum_i a_i phi_{m_i}(. - tau_i)|^2` for fixed events.
fn squared_error(x: &[f64], atoms: &[Vec<f64>], events: &[Event]) -> f64 {
    let mut r = x.to_vec();
    for e in events {
        for (v, w) in r[e.shift..].iter_mut().zip(&atoms[e.atom_id]) {
            *v -= e.amplitude * w;
        }
    }
    energy(&r)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for inst in 0..GRADIENT_INSTANCES {
        let (m, len, n) = (4usize, rng.gen_range(5..40), rng.gen_range(100..400));
        let d = init_dictionary(m, len, 4000 + inst as u64).unwrap();
        let atoms: Vec<Vec<f64>> = d.atoms().iter().map(|a| a.waveform().to_vec()).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // overlapping events are allowed; the objective is still quadratic
        let events: Vec<Event> = (0..rng.gen_range(1..12))
            .map(|_| Event {
                atom_id: rng.gen_range(0..m),
                shift: rng.gen_range(0..=n - len),
                amplitude: rng.gen_range(-2.0..2.0),
            })
            .collect();
        let mut r = x.clone();
        for e in &events {
            for (v, w) in r[e.shift..].iter_mut().zip(&atoms[e.atom_id]) {
                *v -= e.amplitude * w;
            }
        }
        let xs = Signal::new(x.clone(), FS).unwrap();
        let acc = accumulate(&events, &xs, &Signal::new(r, FS).unwrap(), &d).unwrap();
        for a in 0..m {
            // the accumulated sum is minus half the gradient of the error
            let fd: Vec<f64> = (0..len)
                .map(|k| {
                    let mut plus = atoms.clone();
                    let mut minus = atoms.clone();
                    plus[a][k] += h;
                    minus[a][k] -= h;
                    -(squared_error(&x, &plus, &events) - squared_error(&x, &minus, &events))
                        / (4.0 * h)
                })
                .collect();
            let g = acc.gradient(a);
            let diff: f64 = g
                .iter()
                .zip(&fd)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let scale = energy(g).sqrt().max(energy(&fd).sqrt());
            if scale > 0.0 {
                worst = worst.max(diff / scale);
            }
        }
    }
    outcome(
        worst <= GRADIENT_RTOL,
        format!("worst relative error {worst:.2e} over {GRADIENT_INSTANCES} instances"),
    )
}

fn hebbian_locality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let source = init_dictionary(3, 50, 505).unwrap();
    let mut d = init_dictionary(8, 50, 506).unwrap();
    let config = LearnConfig {
        learning_rate: 1e-2,
        ..LearnConfig::default()
    };
    let stop = StopCondition::new(Some(0.004), None).unwrap();
    let (mut idle_checked, mut idle_moved, mut active_moved) = (0, 0, 0);
    for _ in 0..50 {
        let events: Vec<Event> = (0..6)
            .map(|_| Event {
                atom_id: rng.gen_range(0..3),
                shift: rng.gen_range(0..=950),
                amplitude: rng.gen_range(-2.0..2.0),
            })
            .collect();
        let x = gen_from_dictionary(&source, &events, 0.05, 1000, FS, rng.gen()).unwrap();
        let before = d.clone();
        let step = learn_step(&x, &mut d, &stop, &config).unwrap();
        let mut counts = vec![0usize; d.len()];
        for e in &step.encoding.events {
            counts[e.atom_id] += 1;
        }
        for (m, &c) in counts.iter().enumerate() {
            let same = before.atoms()[m].waveform() == d.atoms()[m].waveform();
            if c == 0 {
                idle_checked += 1;
                idle_moved += usize::from(!same);
            } else {
                active_moved += usize::from(!same);
            }
        }
    }
    outcome(
        idle_checked > 0 && idle_moved == 0 && active_moved > 0,
        format!(
            "{idle_moved} of {idle_checked} idle atoms changed ({active_moved} active updates)"
        ),
    )
}

fn hann_tapered(raw: &Dictionary) -> Dictionary {
    let waveforms = raw
        .atoms()
        .iter()
        .map(|a| {
            let len = a.len() as f64;
            a.waveform()
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    v * (0.5 - 0.5 * (2.0 * std::f64::consts::PI * (k as f64 + 0.5) / len).cos())
                })
                .collect()
        })
        .collect();
    Dictionary::from_waveforms_normalized(waveforms).unwrap()
}

/// Mean similarity under the best one-to-one matching of learned to planted atoms.
fn matched_similarity(learned: &Dictionary, planted: &Dictionary) -> f64 {
    let m = planted.len();
    let sim: Vec<Vec<f64>> = learned
        .atoms()
        .iter()
        .map(|a| {
            planted
                .atoms()
                .iter()
                .map(|p| {
                    1.0 - evolution_rate_with_lag(a.waveform(), p.waveform(), a.len() - 1).unwrap()
                })
                .collect()
        })
        .collect();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = 0.0f64;
    permute(&mut perm, 0, &mut |p| {
        best = best.max(p.iter().enumerate().map(|(i, &j)| sim[i][j]).sum::<f64>() / m as f64);
    });
    best
}

fn permute(v: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn planted_recovery() -> Outcome {
    let t0 = Instant::now();
    let wlen = PLANTED_WINDOW_LEN;
    let config = LearnConfig {
        learning_rate: PLANTED_ETA,
        ..LearnConfig::default()
    };
    let stop = StopCondition::default();
    let mut scores = Vec::new();
    for seed in 1..=PLANTED_SEEDS {
        let planted = hann_tapered(&init_dictionary(4, 50, 1000 + seed).unwrap());
        let mut d = init_dictionary(4, 50, 2000 + seed).unwrap();
        for w in 0..PLANTED_WINDOWS {
            let mut rng = window_rng(seed, w);
            let events: Vec<Event> = (0..PLANTED_EVENTS)
                .map(|_| Event {
                    atom_id: rng.gen_range(0..4),
                    shift: rng.gen_range(0..=wlen - 50),
                    amplitude: rng.gen_range(0.5..1.5) * if rng.gen() { 1.0 } else { -1.0 },
                })
                .collect();
            let clean = gen_from_dictionary(&planted, &events, 0.0, wlen, FS, 0).unwrap();
            // 20 dB SNR against the clean window's power
            let sigma = (energy(clean.samples()) / wlen as f64 / 100.0).sqrt();
            let noise = gaussian_noise(wlen, sigma, rng.gen()).unwrap();
            let x: Vec<f64> = clean
                .samples()
                .iter()
                .zip(&noise)
                .map(|(a, b)| a + b)
                .collect();
            learn_step(&Signal::new(x, FS).unwrap(), &mut d, &stop, &config).unwrap();
        }
        scores.push(matched_similarity(&d, &planted));
    }
    let passed = scores
        .iter()
        .filter(|&&s| s >= PLANTED_MIN_SIMILARITY)
        .count();
    let elapsed = t0.elapsed();
    let list: Vec<String> = scores.iter().map(|s| format!("{s:.3}")).collect();
    outcome(
        passed >= PLANTED_MIN_PASS && elapsed < PLANTED_BUDGET,
        format!(
            "{passed}/{PLANTED_SEEDS} seeds >= {PLANTED_MIN_SIMILARITY} [{}], {:.1}s",
            list.join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn short_config(stages: &[(&str, f64)]) -> RunConfig {
    RunConfig {
        monitor: MonitorConfig {
            delta_s: RIG_DELTA_S,
            ..MonitorConfig::default()
        },
        stages: stages
            .iter()
            .map(|(l, d)| StageSpec {
                label: (*l).into(),
                duration_s: *d,
            })
            .collect(),
        ..RunConfig::default()
    }
}

fn evolution_calibration() -> Outcome {
    let d = init_dictionary(4, 50, 707).unwrap();
    let identical = d
        .atoms()
        .iter()
        .map(|a| evolution_rate_with_lag(a.waveform(), a.waveform(), a.len() / 4).unwrap())
        .fold(0.0, f64::max);
    // supports [0, 10) and [40, 50) stay disjoint under every scanned lag
    let mut a = vec![0.0; 50];
    let mut b = vec![0.0; 50];
    for k in 0..10 {
        a[k] = (k as f64 + 1.0).sin();
        b[40 + k] = (k as f64 + 2.0).cos();
    }
    let disjoint = evolution_rate_with_lag(&a, &b, 12).unwrap();

    let mut config = short_config(&[("BL", 60.0), ("IR7", 60.0), ("IR14", 60.0)]);
    config.learn.learning_rate = 0.0;
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path(), &RunOptions::default()).unwrap();
    let reports = load_reports(dir.path()).unwrap();
    let frozen = reports
        .iter()
        .map(|r| r.max_evolution_rate())
        .fold(0.0, f64::max);
    outcome(
        identical == 0.0 && disjoint == 1.0 && frozen == 0.0 && !reports.is_empty(),
        format!(
            "identical {identical}, disjoint {disjoint}, frozen run max {frozen} over {} reports",
            reports.len()
        ),
    )
}

struct RigRun {
    /// Boundary spike factors (peak after / median before), one per boundary.
    ratios: Vec<f64>,
    /// Weighted center frequency per stage, BL first.
    centroids: Vec<Option<f64>>,
}

fn rig_run(seed: u64, dir: &Path) -> RigRun {
    let mut config = short_config(&[("BL", 300.0), ("IR7", 300.0), ("IR14", 300.0)]);
    config.run = RunParams {
        signal_seed: seed,
        ..RunParams::default()
    };
    run(&config, dir, &RunOptions::default()).unwrap();
    let reports = load_reports(dir).unwrap();
    let boundaries: Vec<f64> = config.schedule()[1..]
        .iter()
        .map(|s| config.stream_time(s.first_window))
        .collect();
    let eps = 1e-6;
    let ratios = boundaries
        .iter()
        .map(|&t| {
            let mut before: Vec<f64> = reports
                .iter()
                .filter(|r| r.stream_time > t - BASELINE_SPAN_S + eps && r.stream_time <= t + eps)
                .map(|r| r.max_evolution_rate())
                .collect();
            let peak = reports
                .iter()
                .filter(|r| r.stream_time > t + eps && r.stream_time <= t + 2.0 * RIG_DELTA_S + eps)
                .map(|r| r.max_evolution_rate())
                .fold(0.0, f64::max);
            if before.is_empty() {
                return 0.0;
            }
            before.sort_by(f64::total_cmp);
            let mid = before.len() / 2;
            let median = if before.len() % 2 == 0 {
                0.5 * (before[mid - 1] + before[mid])
            } else {
                before[mid]
            };
            peak / median
        })
        .collect();
    let centroids = stage_summaries(dir)
        .unwrap()
        .iter()
        .map(|s| s.weighted_center_frequency())
        .collect();
    RigRun { ratios, centroids }
}

fn fault_transition(runs: &[RigRun], elapsed: Duration) -> Outcome {
    let passed = runs
        .iter()
        .filter(|r| r.ratios.len() == 2 && r.ratios.iter().all(|&q| q > SPIKE_FACTOR))
        .count();
    let list: Vec<String> = runs
        .iter()
        .map(|r| {
            r.ratios
                .iter()
                .map(|q| format!("{q:.0}"))
                .collect::<Vec<_>>()
                .join("/")
        })
        .collect();
    outcome(
        passed >= RIG_MIN_PASS && elapsed < RIG_BUDGET,
        format!(
            "{passed}/{RIG_SEEDS} seeds above {SPIKE_FACTOR}x at both boundaries [{}], {:.0}s",
            list.join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn centroid_trend(runs: &[RigRun]) -> Outcome {
    let passed = runs
        .iter()
        .filter(|r| match r.centroids.as_slice() {
            [Some(bl), faults @ ..] if faults.len() == 2 => faults
                .iter()
                .all(|f| f.is_some_and(|f| f >= CENTROID_GAIN * bl)),
            _ => false,
        })
        .count();
    let list: Vec<String> = runs
        .iter()
        .map(|r| {
            r.centroids
                .iter()
                .map(|c| c.map_or("-".into(), |c| format!("{c:.0}")))
                .collect::<Vec<_>>()
                .join("/")
        })
        .collect();

    let tone: Vec<f64> = (0..50)
        .map(|k| (2.0 * std::f64::consts::PI * 1000.0 * k as f64 / f64::from(FS)).sin())
        .collect();
    let bin = f64::from(FS) / (8.0 * 50.0);
    let cf = center_frequency_padded(&tone, FS, 8).unwrap();
    outcome(
        passed >= RIG_MIN_PASS && (cf - 1000.0).abs() <= bin,
        format!(
            "{passed}/{RIG_SEEDS} seeds with both fault stages >= {CENTROID_GAIN}x baseline Hz [{}]; 1 kHz tone at {cf:.1} Hz",
            list.join(" ")
        ),
    )
}

fn determinism_and_resume() -> Outcome {
    let config = short_config(&[("BL", 30.0), ("IR7", 30.0)]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    run(&config, a.path(), &RunOptions::default()).unwrap();
    run(&config, b.path(), &RunOptions::default()).unwrap();
    run(
        &config,
        c.path(),
        &RunOptions {
            stop_after: Some(5),
        },
    )
    .unwrap();
    resume(c.path(), &RunOptions::default()).unwrap();
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    let same = |x: &Path, y: &Path| {
        read(x, EVENTS_FILE) == read(y, EVENTS_FILE)
            && read(x, FINAL_DICTIONARY_FILE) == read(y, FINAL_DICTIONARY_FILE)
    };
    let repeat = same(a.path(), b.path());
    let resumed = same(a.path(), c.path());
    outcome(
        repeat && resumed,
        format!("repeat identical: {repeat}, resumed identical: {resumed}"),
    )
}

fn encode_budget() -> Outcome {
    let config = RunConfig::default();
    let window = synthetic_window(&config, "BL", 0).unwrap();
    // An untrained dictionary needs the most events to reach the target.
    let d = init_dictionary(16, 50, 1).unwrap();
    let stop = StopCondition::new(None, Some(ENCODE_SRR_DB)).unwrap();
    // warm-up run keeps page faults out of the timing
    encode(&window, &d, &stop).unwrap();
    let t0 = Instant::now();
    let r = encode(&window, &d, &stop).unwrap();
    let elapsed = t0.elapsed();
    outcome(
        elapsed < ENCODE_BUDGET && r.srr_db >= ENCODE_SRR_DB,
        format!(
            "{} samples, {} events, srr {:.2} dB in {:.3}s",
            window.len(),
            r.events.len(),
            r.srr_db,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let suite = Instant::now();
    let mut failed = 0;
    let mut report = |name: &str, o: Outcome| {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    };

    report("1 mp exact recovery", mp_exact_recovery());
    report("2 energy identity", energy_identity());
    report("3 correlation oracle", correlation_oracle());
    report("4 gradient check", gradient_check());
    report("5 hebbian locality", hebbian_locality());
    report("6 planted recovery", planted_recovery());
    report("7 evolution-rate calibration", evolution_calibration());

    let t0 = Instant::now();
    let runs: Vec<RigRun> = (1..=RIG_SEEDS)
        .map(|seed| rig_run(seed, tempfile::tempdir().unwrap().path()))
        .collect();
    let rig_elapsed = t0.elapsed();
    report("8 fault transition", fault_transition(&runs, rig_elapsed));
    report("9 center-frequency trend", centroid_trend(&runs));

    report("10 determinism and resume", determinism_and_resume());
    let perf = encode_budget();
    let total = suite.elapsed();
    report(
        "11 performance budget",
        outcome(
            perf.pass && total < SUITE_BUDGET,
            format!("{}; suite {:.0}s", perf.detail, total.as_secs_f64()),
        ),
    );

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
