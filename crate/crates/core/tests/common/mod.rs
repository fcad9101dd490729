//! Test support: an independent per-tick reward oracle and random scenes.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Stdio};

use rand::Rng;
use srf_core::emotion::{EmotionTaxonomy, EmotionVector, Modality};
use srf_core::reward::FusionConfig;
use srf_core::stream::{
    ChannelRegistry, Emission, FrameKind, FramePayload, PerceptorFrame, PresenceObservation,
    SynthChannel, SynthScript, SynthSegment,
};

pub const K: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSample {
    pub t: u64,
    pub total: f64,
    pub fer: f64,
    pub ser: f64,
    pub presence_term: f64,
    pub presence: f64,
}

/// `|a - b| <= tol * max(|a|, |b|, 1)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tick times the engine must emit for a time-sorted frame list.
pub fn tick_times(
    frames: &[PerceptorFrame],
    period: u64,
    epoch: Option<u64>,
    until: Option<u64>,
) -> Vec<u64> {
    let Some(epoch) = epoch.or_else(|| frames.first().map(|f| f.t)) else {
        return match until {
            Some(u) => (0..).map(|i| i * period).take_while(|t| *t < u).collect(),
            None => Vec::new(),
        };
    };
    let mut out = Vec::new();
    let mut t = epoch;
    loop {
        let keep = match until {
            Some(u) => t < u,
            None => frames.last().is_some_and(|f| t <= f.t),
        };
        if !keep {
            break;
        }
        out.push(t);
        t += period;
    }
    out
}

/// Presence intervals `[start, end)` of one channel's observations.
fn presence_intervals(obs: &[(u64, PresenceObservation)], window: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for (i, (t, o)) in obs.iter().enumerate() {
        if !o.is_present() {
            continue;
        }
        let mut end = t + window;
        if let Some((next, _)) = obs.get(i + 1) {
            end = end.min(*next);
        }
        if end > *t {
            out.push((*t, end));
        }
    }
    out
}

/// Fraction of 1 ms slots in `[lo, hi]` covered by the union of intervals.
fn covered_fraction(mut intervals: Vec<(u64, u64)>, lo: u64, hi: u64) -> f64 {
    let end = hi + 1;
    intervals.retain(|(s, e)| *e > lo && *s < end);
    intervals.sort_unstable();
    let mut covered = 0u64;
    let mut cursor = lo;
    for (s, e) in intervals {
        let s = s.max(cursor);
        let e = e.min(end);
        if e > s {
            covered += e - s;
            cursor = e;
        }
    }
    covered as f64 / (end - lo) as f64
}

/// Slot-by-slot presence fraction; a second, slower reference.
pub fn presence_by_slots(frames: &[PerceptorFrame], epoch: u64, tick: u64, window: u64) -> f64 {
    let lo = epoch.max((tick + 1).saturating_sub(window));
    let mut by_channel: BTreeMap<&str, Vec<(u64, PresenceObservation)>> = BTreeMap::new();
    for f in frames.iter().filter(|f| f.t <= tick) {
        if let FramePayload::Presence(o) = &f.payload {
            by_channel.entry(&f.channel).or_default().push((f.t, *o));
        }
    }
    let mut present = 0u64;
    for s in lo..=tick {
        let hit = by_channel.values().any(|obs| {
            obs.iter()
                .rev()
                .find(|(t, _)| *t <= s)
                .is_some_and(|(t, o)| s < t + window && o.is_present())
        });
        if hit {
            present += 1;
        }
    }
    present as f64 / (tick - lo + 1) as f64
}

/// Recomputes every tick from the full frame history.
pub fn oracle(
    frames: &[PerceptorFrame],
    cfg: &FusionConfig,
    epoch: Option<u64>,
    until: Option<u64>,
) -> Vec<OracleSample> {
    let ticks = tick_times(frames, cfg.tick_period_ms, epoch, until);
    let epoch = epoch.or_else(|| frames.first().map(|f| f.t)).unwrap_or(0);
    ticks
        .into_iter()
        .map(|tick| {
            let seen: Vec<&PerceptorFrame> = frames.iter().filter(|f| f.t <= tick).collect();
            let modality_term = |m: Modality, window: u64, w: &EmotionVector, k: f64| {
                let mut newest: BTreeMap<&str, (u64, &EmotionVector)> = BTreeMap::new();
                for f in &seen {
                    if let FramePayload::Emotion { modality, raw } = &f.payload {
                        if *modality == m {
                            newest.insert(&f.channel, (f.t, raw));
                        }
                    }
                }
                let fresh: Vec<Vec<f64>> = newest
                    .values()
                    .filter(|(t, _)| tick - t < window)
                    .map(|(_, raw)| unit(raw.values()))
                    .collect();
                if fresh.is_empty() {
                    return 0.0;
                }
                let mut mean = vec![0.0; w.len()];
                for v in &fresh {
                    for (m, x) in mean.iter_mut().zip(v) {
                        *m += x;
                    }
                }
                for m in &mut mean {
                    *m /= fresh.len() as f64;
                }
                k * dot(w.values(), &mean)
            };
            let fer = modality_term(Modality::Fer, cfg.fer_window_ms, &cfg.w_fer, cfg.k_fer);
            let ser = modality_term(Modality::Ser, cfg.ser_window_ms, &cfg.w_ser, cfg.k_ser);

            let mut by_channel: BTreeMap<&str, Vec<(u64, PresenceObservation)>> = BTreeMap::new();
            for f in &seen {
                if let FramePayload::Presence(o) = &f.payload {
                    by_channel.entry(&f.channel).or_default().push((f.t, *o));
                }
            }
            let intervals: Vec<(u64, u64)> = by_channel
                .values()
                .flat_map(|obs| presence_intervals(obs, cfg.presence_window_ms))
                .collect();
            let lo = epoch.max((tick + 1).saturating_sub(cfg.presence_window_ms));
            let presence = covered_fraction(intervals, lo, tick);
            let presence_term = cfg.k_presence * presence;
            OracleSample {
                t: tick,
                total: fer + ser + presence_term,
                fer,
                ser,
                presence_term,
                presence,
            }
        })
        .collect()
}

pub fn random_unit<R: Rng>(rng: &mut R, k: usize) -> EmotionVector {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return EmotionVector::new(v.into_iter().map(|x| x / n).collect());
        }
    }
}

pub fn random_profile<R: Rng>(rng: &mut R, k: usize) -> EmotionVector {
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            if rng.gen_bool(0.5) {
                rng.gen::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    let i = rng.gen_range(0..k);
    v[i] += 0.1 + rng.gen::<f64>();
    EmotionVector::new(v)
}

/// A random configuration, registry and synth script with at most four
/// channels and at most `max_ms` of data.
pub fn random_scene<R: Rng>(
    rng: &mut R,
    max_ms: u64,
) -> (FusionConfig, ChannelRegistry, SynthScript) {
    let taxonomy = EmotionTaxonomy::default();
    let mut cfg = FusionConfig::default_for(&taxonomy).unwrap();
    cfg.w_fer = random_unit(rng, K);
    cfg.w_ser = random_unit(rng, K);
    cfg.k_fer = rng.gen_range(0.0..2.0);
    cfg.k_ser = rng.gen_range(0.0..2.0);
    cfg.k_presence = rng.gen_range(0.0..2.0);
    cfg.tick_period_ms = *[50, 100, 100, 250].get(rng.gen_range(0..4)).unwrap();
    let tick = cfg.tick_period_ms;
    cfg.fer_window_ms = rng.gen_range(tick..=1500);
    cfg.ser_window_ms = rng.gen_range(tick..=3000);
    cfg.presence_window_ms = rng.gen_range(tick..=2000);

    let mut registry = ChannelRegistry::new(taxonomy);
    let n = rng.gen_range(1..=4);
    let mut channels = Vec::new();
    for i in 0..n {
        let kind = [FrameKind::Fer, FrameKind::Ser, FrameKind::Presence][rng.gen_range(0..3)];
        let id = format!("{}{i}", kind.as_str().to_lowercase());
        match kind.modality() {
            Some(m) => registry.register_identity(&id, m).unwrap(),
            None => registry.register_presence(&id).unwrap(),
        }
        channels.push((id, kind));
    }

    let mut segments = Vec::new();
    let mut remaining = rng.gen_range(1000..=max_ms);
    while remaining > 0 {
        let duration = rng.gen_range(200..=remaining.max(200)).min(remaining);
        let mut seg_channels = Vec::new();
        for (id, kind) in &channels {
            if rng.gen_bool(0.2) {
                continue;
            }
            let emission = match kind {
                FrameKind::Presence => Emission::Presence {
                    face_prob: rng.gen_bool(0.8).then(|| rng.gen::<f64>()),
                    voice_prob: Some(rng.gen::<f64>()),
                },
                kind => Emission::Emotion {
                    kind: *kind,
                    profile: random_profile(rng, K),
                    jitter: rng.gen_range(0.0..0.5),
                },
            };
            seg_channels.push(SynthChannel {
                id: id.clone(),
                rate_hz: rng.gen_range(0.5..30.0),
                emission,
            });
        }
        segments.push(SynthSegment {
            duration_ms: duration,
            channels: seg_channels,
        });
        remaining -= duration;
    }
    let script = SynthScript {
        start_ms: rng.gen_range(0..5000),
        segments,
    };
    (cfg, registry, script)
}

pub fn demo_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("demo")
}

/// Feeds each channel of `trace` over its own TCP connection to a spawned
/// `srf run --listen` and returns its stdout.
pub fn live_run(config: &Path, trace: &str) -> String {
    let mut child = Command::new(env!("CARGO_BIN_EXE_srf"))
        .args(["run", "--config"])
        .arg(config)
        .args(["--listen", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut banner = String::new();
    stderr.read_line(&mut banner).unwrap();
    let addr = banner
        .strip_prefix("srf: listening on ")
        .and_then(|s| s.split_whitespace().next())
        .unwrap_or_else(|| panic!("unexpected banner {banner:?}"))
        .to_string();
    let mut writers = Vec::new();
    for ch in ["cam0", "mic0", "det0"] {
        let body: String = trace
            .lines()
            .filter(|l| l.split('|').nth(1) == Some(ch))
            .map(|l| format!("{l}\n"))
            .collect();
        let addr = addr.clone();
        writers.push(std::thread::spawn(move || {
            let mut s = TcpStream::connect(addr).unwrap();
            for line in body.lines() {
                s.write_all(line.as_bytes()).unwrap();
                s.write_all(b"\n").unwrap();
            }
        }));
    }
    for w in writers {
        w.join().unwrap();
    }
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}
