mod common;

use std::fs::File;
use std::io::BufReader;

use common::{close, oracle, presence_by_slots, random_scene, K};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srf_core::config::RunConfig;
use srf_core::fusion::{read_records, run, FusionEngine, RunBounds};
use srf_core::reward::RewardSample;
use srf_core::stream::{read_trace, synth_trace};

fn assert_matches_oracle(samples: &[RewardSample], expected: &[common::OracleSample]) {
    assert_eq!(samples.len(), expected.len(), "tick count");
    for (s, o) in samples.iter().zip(expected) {
        assert_eq!(s.tick_time, o.t);
        assert!(
            close(s.r_fer, o.fer, 1e-12),
            "fer at {}: {} vs {}",
            o.t,
            s.r_fer,
            o.fer
        );
        assert!(
            close(s.r_ser, o.ser, 1e-12),
            "ser at {}: {} vs {}",
            o.t,
            s.r_ser,
            o.ser
        );
        assert!(
            close(s.presence, o.presence, 1e-12),
            "presence at {}: {} vs {}",
            o.t,
            s.presence,
            o.presence
        );
        assert!(close(s.r_presence, o.presence_term, 1e-12));
        assert!(
            close(s.r_total, o.total, 1e-12),
            "total at {}: {} vs {}",
            o.t,
            s.r_total,
            o.total
        );
    }
}

#[test]
fn random_scenes_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..20 {
        let (cfg, registry, script) = random_scene(&mut rng, 20_000);
        let frames = synth_trace(&script, K, seed).unwrap();
        let samples = run(frames.clone(), &cfg, &registry, RunBounds::default()).unwrap();
        assert_matches_oracle(&samples, &oracle(&frames, &cfg, None, None));
    }
}

#[test]
fn explicit_epoch_and_until_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..10 {
        let (cfg, registry, script) = random_scene(&mut rng, 8_000);
        let frames = synth_trace(&script, K, seed).unwrap();
        let epoch = script.start_ms.saturating_sub(seed * 37);
        let until = script.start_ms + script.total_duration_ms() + 1500;
        let bounds = RunBounds {
            epoch: Some(epoch),
            until: Some(until),
        };
        let samples = run(frames.clone(), &cfg, &registry, bounds).unwrap();
        assert_matches_oracle(&samples, &oracle(&frames, &cfg, Some(epoch), Some(until)));
    }
}

#[test]
fn interval_presence_agrees_with_slot_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for seed in 0..10 {
        let (cfg, _, script) = random_scene(&mut rng, 3_000);
        let frames = synth_trace(&script, K, seed).unwrap();
        let epoch = frames.first().map_or(0, |f| f.t);
        for o in oracle(&frames, &cfg, None, None) {
            let slots = presence_by_slots(&frames, epoch, o.t, cfg.presence_window_ms);
            assert!(
                close(o.presence, slots, 1e-12),
                "{} vs {slots} at {}",
                o.presence,
                o.t
            );
        }
    }
}

#[test]
fn online_ticks_match_offline_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for seed in 0..10 {
        let (cfg, registry, script) = random_scene(&mut rng, 10_000);
        let frames = synth_trace(&script, K, seed).unwrap();
        let offline = run(frames.clone(), &cfg, &registry, RunBounds::default()).unwrap();
        let mut engine = FusionEngine::new(cfg.clone(), registry.clone(), None).unwrap();
        let mut online = Vec::new();
        for f in frames.iter().cloned() {
            let t = f.t;
            online.extend(engine.push(f).unwrap());
            // A wall-clock tick that never closes ticks at or after the next frame.
            online.extend(engine.tick(t.saturating_sub(1)));
        }
        if let Some(last) = frames.last() {
            online.extend(engine.tick(last.t));
        }
        assert_eq!(online, offline);
    }
}

#[test]
fn demo_golden_matches_oracle_and_replay() {
    let dir = common::demo_dir();
    let cfg = RunConfig::load(&dir.join("config.toml")).unwrap();
    let (frames, diagnostics) = read_trace(
        BufReader::new(File::open(dir.join("happy.srft")).unwrap()),
        &cfg.registry,
    );
    assert!(diagnostics.is_empty());
    let golden = read_records(BufReader::new(File::open(dir.join("happy.srfr")).unwrap())).unwrap();
    let expected = oracle(&frames, &cfg.fusion, None, None);
    assert_eq!(golden.len(), expected.len());
    for (g, o) in golden.iter().zip(&expected) {
        assert_eq!(g.tick_time, o.t);
        assert!(close(g.r_total, o.total, 1e-12));
        assert!(close(g.presence, o.presence, 1e-12));
    }
    let samples = run(frames, &cfg.fusion, &cfg.registry, RunBounds::default()).unwrap();
    let replayed: Vec<_> = samples.iter().map(srf_core::RewardRecord::from).collect();
    assert_eq!(replayed, golden);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn short_scenes_match_oracle(scene_seed in any::<u64>(), trace_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(scene_seed);
        let (cfg, registry, script) = random_scene(&mut rng, 4_000);
        let frames = synth_trace(&script, K, trace_seed).unwrap();
        let samples = run(frames.clone(), &cfg, &registry, RunBounds::default()).unwrap();
        let expected = oracle(&frames, &cfg, None, None);
        prop_assert_eq!(samples.len(), expected.len());
        for (s, o) in samples.iter().zip(&expected) {
            prop_assert!(close(s.r_total, o.total, 1e-12));
        }
    }
}
