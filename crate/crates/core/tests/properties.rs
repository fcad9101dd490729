mod common;

use common::{close, random_scene, K};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srf_core::emotion::{
    average_modality, normalize_unit, EmotionTaxonomy, EmotionVector, Modality, ModalitySnapshot,
};
use srf_core::fusion::{run, RunBounds};
use srf_core::reward::{reward, FusionConfig};
use srf_core::stream::{
    format_frame, merge_streams, parse_frame, synth_trace, ChannelRegistry, FramePayload,
    PerceptorFrame, PresenceObservation,
};

fn raw_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, K).prop_filter("non-zero", |v| v.iter().any(|x| *x > 1e-6))
}

fn unit_vector() -> impl Strategy<Value = EmotionVector> {
    raw_vector().prop_map(|v| normalize_unit(&EmotionVector::new(v)).unwrap())
}

fn default_cfg() -> FusionConfig {
    FusionConfig::default_for(&EmotionTaxonomy::default()).unwrap()
}

fn registry() -> ChannelRegistry {
    let mut r = ChannelRegistry::new(EmotionTaxonomy::default());
    r.register_identity("cam", Modality::Fer).unwrap();
    r.register_identity("mic", Modality::Ser).unwrap();
    r.register_presence("det").unwrap();
    r
}

proptest! {
    #[test]
    fn normalize_gives_unit_norm_and_is_idempotent(v in raw_vector()) {
        let u = normalize_unit(&EmotionVector::new(v)).unwrap();
        prop_assert!((u.l2_norm() - 1.0).abs() <= 1e-9);
        let uu = normalize_unit(&u).unwrap();
        for (a, b) in u.values().iter().zip(uu.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalize_preserves_unique_argmax(v in raw_vector()) {
        let raw = EmotionVector::new(v.clone());
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        prop_assume!(v.iter().filter(|x| **x == max).count() == 1);
        prop_assert_eq!(normalize_unit(&raw).unwrap().argmax(), raw.argmax());
    }

    #[test]
    fn reward_is_bounded(x in unit_vector(), y in unit_vector(), p in 0.0f64..=1.0) {
        let cfg = default_cfg();
        let r = reward(Some(&x), Some(&y), p, &cfg).unwrap();
        prop_assert!(r.total.abs() <= cfg.reward_bound() + 1e-12);
    }

    #[test]
    fn reward_is_linear_in_each_term(x in unit_vector(), y in unit_vector(), p in 0.0f64..=1.0) {
        let cfg = default_cfg();
        let all = reward(Some(&x), Some(&y), p, &cfg).unwrap();
        let fer = reward(Some(&x), None, 0.0, &cfg).unwrap();
        let ser = reward(None, Some(&y), 0.0, &cfg).unwrap();
        let pres = reward(None, None, p, &cfg).unwrap();
        prop_assert!(close(all.total, fer.total + ser.total + pres.total, 1e-12));
        prop_assert!(close(fer.total, cfg.k_fer * cfg.w_fer.dot(&x), 1e-12));
        prop_assert!(close(pres.total, cfg.k_presence * p, 1e-12));
    }

    #[test]
    fn reward_is_equivariant_under_label_permutation(x in unit_vector(), seed in any::<u64>()) {
        let cfg = default_cfg();
        let mut perm: Vec<usize> = (0..K).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let apply = |v: &EmotionVector| EmotionVector::new(perm.iter().map(|i| v.values()[*i]).collect());
        let mut permuted = cfg.clone();
        permuted.w_fer = apply(&cfg.w_fer);
        permuted.w_ser = apply(&cfg.w_ser);
        let a = reward(Some(&x), Some(&x), 0.5, &cfg).unwrap();
        let b = reward(Some(&apply(&x)), Some(&apply(&x)), 0.5, &permuted).unwrap();
        prop_assert!(close(a.total, b.total, 1e-12));
    }

    #[test]
    fn average_ignores_model_order(vs in prop::collection::vec(unit_vector(), 1..6), seed in any::<u64>()) {
        let rows: Vec<(String, EmotionVector)> =
            vs.iter().enumerate().map(|(i, v)| (format!("m{i}"), v.clone())).collect();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = average_modality(&ModalitySnapshot::new(Modality::Fer, K, rows).unwrap()).unwrap();
        let b = average_modality(&ModalitySnapshot::new(Modality::Fer, K, shuffled).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!(a.l2_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn merge_is_independent_of_source_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, _, script) = random_scene(&mut rng, 3_000);
        let frames = synth_trace(&script, K, seed).unwrap();
        let mut sources: Vec<Vec<PerceptorFrame>> = Vec::new();
        let mut ids: Vec<&str> = frames.iter().map(|f| f.channel.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        for id in &ids {
            sources.push(frames.iter().filter(|f| f.channel == *id).cloned().collect());
        }
        let forward = merge_streams(sources.clone());
        sources.shuffle(&mut rng);
        prop_assert_eq!(&merge_streams(sources), &forward);
        prop_assert_eq!(forward, frames);
    }

    #[test]
    fn parse_never_panics(line in ".{0,80}") {
        let _ = parse_frame(&line, &registry());
    }

    #[test]
    fn parse_never_panics_on_structured_noise(
        t in "[0-9]{0,22}|-1",
        ch in "cam|mic|det|x",
        kind in "FER|SER|PRESENCE|fer|",
        payload in "[0-9.,e+\\-=a-z]{0,40}",
    ) {
        let _ = parse_frame(&format!("{t}|{ch}|{kind}|{payload}"), &registry());
    }

    #[test]
    fn emotion_frames_round_trip(t in any::<u64>(), v in raw_vector(), fer in any::<bool>()) {
        let (ch, m) = if fer { ("cam", Modality::Fer) } else { ("mic", Modality::Ser) };
        let frame = PerceptorFrame::emotion(t, ch, m, EmotionVector::new(v));
        prop_assert_eq!(parse_frame(&format_frame(&frame), &registry()).unwrap(), frame);
    }

    #[test]
    fn presence_frames_round_trip(t in any::<u64>(), faces in prop::option::of(0u32..10), voice in prop::option::of(any::<bool>())) {
        prop_assume!(faces.is_some() || voice.is_some());
        let frame = PerceptorFrame::presence(t, "det", PresenceObservation { faces, voice });
        prop_assert_eq!(parse_frame(&format_frame(&frame), &registry()).unwrap(), frame);
    }

    #[test]
    fn dropping_a_modality_only_changes_its_component(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cfg, registry, script) = random_scene(&mut rng, 5_000);
        let frames = synth_trace(&script, K, seed).unwrap();
        let Some(first) = frames.first() else { return Ok(()) };
        let bounds = RunBounds { epoch: Some(first.t), until: Some(frames.last().unwrap().t + 1) };
        let full = run(frames.clone(), &cfg, &registry, bounds).unwrap();
        let no_ser: Vec<PerceptorFrame> = frames
            .into_iter()
            .filter(|f| !matches!(f.payload, FramePayload::Emotion { modality: Modality::Ser, .. }))
            .collect();
        let reduced = run(no_ser, &cfg, &registry, bounds).unwrap();
        prop_assert_eq!(full.len(), reduced.len());
        for (a, b) in full.iter().zip(&reduced) {
            prop_assert_eq!(a.r_fer, b.r_fer);
            prop_assert_eq!(a.r_presence, b.r_presence);
            prop_assert_eq!(b.r_ser, 0.0);
            prop_assert!(b.x_ser.is_none());
        }
    }
}
