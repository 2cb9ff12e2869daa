use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::mapping::AlignMap;
use crate::rng::{self, StdRng};

fn blob_stream(seed: u64, neg: [f64; 2], pos: [f64; 2], n: usize) -> Vec<Example> {
    let mut r = rng::seeded(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let label = Label::from_index(i % 2);
            let c = if label == Label::Pos { pos } else { neg };
            Example::new(vec![c[0] + noise.sample(&mut r), c[1] + noise.sample(&mut r)], label).unwrap()
        })
        .collect()
}

fn config(k: usize) -> MarlineConfig {
    MarlineConfig {
        ensemble_size: k,
        ..Default::default()
    }
}

const T: StreamId = StreamId(0);
const S1: StreamId = StreamId(1);
const S2: StreamId = StreamId(2);

#[test]
fn first_source_example_registers_one_pool() {
    let mut m = MarlineModel::new(config(5), 2, T).unwrap();
    let mut r = rng::seeded(1);
    let ex = Example::new(vec![0.0, 1.0], Label::Pos).unwrap();
    let out = m.observe(S1, &ex, &mut r).unwrap();
    assert!(out.registered && !out.drift && !out.weights_updated);
    assert_eq!(m.pools().count(), 1);
    let pool = m.pool(S1).unwrap();
    assert_eq!(pool.concept_count(), 1);
    assert_eq!(pool.current().ensemble.size(), 5);
    assert!(m.stats().all(|s| s.alpha == 1.0 && s.lambda_sc == 0.0));
    assert!(!m.is_registered(T));
}

#[test]
fn dimension_mismatch_rejected() {
    let mut m = MarlineModel::new(config(2), 2, T).unwrap();
    let mut r = rng::seeded(1);
    let bad = Example::new(vec![1.0], Label::Pos).unwrap();
    assert!(matches!(m.observe(T, &bad, &mut r), Err(Error::DimensionMismatch { .. })));
    assert!(m.predict(&[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn cold_start_prediction() {
    let m = MarlineModel::new(config(2), 2, T).unwrap();
    let p = m.predict(&[0.0, 0.0]).unwrap();
    assert_eq!(p.label, Label::Neg);
    assert_eq!(p.scores, [0.5, 0.5]);
    assert_eq!(p.path, PredictionPath::ColdStart);
}

#[test]
fn target_drift_resets_every_stat() {
    let mut m = MarlineModel::new(config(4), 2, T).unwrap();
    let mut r = rng::seeded(3);
    let source = blob_stream(10, [-2.0, -3.0], [-7.0, 2.0], 400);
    let before = blob_stream(11, [2.0, 3.0], [7.0, 8.0], 400);
    let after = blob_stream(12, [7.0, 8.0], [2.0, 3.0], 400);
    for (s, t) in source.iter().zip(&before) {
        m.observe(S1, s, &mut r).unwrap();
        m.observe(T, t, &mut r).unwrap();
    }
    assert!(m.stats().any(|s| s.lambda_sc > 0.0));
    let j_before = m.pool(T).unwrap().concept_count();
    let mut fired = false;
    for t in &after {
        let out = m.observe(T, t, &mut r).unwrap();
        if out.drift {
            assert_eq!(m.pool(T).unwrap().concept_count(), j_before + 1);
            assert!(m.stats().all(|s| s.lambda_sc == 0.0 && s.lambda_sw == 0.0 && s.alpha == 1.0));
            assert_eq!(m.pool(T).unwrap().detector().observed_count(), 0);
            fired = true;
            break;
        }
    }
    assert!(fired, "label swap never detected");
}

#[test]
fn source_drift_leaves_other_stats_alone() {
    let mut m = MarlineModel::new(config(3), 2, T).unwrap();
    let mut r = rng::seeded(4);
    for t in blob_stream(1, [2.0, 3.0], [7.0, 8.0], 300) {
        m.observe(T, &t, &mut r).unwrap();
    }
    for s in blob_stream(2, [2.0, 3.0], [7.0, 8.0], 300) {
        m.observe(S1, &s, &mut r).unwrap();
    }
    let snapshot: Vec<_> = m.stats().copied().collect();
    for s in blob_stream(3, [7.0, 8.0], [2.0, 3.0], 300) {
        if m.observe(S1, &s, &mut r).unwrap().drift {
            let now: Vec<_> = m.stats().copied().collect();
            assert_eq!(&now[..snapshot.len()], &snapshot[..]);
            assert!(now[snapshot.len()..].iter().all(|s| *s == SubClassifierStats::default()));
            return;
        }
    }
    panic!("source drift never detected");
}

#[test]
fn fresh_uniform_weights_match_target_ensemble() {
    let mut cfg = config(6);
    cfg.sigma = 0.0;
    let mut m = MarlineModel::new(cfg, 2, T).unwrap();
    let mut r = rng::seeded(5);
    let data = blob_stream(7, [2.0, 3.0], [7.0, 8.0], 60);
    for ex in &data {
        m.observe(T, ex, &mut r).unwrap();
    }
    let mut stats: Vec<_> = m.stats().copied().collect();
    stats.iter_mut().for_each(SubClassifierStats::reset);
    m.set_stats(&stats).unwrap();
    for x in [[2.0, 3.0], [4.5, 5.5], [7.0, 8.0], [0.0, 10.0]] {
        let p = m.predict(&x).unwrap();
        let e = m.pool(T).unwrap().current().ensemble.predict(&x).unwrap();
        assert_eq!(p.path, PredictionPath::Weighted);
        assert_eq!(p.label, e.predicted());
        assert!((p.scores[1] - e.prob_pos()).abs() < 1e-12);
    }
}

fn two_source_model(seed: u64) -> (MarlineModel, StdRng) {
    let mut m = MarlineModel::new(config(3), 2, T).unwrap();
    let mut r = rng::seeded(seed);
    let s1 = blob_stream(seed + 1, [-2.0, -3.0], [-7.0, 2.0], 200);
    let s2 = blob_stream(seed + 2, [2.0, 1.0], [7.0, 8.0], 200);
    let t = blob_stream(seed + 3, [2.0, 3.0], [7.0, 8.0], 40);
    for i in 0..200 {
        m.observe(S1, &s1[i], &mut r).unwrap();
        m.observe(S2, &s2[i], &mut r).unwrap();
        if i < t.len() {
            m.observe(T, &t[i], &mut r).unwrap();
        }
    }
    (m, r)
}

#[test]
fn single_voter_decides() {
    let (mut m, _) = two_source_model(20);
    let n = m.sub_classifier_count();
    // Pools are ordered T(0), S1(1), S2(2); hand the whole vote to S1's second member.
    let chosen = m.pool(T).unwrap().concept_count() * 3 + 1;
    let mut stats = vec![
        SubClassifierStats {
            lambda_sc: 0.0,
            lambda_sw: 1.0,
            alpha: 0.0,
        };
        n
    ];
    stats[chosen].alpha = 1.0;
    m.set_stats(&stats).unwrap();
    let w = m.weights();
    assert_eq!(w[chosen], 1.0);
    for x in [[2.0, 3.0], [7.0, 8.0], [4.0, 6.0]] {
        let p = m.predict(&x).unwrap();
        let member = m.member_distributions(&x).unwrap()[chosen];
        assert_eq!(p.label, member.predicted());
    }
}

#[test]
fn weighted_score_matches_explicit_double_sum() {
    let (mut m, mut r) = two_source_model(30);
    let n = m.sub_classifier_count();
    let stats: Vec<_> = (0..n)
        .map(|_| {
            let sc: f64 = r.random();
            let sw: f64 = r.random();
            SubClassifierStats {
                lambda_sc: sc,
                lambda_sw: sw,
                alpha: sc / (sc + sw),
            }
        })
        .collect();
    m.set_stats(&stats).unwrap();
    let x = [4.2, 5.1];

    // Oracle: walk pools and concepts, build each projection from the public
    // mapping pieces and sum omega * P directly.
    let sigma = m.config().sigma;
    let total: f64 = stats.iter().map(|s| s.alpha).filter(|&a| a > sigma).sum();
    let tgt = m.pool(T).unwrap().current();
    let v_tgt = tgt.tracker.concept_vector().unwrap();
    let c_tgt = tgt.tracker.centroid(Label::Pos).unwrap();
    let mut expect = [0.0; 2];
    let mut idx = 0;
    for pool in m.pools() {
        for (j, concept) in pool.concepts().iter().enumerate() {
            let current_target = pool.stream() == T && j + 1 == pool.concept_count();
            let xp = if current_target {
                x.to_vec()
            } else {
                let v_src = concept.tracker.concept_vector().unwrap();
                let c_src = concept.tracker.centroid(Label::Pos).unwrap();
                AlignMap::build(&v_src, &v_tgt).unwrap().project(&x, &c_tgt, &c_src).unwrap()
            };
            for tree in concept.ensemble.members() {
                let a = stats[idx].alpha;
                if a > sigma {
                    let d = tree.predict(&xp).unwrap();
                    expect[0] += a / total * d.prob_neg();
                    expect[1] += a / total * d.prob_pos();
                }
                idx += 1;
            }
        }
    }
    let p = m.predict(&x).unwrap();
    assert_eq!(p.path, PredictionPath::Weighted);
    assert!((p.scores[0] - expect[0]).abs() < 1e-12);
    assert!((p.scores[1] - expect[1]).abs() < 1e-12);
}

#[test]
fn source_weight_ratio_cases() {
    let mut m = MarlineModel::new(config(2), 2, T).unwrap();
    let mut r = rng::seeded(1);
    for ex in blob_stream(2, [0.0, 0.0], [3.0, 3.0], 10) {
        m.observe(T, &ex, &mut r).unwrap();
    }
    assert_eq!(m.source_weight_ratio(), 0.0);

    let (mut m, mut r) = two_source_model(40);
    let n = m.sub_classifier_count();
    let mut stats = vec![
        SubClassifierStats {
            lambda_sc: 0.0,
            lambda_sw: 1.0,
            alpha: 0.0,
        };
        n
    ];
    let last = n - 1;
    stats[last].alpha = 1.0;
    m.set_stats(&stats).unwrap();
    assert!((m.source_weight_ratio() - 1.0).abs() < 1e-12);

    let alphas: Vec<f64> = (0..n).map(|_| r.random()).collect();
    let stats: Vec<_> = alphas
        .iter()
        .map(|&a| SubClassifierStats {
            lambda_sc: a,
            lambda_sw: 1.0 - a,
            alpha: a,
        })
        .collect();
    m.set_stats(&stats).unwrap();
    let w = m.weights();
    let k = 3;
    let tj = m.pool(T).unwrap().concept_count();
    // target pool comes first; its current concept is the last k entries of its block
    let current = (tj - 1) * k..tj * k;
    let expect: f64 = w.iter().enumerate().filter(|(i, _)| !current.contains(i)).map(|(_, v)| v).sum();
    assert!((m.source_weight_ratio() - expect).abs() < 1e-12);
    assert!((0.0..=1.0 + 1e-9).contains(&m.source_weight_ratio()));
}

#[test]
fn training_provenance() {
    let (m, _) = two_source_model(50);
    for pool in m.pools() {
        let trained: u64 = pool.concepts().iter().map(|c| c.ensemble.trained_count()).sum();
        assert_eq!(trained, pool.observed(), "stream {}", pool.stream());
    }
    assert_eq!(m.pool(T).unwrap().observed(), 40);
    assert_eq!(m.pool(S1).unwrap().observed(), 200);
}

#[test]
fn warm_up_skips_weighting() {
    let mut m = MarlineModel::new(config(2), 2, T).unwrap();
    let mut r = rng::seeded(1);
    let ex = Example::new(vec![1.0, 1.0], Label::Pos).unwrap();
    let out = m.observe(T, &ex, &mut r).unwrap();
    assert!(!out.weights_updated);
    assert_eq!(m.predict(&[1.0, 1.0]).unwrap().path, PredictionPath::Fallback);
    let ex = Example::new(vec![-1.0, -1.0], Label::Neg).unwrap();
    assert!(m.observe(T, &ex, &mut r).unwrap().weights_updated);
}

#[test]
fn all_weights_zero_falls_back() {
    let (mut m, _) = two_source_model(60);
    let n = m.sub_classifier_count();
    let stats = vec![
        SubClassifierStats {
            lambda_sc: 0.1,
            lambda_sw: 0.9,
            alpha: 0.1,
        };
        n
    ];
    m.set_stats(&stats).unwrap();
    let p = m.predict(&[5.0, 5.0]).unwrap();
    assert_eq!(p.path, PredictionPath::Fallback);
    let e = m.pool(T).unwrap().current().ensemble.predict(&[5.0, 5.0]).unwrap();
    assert_eq!(p.label, e.predicted());
}

#[test]
fn duplicate_concept_does_not_change_argmax() {
    // The source replays the target stream with its own identically seeded
    // draw source, so its pool is an exact clone of the target pool.
    let data = blob_stream(70, [2.0, 3.0], [7.0, 8.0], 300);
    let mut alone = MarlineModel::new(config(4), 2, T).unwrap();
    let mut paired = MarlineModel::new(config(4), 2, T).unwrap();
    let (mut ra, mut rt, mut rs) = (rng::seeded(9), rng::seeded(9), rng::seeded(9));
    for ex in &data {
        alone.observe(T, ex, &mut ra).unwrap();
        paired.observe(S1, ex, &mut rs).unwrap();
        paired.observe(T, ex, &mut rt).unwrap();
    }
    let mut probe = rng::seeded(71);
    for _ in 0..500 {
        let x = [probe.random::<f64>() * 10.0 - 1.0, probe.random::<f64>() * 10.0];
        assert_eq!(alone.predict(&x).unwrap().label, paired.predict(&x).unwrap().label, "{x:?}");
    }
}

#[test]
fn weights_normalised_after_training() {
    let (m, _) = two_source_model(80);
    let w = m.weights();
    if m.stats().any(|s| s.alpha > m.config().sigma) {
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn snapshot_round_trip() {
    let (m, _) = two_source_model(90);
    let text = Snapshot::encode(&m).unwrap();
    let back = Snapshot::decode(&text).unwrap();
    assert_eq!(back, m);
    let mut probe = rng::seeded(91);
    for _ in 0..200 {
        let x = [probe.random::<f64>() * 12.0 - 4.0, probe.random::<f64>() * 12.0 - 4.0];
        let (a, b) = (m.predict(&x).unwrap(), back.predict(&x).unwrap());
        assert_eq!(a.label, b.label);
        assert_eq!(a.scores, b.scores);
    }
    assert!(Snapshot::decode(&text.replace("marline-snapshot", "other")).is_err());
}

#[test]
fn invalid_config_rejected() {
    for cfg in [
        MarlineConfig { theta: 0.0, ..Default::default() },
        MarlineConfig { sigma: 1.5, ..Default::default() },
        MarlineConfig { ensemble_size: 0, ..Default::default() },
    ] {
        assert!(MarlineModel::new(cfg, 2, T).is_err());
    }
}

#[test]
fn s2_pool_registered_lazily() {
    let (m, _) = two_source_model(100);
    assert!(m.is_registered(S2));
    assert!(!m.is_registered(StreamId(9)));
}
