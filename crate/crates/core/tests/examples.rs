//! Hand-derived worked examples and end-to-end file round trips.

mod common;

use garl_core::engine::{run_campaign, CampaignConfig, Method};
use garl_core::episode::{DetectionEvent, TerminalOutcome};
use garl_core::ga::{rank_population, select_parents, trace_objectives, FitnessVector, Individual};
use garl_core::metrics::{classify, Evidence, ViolationType};
use garl_core::persist;
use garl_core::rl::{select_action, Mlp};
use garl_core::world::{MapName, MapProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn timeout_scores_the_map_diagonal() {
    let diag = MapProfile::by_name(MapName::Court).diagonal();
    assert!((diag - 40f64.hypot(40.0)).abs() < 1e-9);
    let mut t = common::trace(&[[3.0, 4.0, 10.0]], TerminalOutcome::Timeout);
    t.duration = 120.0;
    let (dtl, ttl) = trace_objectives(&t, diag, 120.0);
    assert!((dtl - 56.5685424949).abs() < 1e-9);
    assert_eq!(ttl, 120.0);
}

#[test]
fn off_marker_landing_on_distractor_is_type_one_with_evidence() {
    let mut t = common::trace(&[[4.0, 0.0, 0.0]], TerminalOutcome::Landed { x: 4.0, y: 0.0 });
    let event = |accepted, fp| DetectionEvent {
        tick: 0,
        t: 0.0,
        confidence: 0.9,
        estimated_position: [4.0, 0.0],
        is_false_positive: fp,
        accepted,
    };
    t.detections = vec![event(false, true), event(true, false), event(true, true)];
    let r = classify(&t).unwrap().unwrap();
    assert_eq!(r.vtype, ViolationType::I);
    assert_eq!(r.evidence, Evidence::FalsePositives { detections: vec![2] });
    assert!((r.dtl - 4.0).abs() < 1e-12);

    t.detections.clear();
    assert_eq!(classify(&t).unwrap().unwrap().evidence, Evidence::LocalizationDrift);

    let near = common::trace(&[[0.3, 0.0, 0.0]], TerminalOutcome::Landed { x: 0.3, y: 0.0 });
    assert_eq!(classify(&near).unwrap(), None);
}

#[test]
fn non_terminal_trace_is_rejected() {
    let mut t = common::trace(&[[0.0, 0.0, 5.0]], TerminalOutcome::Timeout);
    t.outcome = None;
    assert!(classify(&t).is_err());
}

#[test]
fn full_exploration_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = Mlp::new(&[4, 64, 64, 5], &mut rng);
    let mut counts = [0usize; 5];
    let n = 10_000;
    for _ in 0..n {
        counts[select_action(&q, &[0.1, 0.2, -0.3, 0.4], 1.0, &mut rng)] += 1;
    }
    let e = n as f64 / 5.0;
    let chi2: f64 = counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
    // 4 degrees of freedom, p = 0.001
    assert!(chi2 < 18.47, "chi-square {chi2} for {counts:?}");
}

#[test]
fn selection_matches_sorted_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut union: Vec<Individual<usize>> = (0..40)
            .map(|i| Individual {
                chromosome: i,
                fitness: FitnessVector {
                    dtl: rng.random_range(0..4) as f64,
                    ttl: rng.random_range(0..4) as f64,
                    diversity: rng.random_range(0.0..1.0),
                },
                rank: 0,
                crowding: 0.0,
            })
            .collect();
        rank_population(&mut union);
        let points: Vec<[f64; 3]> = union.iter().map(|i| i.fitness.objectives()).collect();
        assert_eq!(union.iter().map(|i| i.rank).collect::<Vec<_>>(), common::brute_force_ranks(&points));
        let mut oracle: Vec<&Individual<usize>> = union.iter().collect();
        oracle.sort_by(|a, b| {
            a.rank
                .cmp(&b.rank)
                .then(b.crowding.partial_cmp(&a.crowding).unwrap())
                .then(a.chromosome.cmp(&b.chromosome))
        });
        let want: Vec<usize> = oracle.iter().take(20).map(|i| i.chromosome).collect();
        let got: Vec<usize> = select_parents(&union, 20).iter().map(|i| i.chromosome).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn campaign_directory_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig::new(Method::Random, MapName::Court, "tphyolo-mls", 12, 3).unwrap();
    let result = run_campaign(&cfg, None, 2).unwrap();
    let dir = tmp.path().join("rep_0");
    let written = persist::write_campaign(&dir, &result, None, None).unwrap();
    assert_eq!(persist::verify_campaign(&dir).unwrap(), written);
    assert_eq!(written.episodes.len(), 12);
    for (e, r) in written.episodes.iter().zip(&result.episodes) {
        let t = persist::read_trace(&dir.join(&e.trace)).unwrap();
        assert_eq!(t, r.trace);
        assert_eq!(e.trace_hash, t.hash());
        assert_eq!(e.violation, classify(&t).unwrap().map(|v| v.vtype));
    }

    let path = dir.join(&written.episodes[0].trace);
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.insert(0, ' ');
    std::fs::write(&path, text).unwrap();
    assert!(persist::verify_campaign(&dir).is_err(), "tampered trace must fail verification");

    let report = tmp.path().join("report");
    let rows = persist::write_report(&[dir], &report).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].method, "random");
    for f in ["comparison.csv", "comparison.json", "type_counts.csv", "trajectories.csv"] {
        assert!(report.join(f).exists(), "missing {f}");
    }
    if rows[0].top_10.is_none() {
        let csv = std::fs::read_to_string(report.join("comparison.csv")).unwrap();
        assert!(csv.contains("cannot find"));
    }
}

#[test]
fn garl_without_weights_is_an_error() {
    let cfg = CampaignConfig::new(Method::Garl, MapName::Court, "mm-mls", 5, 0).unwrap();
    let err = run_campaign(&cfg, None, 1).unwrap_err().to_string();
    assert!(err.contains("garl train"), "{err}");
}
