mod common;

use garl_core::episode::{CollisionKind, EpisodeTrace, TerminalOutcome};
use garl_core::ga::{crowding_distance, diversity_of_vectors, nondominated_sort, nuclear_gene_crossover, property_mutation};
use garl_core::metrics::{classify, parameter_distance, top_k, trajectory_coverage, CoverageGrid, ViolationType};
use garl_core::rl::{build_state, reward, Mlp};
use garl_core::scenario::ScenarioChromosome;
use garl_core::world::{MapName, MapProfile};
use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..10, 1usize..12).prop_flat_map(|(n, d)| vec(vec(-100.0..100.0f64, d), n))
}

fn points() -> impl Strategy<Value = Vec<[f64; 3]>> {
    vec(prop::array::uniform3(0.0..5.0f64), 1..60)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn diversity_ignores_translation(v in vectors(), shift in -50.0..50.0f64) {
        let moved: Vec<Vec<f64>> = v.iter().map(|x| x.iter().map(|c| c + shift).collect()).collect();
        let a = diversity_of_vectors(&v).unwrap();
        let b = diversity_of_vectors(&moved).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(close(*x, *y));
        }
    }

    #[test]
    fn diversity_permutes_with_generation(v in vectors()) {
        let mut rev = v.clone();
        rev.reverse();
        let a = diversity_of_vectors(&v).unwrap();
        let mut b = diversity_of_vectors(&rev).unwrap();
        b.reverse();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(close(*x, *y));
        }
    }

    #[test]
    fn fronts_partition_and_front_zero_is_undominated(p in points()) {
        let fronts = nondominated_sort(&p);
        let ranks = common::fronts_to_ranks(&fronts, p.len());
        prop_assert!(ranks.iter().all(|r| *r != usize::MAX));
        for &i in &fronts[0] {
            for &j in &fronts[0] {
                prop_assert!(!common::dominates(&p[i], &p[j]));
            }
        }
    }

    #[test]
    fn crowding_is_nonnegative_with_infinite_extremes(p in points()) {
        let d = crowding_distance(&p);
        prop_assert_eq!(d.len(), p.len());
        prop_assert!(d.iter().all(|x| *x >= 0.0));
        if p.len() <= 2 {
            prop_assert!(d.iter().all(|x| x.is_infinite()));
        } else {
            prop_assert!(d.iter().any(|x| x.is_infinite()));
        }
    }

    #[test]
    fn mutation_returns_a_maximizing_candidate(
        m in vec(0.0..1.0f64, 1..10),
        y in vec(0.0..1.0f64, 0..30),
    ) {
        let got = property_mutation(&m, &y).unwrap();
        prop_assert!(m.contains(&got));
        let score = |c: f64| y.iter().map(|v| (c - v).abs()).sum::<f64>();
        prop_assert!(m.iter().all(|c| score(*c) <= score(got)));
        prop_assert_eq!(got, common::mutation_pick(&m, &y));
    }

    #[test]
    fn crossover_of_identical_parents_is_identity(seed in any::<u64>(), s in 0usize..64) {
        let profile = MapProfile::by_name(MapName::Court);
        let a = ScenarioChromosome::random(&mut ChaCha8Rng::seed_from_u64(seed), &profile);
        let s = s % a.nuclear_len();
        let (x, y) = nuclear_gene_crossover(&a, &a, s).unwrap();
        prop_assert_eq!(&x, &a);
        prop_assert_eq!(&y, &a);
    }

    #[test]
    fn parameter_distance_translation_and_scale(v in vectors(), shift in -10.0..10.0f64, k in 0.1..10.0f64) {
        let base = parameter_distance(&v).unwrap();
        let moved: Vec<Vec<f64>> = v.iter().map(|x| x.iter().map(|c| c + shift).collect()).collect();
        let scaled: Vec<Vec<f64>> = v.iter().map(|x| x.iter().map(|c| c * k).collect()).collect();
        prop_assert!(close(parameter_distance(&moved).unwrap(), base));
        prop_assert!(close(parameter_distance(&scaled).unwrap(), k * base));
    }

    #[test]
    fn coverage_is_monotone(
        a in vec(prop::array::uniform3(-20.0..20.0f64), 1..20),
        b in vec(prop::array::uniform3(-20.0..20.0f64), 1..20),
    ) {
        let grid = CoverageGrid::default();
        let lift = |p: &[f64; 3]| [p[0], p[1], p[2].abs() * 0.8];
        let ta = common::trace(&a.iter().map(lift).collect::<Vec<_>>(), TerminalOutcome::Timeout);
        let tb = common::trace(&b.iter().map(lift).collect::<Vec<_>>(), TerminalOutcome::Timeout);
        let one = trajectory_coverage([&ta], &grid);
        let both = trajectory_coverage([&ta, &tb], &grid);
        prop_assert!(both >= one);
        prop_assert_eq!(trajectory_coverage([&ta, &ta], &grid), one);
    }

    #[test]
    fn top_one_is_first_violation(flags in vec(any::<bool>(), 0..50)) {
        let first = flags.iter().position(|f| *f).map(|i| i + 1);
        prop_assert_eq!(top_k(&flags, 1), first);
    }

    #[test]
    fn state_is_relative(
        o in prop::array::uniform2(-20.0..20.0f64),
        u in prop::array::uniform2(-20.0..20.0f64),
        k in prop::array::uniform2(-20.0..20.0f64),
        d in prop::array::uniform2(-5.0..5.0f64),
    ) {
        let add = |p: [f64; 2]| [p[0] + d[0], p[1] + d[1]];
        let a = build_state(o, u, k, 20.0);
        let b = build_state(add(o), add(u), add(k), 20.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        // mirrored object about the marker negates its components
        let m = [2.0 * k[0] - o[0], 2.0 * k[1] - o[1]];
        let c = build_state(m, u, k, 20.0);
        prop_assert!((a[0] + c[0]).abs() < 1e-12 && (a[1] + c[1]).abs() < 1e-12);
    }

    #[test]
    fn reward_is_finite_and_nonnegative(s_gt in 0.01..50.0f64, frac in 0.0..=1.0f64, hit in any::<bool>()) {
        let r = reward(s_gt, s_gt * frac, hit).unwrap();
        prop_assert!(r.is_finite() && r >= 0.0);
        prop_assert_eq!(r, common::reward(s_gt, s_gt * frac, hit));
    }

    #[test]
    fn classify_total_with_precedence(
        kind in 0usize..5,
        x in -30.0..30.0f64,
        y in -30.0..30.0f64,
    ) {
        let outcome = match kind {
            0 => TerminalOutcome::Landed { x, y },
            1 => TerminalOutcome::Collision { kind: CollisionKind::Static, id: 0 },
            2 => TerminalOutcome::Collision { kind: CollisionKind::Dynamic, id: 1 },
            3 => TerminalOutcome::PlannerCrash { message: "no path".into() },
            _ => TerminalOutcome::Timeout,
        };
        let t = common::trace(&[[x, y, 0.0]], outcome);
        let r = classify(&t).unwrap();
        prop_assert_eq!(&r, &classify(&t).unwrap());
        let expected = match kind {
            0 if x.hypot(y) <= 1.5 => None,
            0 => Some(ViolationType::I),
            1 => Some(ViolationType::III),
            2 => Some(ViolationType::IV),
            3 => Some(ViolationType::V),
            _ => Some(ViolationType::II),
        };
        prop_assert_eq!(r.map(|r| r.vtype), expected);
    }

    #[test]
    fn weights_roundtrip(seed in any::<u64>()) {
        let net = Mlp::new(&[4, 64, 64, 5], &mut ChaCha8Rng::seed_from_u64(seed));
        let back = Mlp::from_bytes(&net.to_bytes()).unwrap();
        prop_assert_eq!(back.checksum(), net.checksum());
        prop_assert_eq!(back, net);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_jsonl_roundtrip(seed in any::<u64>()) {
        use garl_core::episode::{run_episode, SimContext, Stationary};
        use garl_core::sut::LandingSut;
        use garl_core::world::SimConfig;
        let profile = MapProfile::by_name(MapName::Court);
        let s = ScenarioChromosome::random(&mut ChaCha8Rng::seed_from_u64(seed), &profile);
        let ctx = SimContext::new(profile, SimConfig::default(), LandingSut::preset("tphyolo-mls").unwrap());
        let t = run_episode(&ctx, &s, &mut Stationary, seed).unwrap();
        let back = EpisodeTrace::from_jsonl(&t.to_jsonl()).unwrap();
        prop_assert_eq!(back.hash(), t.hash());
        prop_assert_eq!(back, t);
    }
}
