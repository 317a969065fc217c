//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails. Built without the libtest harness so the
//! lines always reach stdout.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::{Duration, Instant};

use garl_core::engine::{run_campaign, CampaignConfig, CampaignResult, Method};
use garl_core::episode::TerminalOutcome;
use garl_core::ga::{
    diversity_of_vectors, nondominated_sort, nuclear_gene_crossover, property_mutation, vary, FitnessVector,
    Individual, MutationStrategy, GaConfig,
};
use garl_core::metrics::{parameter_distance, trajectory_coverage, CoverageGrid, ViolationType};
use garl_core::persist;
use garl_core::rl::{build_state, random_policy_baseline, reward, train_surrogate, Mlp, TrainConfig};
use garl_core::scenario::ScenarioChromosome;
use garl_core::world::{MapName, MapProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EQ_TOL: f64 = 1e-9;
const EQ_CASES: usize = 1000;
const EQ_BUDGET: Duration = Duration::from_secs(10);
const NSGA_POINTS: usize = 200;
const NSGA_TRIALS: usize = 100;
const VARY_OFFSPRING: usize = 10_000;
const GRAD_TOL: f64 = 1e-4;
const REWARD_RATIO: f64 = 1.5;
const TRAIN_SEEDS: [u64; 3] = [0, 1, 2];
const REPS: [u64; 3] = [0, 1, 2];
const BUDGET: usize = 400;
const VIOLATION_RATIO: f64 = 1.3;
const CAMPAIGN_LIMIT: Duration = Duration::from_secs(15 * 60);
const SMOKE_LIMIT: Duration = Duration::from_secs(10);
const JOBS: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rand_vecs(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-50.0..50.0)).collect()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name, err: f64| {
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(err);
    };
    for _ in 0..EQ_CASES {
        let n = rng.random_range(1..12);
        let dim = rng.random_range(1..40);
        let v = rand_vecs(&mut rng, n, dim);
        note("diversity", max_abs_diff(&diversity_of_vectors(&v).unwrap(), &common::diversity(&v)));
        note("param-distance", (parameter_distance(&v).unwrap() - common::param_distance(&v)).abs());

        let m: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..rng.random_range(0..30)).map(|_| rng.random_range(0.0..1.0)).collect();
        let got = property_mutation(&m, &y).unwrap();
        note("mutation", if got == common::mutation_pick(&m, &y) { 0.0 } else { f64::INFINITY });

        let mut p = || [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)];
        let (o, u, k) = (p(), p(), p());
        let h = rng.random_range(1.0..40.0);
        note("state", max_abs_diff(&build_state(o, u, k, h), &common::state(o, u, k, h)));

        let s_gt = rng.random_range(0.01..10.0);
        let s_d = match rng.random_range(0..4) {
            0 => 0.0,
            1 => s_gt,
            _ => rng.random_range(0.0..s_gt),
        };
        let collided = rng.random_bool(0.5);
        note("reward", (reward(s_gt, s_d, collided).unwrap() - common::reward(s_gt, s_d, collided)).abs());

        let grid = CoverageGrid::default();
        let pts: Vec<[f64; 3]> = (0..rng.random_range(0..60))
            .map(|_| [rng.random_range(-22.0..22.0), rng.random_range(-22.0..22.0), rng.random_range(-1.0..17.0)])
            .collect();
        let traces: Vec<_> = pts.iter().map(|q| common::trace(&[*q], TerminalOutcome::Timeout)).collect();
        let got = trajectory_coverage(&traces, &grid);
        let want = common::coverage_pct(&pts, grid.half_extent, grid.max_altitude, grid.cell);
        note("coverage", (got - want).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst.values().all(|e| *e <= EQ_TOL) && elapsed < EQ_BUDGET;
    let errs: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    outcome(pass, format!("{EQ_CASES} cases each, max |err| [{}], {:.2} s", errs.join(", "), elapsed.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    for trial in 0..NSGA_TRIALS {
        // coarse grid values in half the trials to force ties
        let pts: Vec<[f64; 3]> = (0..NSGA_POINTS)
            .map(|_| {
                let mut p = [0.0; 3];
                for x in &mut p {
                    *x = if trial % 2 == 0 { rng.random_range(0.0..1.0) } else { rng.random_range(0..6) as f64 };
                }
                p
            })
            .collect();
        let fronts = nondominated_sort(&pts);
        if common::fronts_to_ranks(&fronts, pts.len()) != common::brute_force_ranks(&pts) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{NSGA_TRIALS} trials of {NSGA_POINTS} points, {mismatches} mismatches"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let profile = MapProfile::by_name(MapName::Court);
    let cfg = GaConfig::default();
    let individual = |c: ScenarioChromosome, rng: &mut ChaCha8Rng| Individual {
        chromosome: c,
        fitness: FitnessVector {
            dtl: rng.random_range(0.0..56.0),
            ttl: rng.random_range(0.0..120.0),
            diversity: 0.0,
        },
        rank: 0,
        crowding: 0.0,
    };
    let mut pop: Vec<_> = (0..cfg.population_size)
        .map(|_| {
            let c = ScenarioChromosome::random(&mut rng, &profile);
            individual(c, &mut rng)
        })
        .collect();
    let mut offspring: Vec<_> = (0..cfg.population_size)
        .map(|_| {
            let c = ScenarioChromosome::random(&mut rng, &profile);
            individual(c, &mut rng)
        })
        .collect();
    let (mut produced, mut invalid) = (0, 0);
    let mut harsh = cfg;
    while produced < VARY_OFFSPRING {
        // alternate between default and every-property mutation
        harsh.threshold_m = if produced % 40 == 0 { 0.0 } else { cfg.threshold_m };
        let (next, children) = vary(&pop, &offspring, &harsh, MutationStrategy::Diversity, &mut rng);
        produced += children.len();
        invalid += children.iter().filter(|c| c.validate_for(&profile).is_err()).count();
        pop = next;
        offspring = children.into_iter().map(|c| individual(c, &mut rng)).collect();
    }

    let mut multiset_breaks = 0;
    for _ in 0..1000 {
        let a = ScenarioChromosome::random(&mut rng, &profile);
        let b = ScenarioChromosome::random(&mut rng, &profile);
        let s = rng.random_range(0..a.nuclear_len());
        let (x, y) = nuclear_gene_crossover(&a, &b, s).unwrap();
        let bag = |p: &ScenarioChromosome, q: &ScenarioChromosome| {
            let mut m: HashMap<Vec<u64>, i32> = HashMap::new();
            for g in p.nuclear_genes().iter().chain(q.nuclear_genes().iter()) {
                *m.entry(g.key()).or_default() += 1;
            }
            m
        };
        if bag(&a, &b) != bag(&x, &y) {
            multiset_breaks += 1;
        }
    }

    let mut argmax_misses = 0;
    for _ in 0..EQ_CASES {
        let m: Vec<f64> = (0..rng.random_range(1..10)).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..rng.random_range(1..40)).map(|_| rng.random_range(0.0..1.0)).collect();
        let got = property_mutation(&m, &y).unwrap();
        let score = |c: f64| y.iter().map(|v| (c - v).abs()).sum::<f64>();
        let best = m.iter().map(|c| score(*c)).fold(f64::NEG_INFINITY, f64::max);
        if !m.contains(&got) || score(got) != best {
            argmax_misses += 1;
        }
    }
    outcome(
        invalid == 0 && multiset_breaks == 0 && argmax_misses == 0,
        format!(
            "{produced} offspring, {invalid} invalid; {multiset_breaks}/1000 crossover multiset breaks; {argmax_misses}/{EQ_CASES} mutation argmax misses"
        ),
    )
}

fn gradient_error(rng: &mut ChaCha8Rng) -> f64 {
    let mut net = Mlp::new(&[4, 64, 64, 5], rng);
    let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let c: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = |n: &Mlp| n.forward(&x).iter().zip(&c).map(|(o, k)| 0.5 * k * o * o).sum::<f64>();
    let mut grads = net.zero_grads();
    net.backward_with(&x, |out| out.iter().zip(&c).map(|(o, k)| k * o).collect(), &mut grads);
    let analytic = grads.flat();
    let base = net.params();
    let eps = 1e-6;
    let mut numeric = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for i in 0..base.len() {
        p[i] = base[i] + eps;
        net.set_params(&p);
        let up = loss(&net);
        p[i] = base[i] - eps;
        net.set_params(&p);
        let down = loss(&net);
        p[i] = base[i];
        numeric.push((up - down) / (2.0 * eps));
    }
    let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / (norm(&analytic) + norm(&numeric)).max(1e-12)
}

fn criterion_4(trained: &[(u64, Mlp, f64, f64)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let grad = (0..5).map(|_| gradient_error(&mut rng)).fold(0.0, f64::max);
    let mut parts = vec![format!("max relative gradient error {grad:.2e}")];
    let mut pass = grad <= GRAD_TOL;
    for (seed, _, tail, random) in trained {
        let ok = *tail >= REWARD_RATIO * random;
        pass &= ok;
        parts.push(format!("seed {seed}: trailing-100 {tail:.3} vs random {random:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn train(seed: u64) -> (u64, Mlp, f64, f64) {
    let cfg = TrainConfig::default();
    let (net, curve) = train_surrogate(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).expect("training");
    let tail: Vec<f64> = curve.iter().rev().take(100).map(|s| s.reward).collect();
    let tail = tail.iter().sum::<f64>() / tail.len() as f64;
    let random = random_policy_baseline(cfg.episodes, &mut ChaCha8Rng::seed_from_u64(seed ^ 0xbad5eed)).expect("baseline");
    (seed, net, tail, random)
}

fn campaign(method: Method, sut: &str, budget: usize, seed: u64, weights: &Mlp, jobs: usize) -> CampaignResult {
    let cfg = CampaignConfig::new(method, MapName::Court, sut, budget, seed).expect("config");
    let w = method.needs_weights().then_some(weights);
    run_campaign(&cfg, w, jobs).expect("campaign")
}

fn written(dir: &Path, r: &CampaignResult, weights: &Mlp) -> (Vec<u8>, Vec<String>) {
    let m = persist::write_campaign(dir, r, r.config.method.needs_weights().then(|| weights.checksum()), None)
        .expect("write");
    let bytes = std::fs::read(dir.join(persist::MANIFEST)).expect("manifest");
    (bytes, m.episodes.into_iter().map(|e| e.trace_hash).collect())
}

fn criterion_5(weights: &Mlp) -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut bad = Vec::new();
    for (i, method) in Method::ALL.into_iter().enumerate() {
        let budget = match method {
            Method::Garl | Method::MultiobjGa => 60,
            _ => 30,
        };
        let a = campaign(method, "mm-mls", budget, 7, weights, 1);
        let b = campaign(method, "mm-mls", budget, 7, weights, JOBS);
        let c = campaign(method, "mm-mls", budget, 7, weights, 3);
        let wa = written(&tmp.path().join(format!("{i}a")), &a, weights);
        let wb = written(&tmp.path().join(format!("{i}b")), &b, weights);
        let wc = written(&tmp.path().join(format!("{i}c")), &c, weights);
        if wa != wb || wa != wc {
            bad.push(method.as_str());
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} methods rerun at jobs 1/3/{JOBS}; differing: {bad:?}", Method::ALL.len()),
    )
}

struct RepStats {
    violation_pct: f64,
    distance: f64,
    top_10: Option<usize>,
    types: BTreeMap<ViolationType, usize>,
}

fn stats(r: &CampaignResult) -> RepStats {
    RepStats {
        violation_pct: r.metrics.violation_pct,
        distance: r.metrics.parameter_distance,
        top_10: r.metrics.top_10,
        types: r.metrics.per_type_counts.clone(),
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_6(mm: &[RepStats]) -> Outcome {
    let full = mm
        .iter()
        .filter(|r| ViolationType::ALL.iter().all(|t| r.types.get(t).copied().unwrap_or(0) > 0))
        .count();
    let per: Vec<String> = mm
        .iter()
        .map(|r| {
            let counts: Vec<String> = ViolationType::ALL.iter().map(|t| format!("{t}:{}", r.types[t])).collect();
            format!("[{}]", counts.join(" "))
        })
        .collect();
    outcome(full >= 2, format!("{full}/3 reps with all five types {}", per.join(" ")))
}

fn criterion_7(garl: &[RepStats], random: &[RepStats]) -> Outcome {
    // a repetition without 10 violations counts as one past the budget
    let top = |r: &RepStats| r.top_10.map(|k| k as f64).unwrap_or((BUDGET + 1) as f64);
    let (gv, rv) = (mean(garl.iter().map(|r| r.violation_pct)), mean(random.iter().map(|r| r.violation_pct)));
    let (gd, rd) = (mean(garl.iter().map(|r| r.distance)), mean(random.iter().map(|r| r.distance)));
    let (gt, rt) = (mean(garl.iter().map(top)), mean(random.iter().map(top)));
    outcome(
        gv >= VIOLATION_RATIO * rv && gd >= rd && gt <= rt,
        format!(
            "violation {gv:.2}% vs {rv:.2}% (x{:.2}); distance {gd:.3} vs {rd:.3}; top-10 {gt:.1} vs {rt:.1}",
            gv / rv.max(1e-12)
        ),
    )
}

fn criterion_8(by_sut: &[(&str, f64)]) -> Outcome {
    let strictly = by_sut.windows(2).all(|w| w[0].1 > w[1].1);
    let parts: Vec<String> = by_sut.iter().map(|(s, v)| format!("{s} {v:.2}%")).collect();
    outcome(strictly, parts.join(" > "))
}

fn criterion_9(full: Duration, weights: &Mlp) -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let r = campaign(Method::Garl, "mm-mls", 5, 0, weights, JOBS);
    persist::write_campaign(tmp.path(), &r, Some(weights.checksum()), None).expect("write");
    let smoke = start.elapsed();
    outcome(
        full < CAMPAIGN_LIMIT && smoke < SMOKE_LIMIT,
        format!(
            "400-episode campaign {:.2} s (limit {} s); budget-5 smoke {:.3} s (limit {} s)",
            full.as_secs_f64(),
            CAMPAIGN_LIMIT.as_secs(),
            smoke.as_secs_f64(),
            SMOKE_LIMIT.as_secs()
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };

    // training is the long pole; start it while the cheap criteria run
    let trainers: Vec<_> = TRAIN_SEEDS.iter().map(|&s| std::thread::spawn(move || train(s))).collect();
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    let trained: Vec<_> = trainers.into_iter().map(|h| h.join().expect("training thread")).collect();
    report(4, criterion_4(&trained));
    let weights = &trained[0].1;

    report(5, criterion_5(weights));

    let mut full = Duration::ZERO;
    let mut mm = Vec::new();
    for seed in REPS {
        let start = Instant::now();
        let r = campaign(Method::Garl, "mm-mls", BUDGET, seed, weights, JOBS);
        full = full.max(start.elapsed());
        mm.push(stats(&r));
    }
    report(6, criterion_6(&mm));
    let random: Vec<_> = REPS
        .iter()
        .map(|&s| stats(&campaign(Method::Random, "mm-mls", BUDGET, s, weights, JOBS)))
        .collect();
    report(7, criterion_7(&mm, &random));
    let mut by_sut = Vec::new();
    for sut in ["opencv-mls", "tphyolo-mls"] {
        let v = mean(REPS.iter().map(|&s| campaign(Method::Garl, sut, BUDGET, s, weights, JOBS).metrics.violation_pct));
        by_sut.push((sut, v));
    }
    by_sut.push(("mm-mls", mean(mm.iter().map(|r| r.violation_pct))));
    report(8, criterion_8(&by_sut));
    report(9, criterion_9(full, weights));

    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
