//! Campaign orchestration: GARL and the five baseline generators under one
//! episode budget.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{run_episode, DecisionView, EpisodeTrace, ObjectController, SimContext, SimRng, WaypointController};
use crate::ga::{
    diversity_of_vectors, evaluate_generation, trace_objectives, vary, GaConfig, GaError, Genome, Individual,
    MutationStrategy, RouteChromosome,
};
use crate::geom::Vec2;
use crate::metrics::{classify, summarize, CoverageGrid, MetricsError, MetricsSummary, ViolationRecord};
use crate::rl::dqn::{build_state, reward, Action, DqnAgent, PolicyController};
use crate::rl::{Mlp, RlError, TrainConfig, Transition};
use crate::scenario::{
    EnvironmentGene, ScenarioChromosome, ScenarioError, ENV_GENE_COUNT, POSITION_DOMAIN,
};
use crate::sut::LandingSut;
use crate::world::{MapName, MapProfile, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Garl,
    Random,
    MultiobjGa,
    OfflineRlFuzzer,
    OnlineRl,
    SurrogateRandom,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Garl,
        Method::Random,
        Method::MultiobjGa,
        Method::OfflineRlFuzzer,
        Method::OnlineRl,
        Method::SurrogateRandom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Garl => "garl",
            Method::Random => "random",
            Method::MultiobjGa => "multiobj-ga",
            Method::OfflineRlFuzzer => "offline-rl-fuzzer",
            Method::OnlineRl => "online-rl",
            Method::SurrogateRandom => "surrogate-random",
        }
    }

    /// Methods that deploy pre-trained surrogate weights.
    pub fn needs_weights(self) -> bool {
        matches!(self, Method::Garl | Method::SurrogateRandom)
    }

    fn stream_tag(self) -> u64 {
        Method::ALL.iter().position(|m| *m == self).expect("listed") as u64 + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
                format!("unknown method '{s}' (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("method {0} needs trained weights; run `garl train` first")]
    MissingWeights(Method),
    #[error("weights have shape {found:?}, expected {expected:?}")]
    WeightShape { expected: Vec<usize>, found: Vec<usize> },
    #[error("invalid campaign config: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Fully resolved description of one campaign repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub method: Method,
    pub budget: usize,
    pub seed: u64,
    pub map: MapName,
    pub profile: MapProfile,
    pub sut: LandingSut,
    pub sim: SimConfig,
    pub ga: GaConfig,
    /// Learner settings of the online baselines.
    pub train: TrainConfig,
    pub coverage: CoverageGrid,
}

impl CampaignConfig {
    pub fn new(method: Method, map: MapName, sut: &str, budget: usize, seed: u64) -> Result<Self, EngineError> {
        let sut = LandingSut::preset(sut).ok_or_else(|| EngineError::Config(format!("unknown SUT preset '{sut}'")))?;
        Ok(CampaignConfig {
            method,
            budget,
            seed,
            map,
            profile: MapProfile::by_name(map),
            sut,
            sim: SimConfig::default(),
            ga: GaConfig::default(),
            train: TrainConfig::default(),
            coverage: CoverageGrid::default(),
        })
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.budget == 0 {
            return Err(EngineError::Config("budget must be positive".into()));
        }
        self.ga.validate()?;
        self.train.validate()?;
        self.profile.validate().map_err(EngineError::Config)?;
        self.sut.detector.validate().map_err(EngineError::Config)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub scenario: ScenarioChromosome,
    /// Object destinations for methods that route objects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destinations: Option<Vec<Vec2>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<usize>,
    pub trace: EpisodeTrace,
    pub violation: Option<ViolationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSnapshot {
    pub generation: usize,
    pub scenarios: Vec<ScenarioChromosome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destinations: Option<Vec<Vec<Vec2>>>,
    /// Mean diversity of the evaluated generation.
    pub mean_diversity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub episodes: Vec<EpisodeRecord>,
    pub generations: Vec<GenerationSnapshot>,
    pub metrics: MetricsSummary,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for a (master, method, stream, index) tuple.
pub fn derive_seed(master: u64, method: Method, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(splitmix(master) ^ method.stream_tag()) ^ stream) ^ index)
}

const STREAM_SCENARIOS: u64 = 1;
const STREAM_EPISODES: u64 = 2;
const STREAM_SEARCH: u64 = 3;

/// One episode's work item for parallel evaluation.
struct Job<G> {
    genome: G,
    seed: u64,
}

fn check_weights(method: Method, weights: Option<&Mlp>) -> Result<&Mlp, EngineError> {
    let w = weights.ok_or(EngineError::MissingWeights(method))?;
    let expected = crate::rl::dqn::QNET_SIZES.to_vec();
    if w.sizes() != expected.as_slice() {
        return Err(EngineError::WeightShape {
            expected,
            found: w.sizes().to_vec(),
        });
    }
    Ok(w)
}

/// Runs one campaign. `jobs` bounds episode-level parallelism and never
/// changes the result.
pub fn run_campaign(cfg: &CampaignConfig, weights: Option<&Mlp>, jobs: usize) -> Result<CampaignResult, EngineError> {
    cfg.validate()?;
    let ctx = SimContext::new(cfg.profile.clone(), cfg.sim.clone(), cfg.sut.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EngineError::Config(e.to_string()))?;
    let (episodes, generations) = match cfg.method {
        Method::Garl => {
            let w = check_weights(cfg.method, weights)?;
            run_ga(
                cfg,
                &ctx,
                &pool,
                |rng| ScenarioChromosome::random(rng, &cfg.profile),
                |_| Box::new(PolicyController { policy: w }),
                MutationStrategy::Diversity,
            )?
        }
        Method::MultiobjGa => run_ga(
            cfg,
            &ctx,
            &pool,
            |rng| RouteChromosome::random(rng, cfg.profile.object_count),
            |g: &RouteChromosome| Box::new(waypoints(&cfg.profile, &g.destinations)),
            MutationStrategy::Uniform,
        )?,
        Method::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SCENARIOS, 0));
            let genomes: Vec<RouteChromosome> = (0..cfg.budget)
                .map(|_| RouteChromosome::random(&mut rng, cfg.profile.object_count))
                .collect();
            let jobs = seeded_jobs(cfg, genomes, 0);
            let done = evaluate(&ctx, &pool, &jobs, |g: &RouteChromosome| {
                Box::new(waypoints(&cfg.profile, &g.destinations))
            })?;
            (records(jobs, done, 0, None)?, Vec::new())
        }
        Method::SurrogateRandom => {
            let w = check_weights(cfg.method, weights)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SCENARIOS, 0));
            let genomes: Vec<ScenarioChromosome> = (0..cfg.budget)
                .map(|_| ScenarioChromosome::random(&mut rng, &cfg.profile))
                .collect();
            let jobs = seeded_jobs(cfg, genomes, 0);
            let done = evaluate(&ctx, &pool, &jobs, |_| Box::new(PolicyController { policy: w }))?;
            (records(jobs, done, 0, None)?, Vec::new())
        }
        Method::OfflineRlFuzzer => (run_offline_fuzzer(cfg, &ctx)?, Vec::new()),
        Method::OnlineRl => (run_online_rl(cfg, &ctx)?, Vec::new()),
    };
    debug_assert_eq!(episodes.len(), cfg.budget);
    let traces: Vec<EpisodeTrace> = episodes.iter().map(|e| e.trace.clone()).collect();
    let violations: Vec<Option<ViolationRecord>> = episodes.iter().map(|e| e.violation.clone()).collect();
    let vectors: Vec<Vec<f64>> = episodes.iter().map(|e| e.scenario.to_vector()).collect();
    let metrics = summarize(&traces, &violations, &vectors, &cfg.coverage)?;
    Ok(CampaignResult {
        config: cfg.clone(),
        episodes,
        generations,
        metrics,
    })
}

fn waypoints(profile: &MapProfile, normalized: &[Vec2]) -> WaypointController {
    WaypointController {
        destinations: normalized.iter().map(|d| profile.denormalize(d[0], d[1])).collect(),
    }
}

fn seeded_jobs<G>(cfg: &CampaignConfig, genomes: Vec<G>, first_index: usize) -> Vec<Job<G>> {
    genomes
        .into_iter()
        .enumerate()
        .map(|(i, genome)| Job {
            genome,
            seed: derive_seed(cfg.seed, cfg.method, STREAM_EPISODES, (first_index + i) as u64),
        })
        .collect()
}

fn evaluate<'a, G: Genome>(
    ctx: &SimContext,
    pool: &rayon::ThreadPool,
    jobs: &[Job<G>],
    make: impl Fn(&G) -> Box<dyn ObjectController + 'a> + Sync,
) -> Result<Vec<EpisodeTrace>, EngineError> {
    pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let mut controller = make(&j.genome);
                run_episode(ctx, j.genome.scenario(), controller.as_mut(), j.seed)
            })
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(EngineError::from)
}

trait RecordGenome {
    fn destinations(&self) -> Option<Vec<Vec2>>;
}

impl RecordGenome for ScenarioChromosome {
    fn destinations(&self) -> Option<Vec<Vec2>> {
        None
    }
}

impl RecordGenome for RouteChromosome {
    fn destinations(&self) -> Option<Vec<Vec2>> {
        Some(self.destinations.clone())
    }
}

fn records<G: Genome + RecordGenome>(
    jobs: Vec<Job<G>>,
    traces: Vec<EpisodeTrace>,
    first_index: usize,
    generation: Option<usize>,
) -> Result<Vec<EpisodeRecord>, EngineError> {
    jobs.into_iter()
        .zip(traces)
        .enumerate()
        .map(|(i, (job, trace))| {
            Ok(EpisodeRecord {
                index: first_index + i,
                scenario: job.genome.scenario().clone(),
                destinations: job.genome.destinations(),
                generation,
                violation: classify(&trace)?,
                trace,
            })
        })
        .collect()
}

/// NSGA-II loop: evaluate a generation, select from parents ∪ offspring,
/// vary, repeat until the budget is spent.
fn run_ga<'a, G: Genome + RecordGenome>(
    cfg: &CampaignConfig,
    ctx: &SimContext,
    pool: &rayon::ThreadPool,
    init: impl Fn(&mut ChaCha8Rng) -> G,
    make: impl Fn(&G) -> Box<dyn ObjectController + 'a> + Sync,
    strategy: MutationStrategy,
) -> Result<(Vec<EpisodeRecord>, Vec<GenerationSnapshot>), EngineError> {
    let mut scen_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SCENARIOS, 0));
    let mut ga_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SEARCH, 0));
    let diagonal = cfg.profile.diagonal();
    let timeout = cfg.sim.timeout;
    let mut episodes: Vec<EpisodeRecord> = Vec::with_capacity(cfg.budget);
    let mut generations = Vec::new();
    let mut parents: Vec<Individual<G>> = Vec::new();
    let mut offspring: Vec<Individual<G>> = Vec::new();
    let mut generation = 0usize;

    while episodes.len() < cfg.budget {
        let remaining = cfg.budget - episodes.len();
        let mut batch: Vec<G> = if generation == 0 {
            (0..cfg.ga.population_size).map(|_| init(&mut scen_rng)).collect()
        } else {
            let (next, children) = vary(&parents, &offspring, &cfg.ga, strategy, &mut ga_rng);
            parents = next;
            children
        };
        batch.truncate(remaining);
        let first = episodes.len();
        let jobs = seeded_jobs(cfg, batch, first);
        let traces = evaluate(ctx, pool, &jobs, &make)?;
        let genomes: Vec<G> = jobs.iter().map(|j| j.genome.clone()).collect();
        let trace_refs: Vec<&EpisodeTrace> = traces.iter().collect();
        let evaluated = evaluate_generation(&genomes, &trace_refs, diagonal, timeout)?;
        let mean_diversity =
            evaluated.iter().map(|i| i.fitness.diversity).sum::<f64>() / evaluated.len().max(1) as f64;
        generations.push(GenerationSnapshot {
            generation,
            scenarios: genomes.iter().map(|g| g.scenario().clone()).collect(),
            destinations: genomes.iter().map(|g| g.destinations()).collect(),
            mean_diversity,
        });
        if generation == 0 {
            parents = evaluated;
        } else {
            offspring = evaluated;
        }
        episodes.extend(records(jobs, traces, first, Some(generation))?);
        generation += 1;
    }
    Ok((episodes, generations))
}

const FUZZ_STEP: f64 = 0.1;
/// Actions per fuzzing session before restarting from a fresh scenario.
const FUZZ_HORIZON: usize = 20;

/// Applies one fuzzer action: ±0.1 on a weather or marker parameter, or a
/// one-step move of an object's start or destination.
pub fn apply_fuzz_action(c: &RouteChromosome, action: usize) -> RouteChromosome {
    let mut out = c.clone();
    let scalar_params = ENV_GENE_COUNT + 2;
    if action < 2 * scalar_params {
        let p = action / 2;
        let delta = if action.is_multiple_of(2) { FUZZ_STEP } else { -FUZZ_STEP };
        if p < ENV_GENE_COUNT {
            let (lo, hi) = EnvironmentGene::range(p);
            let v = (out.scenario.environment.get(p) + delta).clamp(lo, hi);
            out.scenario.environment.set(p, v);
        } else if p == ENV_GENE_COUNT {
            out.scenario.marker.x = POSITION_DOMAIN.clamp(out.scenario.marker.x + delta);
        } else {
            out.scenario.marker.y = POSITION_DOMAIN.clamp(out.scenario.marker.y + delta);
        }
        return out;
    }
    let rest = action - 2 * scalar_params;
    let (object, endpoint, dir) = (rest / 8, (rest / 4) % 2, Action::from_index(rest % 4));
    let h = dir.heading();
    let step = |v: f64, d: f64| POSITION_DOMAIN.clamp(v + d * FUZZ_STEP);
    if endpoint == 0 {
        let o = &mut out.scenario.objects[object];
        o.start_x = step(o.start_x, h[0]);
        o.start_y = step(o.start_y, h[1]);
    } else {
        let d = &mut out.destinations[object];
        d[0] = step(d[0], h[0]);
        d[1] = step(d[1], h[1]);
    }
    out
}

pub fn fuzz_action_count(object_count: usize) -> usize {
    2 * (ENV_GENE_COUNT + 2) + 8 * object_count
}

/// Mean distance of the newest archive entry to every archive entry.
fn archive_diversity(archive: &[Vec<f64>]) -> f64 {
    let last = archive.last().expect("non-empty archive");
    archive
        .iter()
        .map(|v| v.iter().zip(last).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .sum::<f64>()
        / archive.len() as f64
}

/// Fuzzer reward: normalized DTL + TTL share of the timeout + diversity.
pub fn fuzz_reward(trace: &EpisodeTrace, archive: &[Vec<f64>], diagonal: f64, timeout: f64) -> f64 {
    let (dtl, ttl) = trace_objectives(trace, diagonal, timeout);
    dtl / diagonal + ttl / timeout + archive_diversity(archive)
}

fn run_offline_fuzzer(cfg: &CampaignConfig, ctx: &SimContext) -> Result<Vec<EpisodeRecord>, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SEARCH, 0));
    let mut scen_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SCENARIOS, 0));
    let n = cfg.profile.object_count;
    let mut current = RouteChromosome::random(&mut scen_rng, n);
    let dim = current.to_vector().len();
    let mut agent = DqnAgent::new(&[dim, 64, 64, fuzz_action_count(n)], cfg.train, &mut rng);
    let mut archive: Vec<Vec<f64>> = Vec::with_capacity(cfg.budget);
    let mut out = Vec::with_capacity(cfg.budget);
    for i in 0..cfg.budget {
        let session = i / FUZZ_HORIZON;
        let state = current.to_vector();
        let a = agent.act(&state, cfg.train.epsilon(session), &mut rng);
        let next = apply_fuzz_action(&current, a);
        let seed = derive_seed(cfg.seed, cfg.method, STREAM_EPISODES, i as u64);
        let mut ctl = waypoints(&cfg.profile, &next.destinations);
        let trace = run_episode(ctx, &next.scenario, &mut ctl, seed)?;
        archive.push(next.to_vector());
        let r = fuzz_reward(&trace, &archive, cfg.profile.diagonal(), cfg.sim.timeout);
        let terminal = (i + 1) % FUZZ_HORIZON == 0;
        agent.remember(Transition {
            state,
            action: a,
            reward: r,
            next_state: next.to_vector(),
            terminal,
        });
        agent.learn(&mut rng)?;
        out.push(EpisodeRecord {
            index: i,
            scenario: next.scenario.clone(),
            destinations: Some(next.destinations.clone()),
            generation: None,
            violation: classify(&trace)?,
            trace,
        });
        current = if terminal {
            RouteChromosome::random(&mut scen_rng, n)
        } else {
            next
        };
    }
    Ok(out)
}

const WEATHER_STEP: f64 = 0.01;

pub fn online_action_count() -> usize {
    2 * ENV_GENE_COUNT + 4
}

pub fn online_state(view: &DecisionView<'_>, env: &EnvironmentGene) -> Vec<f64> {
    let w = view.world;
    let half = view.profile.world_half_extent;
    let mut s: Vec<f64> = env.to_array().to_vec();
    let uav = w.uav_ground();
    s.push((uav[0] - w.marker[0]) / half);
    s.push((uav[1] - w.marker[1]) / half);
    for o in &w.objects {
        let st = build_state(o.ground(), uav, w.marker, half);
        s.push(st[0]);
        s.push(st[1]);
    }
    s
}

/// Online learner that perturbs weather or nudges a random object each
/// decision, rewarded by marker occlusion.
struct OnlineRlController<'a> {
    agent: &'a mut DqnAgent,
    epsilon: f64,
    pending: Option<(Vec<f64>, usize)>,
    result: Result<(), RlError>,
}

impl OnlineRlController<'_> {
    fn close(&mut self, view: &DecisionView<'_>, env: &EnvironmentGene, terminal: bool) -> Option<Vec<f64>> {
        let state = online_state(view, env);
        if let Some((s, a)) = self.pending.take() {
            let f = view.frame;
            let collided = view.world.collided_with.is_some();
            match reward(f.s_gt, f.s_d.min(f.s_gt), collided) {
                Ok(r) => {
                    self.agent.remember(Transition {
                        state: s,
                        action: a,
                        reward: r,
                        next_state: state.clone(),
                        terminal,
                    });
                }
                Err(e) => self.result = Err(e),
            }
        }
        Some(state)
    }
}

impl ObjectController for OnlineRlController<'_> {
    fn decide(&mut self, view: &DecisionView<'_>, env: &mut EnvironmentGene, rng: &mut SimRng) -> Vec<Vec2> {
        let state = self.close(view, env, false).expect("state");
        if self.result.is_ok() {
            if let Err(e) = self.agent.learn(rng) {
                self.result = Err(e);
            }
        }
        let a = self.agent.act(&state, self.epsilon, rng);
        self.pending = Some((state, a));
        let mut headings = vec![[0.0, 0.0]; view.world.objects.len()];
        if a < 2 * ENV_GENE_COUNT {
            let p = a / 2;
            let delta = if a.is_multiple_of(2) { WEATHER_STEP } else { -WEATHER_STEP };
            let (lo, hi) = EnvironmentGene::range(p);
            env.set(p, (env.get(p) + delta).clamp(lo, hi));
        } else if !headings.is_empty() {
            let object = rng.random_range(0..headings.len());
            headings[object] = Action::from_index(a - 2 * ENV_GENE_COUNT).heading();
        }
        headings
    }

    fn finish(&mut self, view: &DecisionView<'_>, env: &EnvironmentGene) {
        self.close(view, env, true);
    }
}

fn run_online_rl(cfg: &CampaignConfig, ctx: &SimContext) -> Result<Vec<EpisodeRecord>, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SEARCH, 0));
    let mut scen_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, cfg.method, STREAM_SCENARIOS, 0));
    let dim = ENV_GENE_COUNT + 2 + 2 * cfg.profile.object_count;
    let mut agent = DqnAgent::new(&[dim, 64, 64, online_action_count()], cfg.train, &mut rng);
    let mut out = Vec::with_capacity(cfg.budget);
    for i in 0..cfg.budget {
        let scenario = ScenarioChromosome::random(&mut scen_rng, &cfg.profile);
        let seed = derive_seed(cfg.seed, cfg.method, STREAM_EPISODES, i as u64);
        let mut ctl = OnlineRlController {
            agent: &mut agent,
            epsilon: cfg.train.epsilon(i),
            pending: None,
            result: Ok(()),
        };
        let trace = run_episode(ctx, &scenario, &mut ctl, seed)?;
        ctl.result?;
        out.push(EpisodeRecord {
            index: i,
            scenario,
            destinations: None,
            generation: None,
            violation: classify(&trace)?,
            trace,
        });
    }
    Ok(out)
}

/// Mean diversity score of a generation snapshot.
pub fn generation_diversity(g: &GenerationSnapshot) -> f64 {
    let vectors: Vec<Vec<f64>> = match &g.destinations {
        Some(ds) => g
            .scenarios
            .iter()
            .zip(ds)
            .map(|(s, d)| {
                let mut v = s.to_vector();
                d.iter().for_each(|p| v.extend_from_slice(p));
                v
            })
            .collect(),
        None => g.scenarios.iter().map(|s| s.to_vector()).collect(),
    };
    let d = diversity_of_vectors(&vectors).unwrap_or_default();
    d.iter().sum::<f64>() / d.len().max(1) as f64
}
