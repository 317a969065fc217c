//! Python bindings. Structured values cross the boundary as JSON text so the
//! Python side can use `json.loads` without mirroring every Rust type.

use garl_core::engine::{run_campaign as core_run_campaign, CampaignConfig, Method};
use garl_core::episode::{run_episode as core_run_episode, EpisodeTrace, SimContext, Stationary};
use garl_core::ga;
use garl_core::metrics;
use garl_core::persist;
use garl_core::rl::{self, Mlp, PolicyController, TrainConfig};
use garl_core::scenario::ScenarioChromosome;
use garl_core::sut::{LandingSut, SutConfig};
use garl_core::world::{MapName, MapProfile, SimConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn profile(map: &str) -> PyResult<MapProfile> {
    Ok(MapProfile::by_name(map.parse::<MapName>().map_err(err)?))
}

fn scenario_from_json(text: &str) -> PyResult<ScenarioChromosome> {
    serde_json::from_str(text).map_err(err)
}

fn weights(bytes: Option<&[u8]>) -> PyResult<Option<Mlp>> {
    bytes.map(|b| Mlp::from_bytes(b).map_err(err)).transpose()
}

/// Random scenario for `map` as JSON.
#[pyfunction]
#[pyo3(signature = (seed, map = "court"))]
fn random_scenario(seed: u64, map: &str) -> PyResult<String> {
    let p = profile(map)?;
    let s = ScenarioChromosome::random(&mut ChaCha8Rng::seed_from_u64(seed), &p);
    serde_json::to_string(&s).map_err(err)
}

#[pyfunction]
fn scenario_to_vector(scenario: &str) -> PyResult<Vec<f64>> {
    Ok(scenario_from_json(scenario)?.to_vector())
}

#[pyfunction]
fn scenario_from_vector(vector: Vec<f64>, object_count: usize) -> PyResult<String> {
    let s = ScenarioChromosome::from_vector(&vector, object_count).map_err(err)?;
    serde_json::to_string(&s).map_err(err)
}

/// Out-of-range genes, empty when the scenario is valid.
#[pyfunction]
fn scenario_violations(scenario: &str) -> PyResult<Vec<String>> {
    Ok(scenario_from_json(scenario)?.range_violations())
}

/// Runs one episode and returns the trace as JSON lines. With `weights` the
/// objects follow the trained policy, otherwise they stay put.
#[pyfunction]
#[pyo3(signature = (scenario, map = "court", sut = "mm-mls", seed = 0, weights = None))]
fn run_episode(
    py: Python<'_>,
    scenario: &str,
    map: &str,
    sut: &str,
    seed: u64,
    weights: Option<&[u8]>,
) -> PyResult<String> {
    let s = scenario_from_json(scenario)?;
    let p = profile(map)?;
    let sut = LandingSut::preset(sut).ok_or_else(|| err(format!("unknown SUT '{sut}'")))?;
    let net = self::weights(weights)?;
    py.detach(|| {
        let ctx = SimContext::new(p, SimConfig::default(), sut);
        let trace = match &net {
            Some(policy) => core_run_episode(&ctx, &s, &mut PolicyController { policy }, seed),
            None => core_run_episode(&ctx, &s, &mut Stationary, seed),
        };
        trace.map(|t| t.to_jsonl()).map_err(err)
    })
}

/// Violation record of a trace as JSON, or None for a correct landing.
#[pyfunction]
fn classify(trace: &str) -> PyResult<Option<String>> {
    let t = EpisodeTrace::from_jsonl(trace).map_err(err)?;
    metrics::classify(&t)
        .map_err(err)?
        .map(|r| serde_json::to_string(&r).map_err(err))
        .transpose()
}

#[pyfunction]
fn trace_hash(trace: &str) -> PyResult<String> {
    Ok(EpisodeTrace::from_jsonl(trace).map_err(err)?.hash())
}

#[pyfunction]
fn narrate(trace: &str) -> PyResult<String> {
    let t = EpisodeTrace::from_jsonl(trace).map_err(err)?;
    Ok(persist::narrate(&t).0)
}

/// Trains the object policy in the surrogate environment. Returns the
/// serialized weights and the per-episode rewards.
#[pyfunction]
#[pyo3(signature = (episodes = 2000, seed = 0))]
fn train_surrogate<'py>(py: Python<'py>, episodes: usize, seed: u64) -> PyResult<(Bound<'py, PyBytes>, Vec<f64>)> {
    let cfg = TrainConfig { episodes, ..TrainConfig::default() };
    let (net, curve) = py
        .detach(|| rl::train_surrogate(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)))
        .map_err(err)?;
    let rewards = curve.iter().map(|s| s.reward).collect();
    Ok((PyBytes::new(py, &net.to_bytes()), rewards))
}

#[pyfunction]
#[pyo3(signature = (episodes = 200, seed = 0))]
fn random_policy_baseline(episodes: usize, seed: u64) -> PyResult<f64> {
    rl::random_policy_baseline(episodes, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(err)
}

/// Runs a campaign and returns its metrics as JSON. When `out` is given the
/// full campaign directory is written there as well.
#[pyfunction]
#[pyo3(signature = (method, map = "court", sut = "mm-mls", budget = 400, seed = 0, weights = None, jobs = 1, out = None))]
#[allow(clippy::too_many_arguments)]
fn run_campaign(
    py: Python<'_>,
    method: &str,
    map: &str,
    sut: &str,
    budget: usize,
    seed: u64,
    weights: Option<&[u8]>,
    jobs: usize,
    out: Option<std::path::PathBuf>,
) -> PyResult<String> {
    let method: Method = method.parse().map_err(err)?;
    let map: MapName = map.parse().map_err(err)?;
    let cfg = CampaignConfig::new(method, map, sut, budget, seed).map_err(err)?;
    let net = self::weights(weights)?;
    py.detach(|| {
        let result = core_run_campaign(&cfg, net.as_ref(), jobs).map_err(err)?;
        if let Some(dir) = &out {
            persist::write_campaign(dir, &result, net.as_ref().map(|w| w.checksum()), None).map_err(err)?;
        }
        serde_json::to_string(&result.metrics).map_err(err)
    })
}

#[pyfunction]
fn parameter_distance(vectors: Vec<Vec<f64>>) -> PyResult<f64> {
    metrics::parameter_distance(&vectors).map_err(err)
}

#[pyfunction]
fn landing_violation_pct(violations: Vec<bool>) -> f64 {
    metrics::landing_violation_pct(&violations)
}

#[pyfunction]
#[pyo3(signature = (violations, k = 10))]
fn top_k(violations: Vec<bool>, k: usize) -> Option<usize> {
    metrics::top_k(&violations, k)
}

#[pyfunction]
fn diversity(vectors: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    ga::diversity_of_vectors(&vectors).map_err(err)
}

#[pyfunction]
fn nondominated_sort(points: Vec<[f64; 3]>) -> Vec<Vec<usize>> {
    ga::nondominated_sort(&points)
}

#[pyfunction]
fn crowding_distance(points: Vec<[f64; 3]>) -> Vec<f64> {
    ga::crowding_distance(&points)
}

#[pyfunction]
fn dqn_reward(s_gt: f64, s_d: f64, collided: bool) -> PyResult<f64> {
    rl::reward(s_gt, s_d, collided).map_err(err)
}

#[pyfunction]
fn build_state(obj: [f64; 2], uav: [f64; 2], marker: [f64; 2], half_extent: f64) -> Vec<f64> {
    rl::build_state(obj, uav, marker, half_extent).to_vec()
}

#[pymodule]
fn garl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("METHODS", Method::ALL.iter().map(|x| x.as_str()).collect::<Vec<_>>())?;
    m.add("SUTS", SutConfig::PRESETS.to_vec())?;
    m.add_function(wrap_pyfunction!(random_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_to_vector, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_from_vector, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_violations, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(trace_hash, m)?)?;
    m.add_function(wrap_pyfunction!(narrate, m)?)?;
    m.add_function(wrap_pyfunction!(train_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(random_policy_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(parameter_distance, m)?)?;
    m.add_function(wrap_pyfunction!(landing_violation_pct, m)?)?;
    m.add_function(wrap_pyfunction!(top_k, m)?)?;
    m.add_function(wrap_pyfunction!(diversity, m)?)?;
    m.add_function(wrap_pyfunction!(nondominated_sort, m)?)?;
    m.add_function(wrap_pyfunction!(crowding_distance, m)?)?;
    m.add_function(wrap_pyfunction!(dqn_reward, m)?)?;
    m.add_function(wrap_pyfunction!(build_state, m)?)?;
    Ok(())
}
