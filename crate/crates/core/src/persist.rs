//! Campaign directories, weight files and trace narration.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{CampaignConfig, CampaignResult, GenerationSnapshot};
use crate::episode::EpisodeTrace;
use crate::geom::Vec2;
use crate::metrics::{classify, MetricsSummary, ViolationRecord, ViolationType};
use crate::rl::{EpisodeStat, Mlp, RlError};
use crate::scenario::{parse_with_path, ScenarioChromosome, ScenarioError};

pub const CAMPAIGN_FORMAT: &str = "garl-campaign/1";
pub const MANIFEST: &str = "manifest.json";
pub const REWARD_CURVE: &str = "reward_curve.csv";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("{path}: {source}")]
    Weights { path: PathBuf, source: RlError },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> PersistError + '_ {
    move |e| PersistError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

pub fn save_weights(path: &Path, net: &Mlp) -> Result<(), PersistError> {
    write_file(path, &net.to_bytes())
}

pub fn load_weights(path: &Path) -> Result<Mlp, PersistError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Mlp::from_bytes(&bytes).map_err(|source| PersistError::Weights {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_reward_curve(path: &Path, curve: &[EpisodeStat]) -> Result<(), PersistError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in curve {
        w.serialize(s).map_err(csv_err(path))?;
    }
    if curve.is_empty() {
        w.write_record(["episode", "reward", "epsilon"]).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| PersistError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_file(path, &bytes)
}

pub fn read_reward_curve(path: &Path) -> Result<Vec<EpisodeStat>, PersistError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<EpisodeStat>, _>>().map_err(csv_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEpisode {
    pub index: usize,
    pub trace: String,
    pub trace_hash: String,
    pub outcome: String,
    pub violation: Option<ViolationType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub scenarios: String,
    pub violations: String,
    pub metrics: String,
    pub type_counts: String,
    pub trajectories: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_curve: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub config: CampaignConfig,
    #[serde(default)]
    pub weights_checksum: Option<String>,
    pub metrics: MetricsSummary,
    pub files: ManifestFiles,
    pub episodes: Vec<ManifestEpisode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScenarioEntry {
    index: usize,
    scenario: ScenarioChromosome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    destinations: Option<Vec<Vec2>>,
}

#[derive(Debug, Serialize)]
struct ViolationRow<'a> {
    index: usize,
    #[serde(rename = "type")]
    vtype: ViolationType,
    description: &'a str,
    dtl: f64,
    ttl: f64,
    evidence: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TypeCountRow {
    #[serde(rename = "type")]
    pub vtype: ViolationType,
    pub description: String,
    pub count: usize,
}

#[derive(Debug, Serialize)]
struct TrajectoryRow {
    episode: usize,
    #[serde(rename = "type")]
    vtype: ViolationType,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
}

fn csv_bytes<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<Vec<u8>, PersistError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    let mut any = false;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
        any = true;
    }
    if !any {
        w.write_record(header).map_err(csv_err(path))?;
    }
    w.into_inner().map_err(|e| PersistError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn trace_file_name(index: usize) -> String {
    format!("traces/{index:06}.jsonl")
}

/// Writes every artifact of a campaign into `dir`. Only this coordinator
/// touches the filesystem.
pub fn write_campaign(
    dir: &Path,
    result: &CampaignResult,
    weights_checksum: Option<String>,
    reward_curve: Option<&[EpisodeStat]>,
) -> Result<Manifest, PersistError> {
    fs::create_dir_all(dir.join("traces")).map_err(io_err(dir))?;
    let mut episodes = Vec::with_capacity(result.episodes.len());
    for e in &result.episodes {
        let name = trace_file_name(e.index);
        let text = e.trace.to_jsonl();
        write_file(&dir.join(&name), text.as_bytes())?;
        episodes.push(ManifestEpisode {
            index: e.index,
            trace: name,
            trace_hash: e.trace.hash(),
            outcome: e.trace.outcome.as_ref().map(|o| o.label().to_string()).unwrap_or_default(),
            violation: e.violation.as_ref().map(|v| v.vtype),
        });
    }

    let scenarios: Vec<ScenarioEntry> = result
        .episodes
        .iter()
        .map(|e| ScenarioEntry {
            index: e.index,
            scenario: e.scenario.clone(),
            destinations: e.destinations.clone(),
        })
        .collect();
    write_file(&dir.join("scenarios.json"), &json_bytes(&scenarios))?;

    let vpath = dir.join("violations.csv");
    let rows = result.episodes.iter().filter_map(|e| {
        e.violation.as_ref().map(|v| ViolationRow {
            index: e.index,
            vtype: v.vtype,
            description: v.vtype.description(),
            dtl: v.dtl,
            ttl: v.ttl,
            evidence: v.evidence.to_string(),
        })
    });
    let bytes = csv_bytes(&vpath, rows, &["index", "type", "description", "dtl", "ttl", "evidence"])?;
    write_file(&vpath, &bytes)?;

    let cpath = dir.join("type_counts.csv");
    let rows = result.metrics.per_type_counts.iter().map(|(t, c)| TypeCountRow {
        vtype: *t,
        description: t.description().to_string(),
        count: *c,
    });
    let bytes = csv_bytes(&cpath, rows, &["type", "description", "count"])?;
    write_file(&cpath, &bytes)?;

    let tpath = dir.join("trajectories.csv");
    let rows = result.episodes.iter().flat_map(|e| {
        let vtype = e.violation.as_ref().map(|v| v.vtype);
        e.trace.ticks.iter().filter_map(move |t| {
            vtype.map(|vtype| TrajectoryRow {
                episode: e.index,
                vtype,
                t: t.t,
                x: t.uav[0],
                y: t.uav[1],
                z: t.uav[2],
            })
        })
    });
    let bytes = csv_bytes(&tpath, rows, &["episode", "type", "t", "x", "y", "z"])?;
    write_file(&tpath, &bytes)?;

    write_file(&dir.join("metrics.json"), &json_bytes(&result.metrics))?;

    let generations = if result.generations.is_empty() {
        None
    } else {
        write_file(&dir.join("generations.json"), &json_bytes(&result.generations))?;
        Some("generations.json".to_string())
    };
    let reward_curve = match reward_curve {
        Some(curve) => {
            write_reward_curve(&dir.join(REWARD_CURVE), curve)?;
            Some(REWARD_CURVE.to_string())
        }
        None => None,
    };

    let manifest = Manifest {
        format: CAMPAIGN_FORMAT.to_string(),
        config: result.config.clone(),
        weights_checksum,
        metrics: result.metrics.clone(),
        files: ManifestFiles {
            scenarios: "scenarios.json".into(),
            violations: "violations.csv".into(),
            metrics: "metrics.json".into(),
            type_counts: "type_counts.csv".into(),
            trajectories: "trajectories.csv".into(),
            generations,
            reward_curve,
        },
        episodes,
    };
    write_file(&dir.join(MANIFEST), &json_bytes(&manifest))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, PersistError> {
    let path = dir.join(MANIFEST);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let m: Manifest = parse_with_path(&bytes).map_err(|source| PersistError::Scenario {
        path: path.clone(),
        source,
    })?;
    if m.format != CAMPAIGN_FORMAT {
        return Err(PersistError::Format {
            path,
            message: format!("unsupported campaign format '{}'", m.format),
        });
    }
    Ok(m)
}

pub fn read_generations(dir: &Path) -> Result<Vec<GenerationSnapshot>, PersistError> {
    let path = dir.join("generations.json");
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    parse_with_path(&bytes).map_err(|source| PersistError::Scenario { path, source })
}

pub fn read_trace(path: &Path) -> Result<EpisodeTrace, PersistError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    EpisodeTrace::from_jsonl(&text).map_err(|source| PersistError::Scenario {
        path: path.to_path_buf(),
        source,
    })
}

/// Checks every file a manifest references exists and parses, and that
/// trace files hash to the recorded values.
pub fn verify_campaign(dir: &Path) -> Result<Manifest, PersistError> {
    let m = read_manifest(dir)?;
    for e in &m.episodes {
        let path = dir.join(&e.trace);
        let text = fs::read(&path).map_err(io_err(&path))?;
        let t = read_trace(&path)?;
        // the file must be the canonical serialization, byte for byte
        if t.hash() != e.trace_hash || hex::encode(Sha256::digest(&text)) != e.trace_hash {
            return Err(PersistError::Format {
                path,
                message: "trace hash mismatch".into(),
            });
        }
    }
    let spath = dir.join(&m.files.scenarios);
    let bytes = fs::read(&spath).map_err(io_err(&spath))?;
    let scenarios: Vec<ScenarioEntry> =
        parse_with_path(&bytes).map_err(|source| PersistError::Scenario { path: spath.clone(), source })?;
    if scenarios.len() != m.episodes.len() {
        return Err(PersistError::Format {
            path: spath,
            message: "scenario count differs from episode count".into(),
        });
    }
    for name in [&m.files.violations, &m.files.type_counts, &m.files.trajectories] {
        let p = dir.join(name);
        let mut r = csv::Reader::from_path(&p).map_err(csv_err(&p))?;
        for rec in r.records() {
            rec.map_err(csv_err(&p))?;
        }
    }
    let mpath = dir.join(&m.files.metrics);
    let bytes = fs::read(&mpath).map_err(io_err(&mpath))?;
    let _: MetricsSummary = parse_with_path(&bytes).map_err(|source| PersistError::Scenario { path: mpath, source })?;
    if m.files.generations.is_some() {
        read_generations(dir)?;
    }
    if let Some(c) = &m.files.reward_curve {
        read_reward_curve(&dir.join(c))?;
    }
    Ok(m)
}

/// Tick-by-tick narration of phases, detections and the outcome.
pub fn narrate(trace: &EpisodeTrace) -> (String, Option<ViolationRecord>) {
    let mut out = String::new();
    out.push_str(&format!(
        "seed {} marker ({:.2}, {:.2}) gps target ({:.2}, {:.2})\n",
        trace.seed, trace.marker[0], trace.marker[1], trace.gps_target[0], trace.gps_target[1]
    ));
    let mut det = trace.detections.iter().peekable();
    let mut trans = trace.transitions.iter().peekable();
    for tick in &trace.ticks {
        let p = tick.uav;
        while let Some(d) = det.next_if(|d| d.tick == tick.index) {
            out.push_str(&format!(
                "t={:6.1}s uav=({:6.2},{:6.2},{:5.2}) detection conf {:.2} at ({:.2}, {:.2}){}{}\n",
                tick.t,
                p[0],
                p[1],
                p[2],
                d.confidence,
                d.estimated_position[0],
                d.estimated_position[1],
                if d.is_false_positive { " [false positive]" } else { "" },
                if d.accepted { " accepted" } else { "" },
            ));
        }
        while let Some(tr) = trans.next_if(|tr| tr.tick == tick.index) {
            out.push_str(&format!("t={:6.1}s phase {} -> {}\n", tick.t, tr.from, tr.to));
        }
    }
    match &trace.outcome {
        Some(o) => {
            out.push_str(&format!("t={:6.1}s outcome: {}\n", trace.duration, o.label()));
            if let crate::episode::TerminalOutcome::PlannerCrash { message } = o {
                out.push_str(&format!("planner: {message}\n"));
            }
        }
        None => out.push_str("outcome: none (trace not terminal)\n"),
    }
    let record = classify(trace).ok().flatten();
    match &record {
        Some(v) => out.push_str(&format!(
            "violation: Type {} ({}); {}; dtl {:.2} m; ttl {:.1} s\n",
            v.vtype,
            v.vtype.description(),
            v.evidence,
            v.dtl,
            v.ttl
        )),
        None => out.push_str("no violation\n"),
    }
    (out, record)
}

/// Per-method means of campaign metrics over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRow {
    pub method: String,
    pub sut: String,
    pub map: String,
    pub repetitions: usize,
    pub violation_pct: f64,
    /// Mean over repetitions that reached K violations.
    pub top_10: Option<f64>,
    pub top_10_not_found: usize,
    pub parameter_distance: f64,
    pub coverage_pct: f64,
}

pub fn aggregate(manifests: &[Manifest]) -> (Vec<MethodRow>, Vec<(String, BTreeMap<ViolationType, f64>)>) {
    let mut groups: BTreeMap<(String, String, String), Vec<&Manifest>> = BTreeMap::new();
    for m in manifests {
        let key = (
            m.config.method.to_string(),
            m.config.sut.config.name.clone(),
            m.config.map.as_str().to_string(),
        );
        groups.entry(key).or_default().push(m);
    }
    let mut rows = Vec::new();
    let mut types = Vec::new();
    for ((method, sut, map), ms) in groups {
        let n = ms.len() as f64;
        let mean = |f: &dyn Fn(&MetricsSummary) -> f64| ms.iter().map(|m| f(&m.metrics)).sum::<f64>() / n;
        let found: Vec<f64> = ms.iter().filter_map(|m| m.metrics.top_10.map(|k| k as f64)).collect();
        rows.push(MethodRow {
            method: method.clone(),
            sut: sut.clone(),
            map: map.clone(),
            repetitions: ms.len(),
            violation_pct: mean(&|s| s.violation_pct),
            top_10: if found.is_empty() {
                None
            } else {
                Some(found.iter().sum::<f64>() / found.len() as f64)
            },
            top_10_not_found: ms.len() - found.len(),
            parameter_distance: mean(&|s| s.parameter_distance),
            coverage_pct: mean(&|s| s.coverage_pct),
        });
        let per_type = ViolationType::ALL
            .iter()
            .map(|t| (*t, mean(&|s| *s.per_type_counts.get(t).unwrap_or(&0) as f64)))
            .collect();
        types.push((format!("{method}/{sut}/{map}"), per_type));
    }
    (rows, types)
}

#[derive(Debug, Serialize)]
struct ComparisonRow {
    method: String,
    sut: String,
    map: String,
    repetitions: usize,
    violation_pct: f64,
    top_10: String,
    top_10_not_found: usize,
    parameter_distance: f64,
    coverage_pct: f64,
}

/// Writes comparison tables and plot data for a set of campaign directories.
pub fn write_report(dirs: &[PathBuf], out: &Path) -> Result<Vec<MethodRow>, PersistError> {
    let manifests = dirs.iter().map(|d| read_manifest(d)).collect::<Result<Vec<_>, _>>()?;
    let (rows, types) = aggregate(&manifests);

    let path = out.join("comparison.csv");
    let table = rows.iter().map(|r| ComparisonRow {
        method: r.method.clone(),
        sut: r.sut.clone(),
        map: r.map.clone(),
        repetitions: r.repetitions,
        violation_pct: r.violation_pct,
        top_10: match r.top_10 {
            Some(k) => format!("{k:.1}"),
            None => "cannot find".into(),
        },
        top_10_not_found: r.top_10_not_found,
        parameter_distance: r.parameter_distance,
        coverage_pct: r.coverage_pct,
    });
    let bytes = csv_bytes(&path, table, &[])?;
    write_file(&path, &bytes)?;

    let path = out.join("type_counts.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["group".to_string()];
    header.extend(ViolationType::ALL.iter().map(|t| format!("type_{t}")));
    w.write_record(&header).map_err(csv_err(&path))?;
    for (group, counts) in &types {
        let mut rec = vec![group.clone()];
        rec.extend(counts.values().map(|c| format!("{c}")));
        w.write_record(&rec).map_err(csv_err(&path))?;
    }
    let bytes = w.into_inner().map_err(|e| PersistError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    write_file(&path, &bytes)?;

    // plot data: trajectory point clouds and reward curves, tagged by source
    let mut traj = String::from("campaign,episode,type,t,x,y,z\n");
    let mut curves = String::from("campaign,episode,reward,epsilon\n");
    for (dir, m) in dirs.iter().zip(&manifests) {
        let tag = dir.display().to_string().replace(',', "_");
        let tpath = dir.join(&m.files.trajectories);
        let text = fs::read_to_string(&tpath).map_err(io_err(&tpath))?;
        for line in text.lines().skip(1) {
            traj.push_str(&format!("{tag},{line}\n"));
        }
        if let Some(c) = &m.files.reward_curve {
            for s in read_reward_curve(&dir.join(c))? {
                curves.push_str(&format!("{tag},{},{},{}\n", s.episode, s.reward, s.epsilon));
            }
        }
    }
    write_file(&out.join("trajectories.csv"), traj.as_bytes())?;
    write_file(&out.join("reward_curves.csv"), curves.as_bytes())?;
    write_file(&out.join("comparison.json"), &json_bytes(&rows))?;
    Ok(rows)
}
