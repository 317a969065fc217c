//! Closed-loop landing episodes and their recorded traces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geom::{dist2, Vec2, Vec3};
use crate::perception::{detect_marker, DetectionResult};
use crate::planner::Planner;
use crate::scenario::{parse_with_path, EnvironmentGene, ScenarioChromosome, ScenarioError};
use crate::sut::{sut_step, LandingPhase, LandingSut, PlannerMode, UavCommand};
use crate::world::{camera_view, init_world, step, CameraFrame, CollisionTarget, MapProfile, SimConfig, WorldState};

pub type SimRng = ChaCha8Rng;

/// Map, vehicle limits and landing stack shared by every episode of a run.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub profile: MapProfile,
    pub sim: SimConfig,
    pub sut: LandingSut,
    planner: Option<Planner>,
}

impl SimContext {
    pub fn new(profile: MapProfile, sim: SimConfig, sut: LandingSut) -> Self {
        let planner = (sut.config.planner == PlannerMode::Avoidance)
            .then(|| Planner::new(&profile, &sim, &sut.config));
        SimContext {
            profile,
            sim,
            sut,
            planner,
        }
    }

    pub fn planner(&self) -> Option<&Planner> {
        self.planner.as_ref()
    }
}

/// Everything an object controller may look at on a decision tick.
pub struct DecisionView<'a> {
    pub world: &'a WorldState,
    pub frame: &'a CameraFrame,
    pub detection: &'a DetectionResult,
    pub profile: &'a MapProfile,
    pub sim: &'a SimConfig,
    pub decision: usize,
}

/// Steers the dynamic objects (and, for online baselines, the weather).
pub trait ObjectController {
    /// Ground-plane headings, one per object, held until the next decision.
    fn decide(&mut self, view: &DecisionView<'_>, env: &mut EnvironmentGene, rng: &mut SimRng) -> Vec<Vec2>;

    /// Called once with the terminal state.
    fn finish(&mut self, _view: &DecisionView<'_>, _env: &EnvironmentGene) {}
}

/// Objects never move.
pub struct Stationary;

impl ObjectController for Stationary {
    fn decide(&mut self, view: &DecisionView<'_>, _env: &mut EnvironmentGene, _rng: &mut SimRng) -> Vec<Vec2> {
        vec![[0.0, 0.0]; view.world.objects.len()]
    }
}

/// Objects walk straight to fixed destinations and stop there.
pub struct WaypointController {
    pub destinations: Vec<Vec2>,
}

impl ObjectController for WaypointController {
    fn decide(&mut self, view: &DecisionView<'_>, _env: &mut EnvironmentGene, _rng: &mut SimRng) -> Vec<Vec2> {
        view.world
            .objects
            .iter()
            .zip(&self.destinations)
            .map(|(o, d)| {
                let delta = [d[0] - o.position[0], d[1] - o.position[1]];
                let n = crate::geom::norm2(delta);
                let stride = o.speed * view.sim.decision_interval;
                if n <= stride / 2.0 || n < 1e-9 {
                    [0.0, 0.0]
                } else {
                    [delta[0] / n, delta[1] / n]
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TerminalOutcome {
    Landed { x: f64, y: f64 },
    Collision { kind: CollisionKind, id: usize },
    PlannerCrash { message: String },
    Timeout,
}

impl TerminalOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            TerminalOutcome::Landed { .. } => "landed",
            TerminalOutcome::Collision { kind: CollisionKind::Static, .. } => "static collision",
            TerminalOutcome::Collision { kind: CollisionKind::Dynamic, .. } => "dynamic collision",
            TerminalOutcome::PlannerCrash { .. } => "planner crash",
            TerminalOutcome::Timeout => "timeout",
        }
    }
}

/// State sampled on a decision tick (plus one final terminal sample).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub index: usize,
    pub t: f64,
    pub uav: Vec3,
    pub objects: Vec<Vec3>,
    pub phase: String,
    pub marker_in_fov: bool,
    pub s_gt: f64,
    pub s_d: f64,
    pub found: bool,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    /// Index of the tick record this detection belongs to.
    pub tick: usize,
    pub t: f64,
    pub confidence: f64,
    pub estimated_position: Vec2,
    pub is_false_positive: bool,
    /// The landing system took this estimate as its target.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransition {
    pub tick: usize,
    pub t: f64,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub marker: Vec2,
    pub gps_target: Vec2,
    pub ticks: Vec<TickRecord>,
    pub detections: Vec<DetectionEvent>,
    pub transitions: Vec<PhaseTransition>,
    pub outcome: Option<TerminalOutcome>,
    pub final_phase: String,
    /// Simulated seconds until the terminal event.
    pub duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceSummary {
    seed: u64,
    marker: Vec2,
    gps_target: Vec2,
    detections: Vec<DetectionEvent>,
    transitions: Vec<PhaseTransition>,
    outcome: Option<TerminalOutcome>,
    final_phase: String,
    duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum TraceLine {
    Tick(TickRecord),
    Summary(TraceSummary),
}

impl EpisodeTrace {
    /// Distance from touchdown to the marker center, if landed.
    pub fn landing_error(&self) -> Option<f64> {
        match self.outcome {
            Some(TerminalOutcome::Landed { x, y }) => Some(dist2([x, y], self.marker)),
            _ => None,
        }
    }

    pub fn uav_positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.ticks.iter().map(|t| t.uav)
    }

    /// One JSON object per tick record, then a summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.ticks {
            out.push_str(&serde_json::to_string(&TraceLine::Tick(t.clone())).expect("serializable"));
            out.push('\n');
        }
        let summary = TraceSummary {
            seed: self.seed,
            marker: self.marker,
            gps_target: self.gps_target,
            detections: self.detections.clone(),
            transitions: self.transitions.clone(),
            outcome: self.outcome.clone(),
            final_phase: self.final_phase.clone(),
            duration: self.duration,
        };
        out.push_str(&serde_json::to_string(&TraceLine::Summary(summary)).expect("serializable"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ScenarioError> {
        let mut ticks = Vec::new();
        let mut summary = None;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine = parse_with_path(line.as_bytes()).map_err(|e| match e {
                ScenarioError::Parse { path, message } => ScenarioError::Parse {
                    path: format!("line {}: {path}", n + 1),
                    message,
                },
                other => other,
            })?;
            match parsed {
                TraceLine::Tick(t) => ticks.push(t),
                TraceLine::Summary(s) => summary = Some(s),
            }
        }
        let s = summary.ok_or_else(|| ScenarioError::Parse {
            path: "summary".into(),
            message: "trace has no summary record".into(),
        })?;
        Ok(EpisodeTrace {
            seed: s.seed,
            marker: s.marker,
            gps_target: s.gps_target,
            ticks,
            detections: s.detections,
            transitions: s.transitions,
            outcome: s.outcome,
            final_phase: s.final_phase,
            duration: s.duration,
        })
    }

    /// SHA-256 of the JSON-lines form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}

fn tick_record(index: usize, w: &WorldState, phase: &LandingPhase, frame: &CameraFrame, det: &DetectionResult) -> TickRecord {
    TickRecord {
        index,
        t: w.time,
        uav: w.uav.position,
        objects: w.objects.iter().map(|o| o.position).collect(),
        phase: phase.label().to_string(),
        marker_in_fov: frame.marker_in_fov,
        s_gt: frame.s_gt,
        s_d: frame.s_d,
        found: det.found,
        confidence: det.confidence,
    }
}

/// Runs one landing episode to its terminal event.
///
/// Physics advances in `sim.dt` ticks; every `sim.decision_interval` the
/// camera is sampled, the detector and landing system act and the object
/// controller chooses headings. The trace is a pure function of the inputs.
pub fn run_episode(
    ctx: &SimContext,
    scenario: &ScenarioChromosome,
    controller: &mut dyn ObjectController,
    seed: u64,
) -> Result<EpisodeTrace, ScenarioError> {
    let (profile, sim, sut) = (&ctx.profile, &ctx.sim, &ctx.sut);
    let mut rng = SimRng::seed_from_u64(seed);
    let mut env = scenario.environment;
    let mut w = init_world(scenario, profile, sim, &mut rng)?;
    let mut trace = EpisodeTrace {
        seed,
        marker: w.marker,
        gps_target: w.gps_target,
        ticks: Vec::new(),
        detections: Vec::new(),
        transitions: Vec::new(),
        outcome: None,
        final_phase: String::new(),
        duration: 0.0,
    };
    let mut phase = LandingPhase::Transit;
    let mut command = UavCommand::hover();
    let mut headings = vec![[0.0, 0.0]; w.objects.len()];
    let per = sim.ticks_per_decision();
    let max_ticks = (sim.timeout / sim.dt).round() as usize;
    let mut decision = 0usize;

    for k in 0..=max_ticks {
        w.time = k as f64 * sim.dt;
        if k % per == 0 {
            let frame = camera_view(&w, profile, sim);
            let det = detect_marker(&frame, &env, &w, profile, &sut.detector, &mut rng);
            let out = sut_step(&phase, &det, &w, &sut.config, ctx.planner(), sim);
            let view = DecisionView {
                world: &w,
                frame: &frame,
                detection: &det,
                profile,
                sim,
                decision,
            };
            headings = controller.decide(&view, &mut env, &mut rng);
            let index = trace.ticks.len();
            trace.ticks.push(tick_record(index, &w, &phase, &frame, &det));
            if det.found {
                trace.detections.push(DetectionEvent {
                    tick: index,
                    t: w.time,
                    confidence: det.confidence,
                    estimated_position: det.estimated_position,
                    is_false_positive: det.is_false_positive,
                    accepted: out.accepted,
                });
            }
            if out.phase.label() != phase.label() {
                trace.transitions.push(PhaseTransition {
                    tick: index,
                    t: w.time,
                    from: phase.label().into(),
                    to: out.phase.label().into(),
                });
            }
            phase = out.phase;
            command = out.command;
            decision += 1;
            if let Some(message) = out.crash_message {
                w.planner_crashed = true;
                trace.outcome = Some(TerminalOutcome::PlannerCrash { message });
                break;
            }
        }
        if k == max_ticks {
            trace.outcome = Some(TerminalOutcome::Timeout);
            break;
        }
        w = step(&w, command.setpoint(w.uav.position), &headings, sim.dt, profile, sim);
        w.time = (k + 1) as f64 * sim.dt;
        if let Some(hit) = w.collided_with {
            trace.outcome = Some(match hit {
                CollisionTarget::Static(id) => TerminalOutcome::Collision {
                    kind: CollisionKind::Static,
                    id,
                },
                CollisionTarget::Dynamic(id) => TerminalOutcome::Collision {
                    kind: CollisionKind::Dynamic,
                    id,
                },
            });
            break;
        }
        if w.landed {
            let p = w.landing_position.unwrap_or(w.uav_ground());
            trace.outcome = Some(TerminalOutcome::Landed { x: p[0], y: p[1] });
            phase = LandingPhase::Landed;
            break;
        }
    }

    let frame = camera_view(&w, profile, sim);
    let det = DetectionResult::none();
    let view = DecisionView {
        world: &w,
        frame: &frame,
        detection: &det,
        profile,
        sim,
        decision,
    };
    controller.finish(&view, &env);
    let index = trace.ticks.len();
    trace.ticks.push(tick_record(index, &w, &phase, &frame, &det));
    trace.final_phase = phase.label().to_string();
    trace.duration = w.time;
    Ok(trace)
}
