//! Landing systems under test: a detection-confirmed descent state machine,
//! optionally backed by the voxel planner.

use serde::{Deserialize, Serialize};

use crate::geom::{norm2, Vec2, Vec3};
use crate::perception::{DetectionResult, DetectorKind, DetectorProfile};
use crate::planner::{plan_descent, PlanError, Planner};
use crate::world::{SimConfig, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "lowercase")]
pub enum LandingPhase {
    Transit,
    Confirming {
        elapsed: f64,
        /// Consecutive time without a confident detection.
        lost: f64,
        estimate: Vec2,
    },
    Descending {
        target: Vec2,
    },
    Landed,
    Aborted,
    Crashed,
}

impl LandingPhase {
    pub fn label(&self) -> &'static str {
        match self {
            LandingPhase::Transit => "transit",
            LandingPhase::Confirming { .. } => "confirming",
            LandingPhase::Descending { .. } => "descending",
            LandingPhase::Landed => "landed",
            LandingPhase::Aborted => "aborted",
            LandingPhase::Crashed => "crashed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerMode {
    None,
    Avoidance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SutConfig {
    pub name: String,
    pub detector: DetectorKind,
    pub planner: PlannerMode,
    /// Fault F1: objects whose top is at or below this height are not mapped.
    pub fault_low_height_blind: Option<f64>,
    /// Fault F2: crash when the touchdown cell holds a dynamic object.
    pub fault_terminal_crash: bool,
    pub confirm_confidence: f64,
    pub confirm_duration: f64,
    /// Confidence may drop for this long while confirming.
    pub confirm_grace: f64,
    /// Horizontal error under which the planner-less stack descends.
    pub align_radius: f64,
    /// Path-following speed of the planner-backed stack.
    pub track_speed: f64,
}

impl SutConfig {
    fn base(name: &str, detector: DetectorKind, planner: PlannerMode) -> Self {
        SutConfig {
            name: name.to_string(),
            detector,
            planner,
            fault_low_height_blind: None,
            fault_terminal_crash: false,
            confirm_confidence: 0.7,
            confirm_duration: 5.0,
            confirm_grace: 2.0,
            align_radius: 1.0,
            track_speed: 1.0,
        }
    }

    pub fn opencv_mls() -> Self {
        Self::base("opencv-mls", DetectorKind::Classic, PlannerMode::None)
    }

    pub fn tphyolo_mls() -> Self {
        Self::base("tphyolo-mls", DetectorKind::Learned, PlannerMode::None)
    }

    pub fn mm_mls() -> Self {
        let mut c = Self::base("mm-mls", DetectorKind::Learned, PlannerMode::Avoidance);
        c.fault_low_height_blind = Some(0.6);
        c.fault_terminal_crash = true;
        c
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "opencv-mls" => Some(Self::opencv_mls()),
            "tphyolo-mls" => Some(Self::tphyolo_mls()),
            "mm-mls" => Some(Self::mm_mls()),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 3] = ["opencv-mls", "tphyolo-mls", "mm-mls"];
}

/// A configured landing stack: state-machine settings plus its detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingSut {
    pub config: SutConfig,
    pub detector: DetectorProfile,
}

impl LandingSut {
    pub fn preset(name: &str) -> Option<Self> {
        let config = SutConfig::preset(name)?;
        let detector = DetectorProfile::by_kind(config.detector);
        Some(LandingSut { config, detector })
    }
}

/// Guidance handed to the flight controller until the next decision tick.
#[derive(Debug, Clone, PartialEq)]
pub enum UavCommand {
    Velocity(Vec3),
    /// Follow the waypoint list at the given speed.
    Track { path: Vec<Vec3>, speed: f64 },
}

impl UavCommand {
    pub fn hover() -> Self {
        UavCommand::Velocity([0.0; 3])
    }

    /// Velocity setpoint for the current physics tick.
    pub fn setpoint(&self, pos: Vec3) -> Vec3 {
        match self {
            UavCommand::Velocity(v) => *v,
            UavCommand::Track { path, speed } => crate::planner::track_setpoint(path, pos, *speed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SutOutput {
    pub command: UavCommand,
    pub phase: LandingPhase,
    /// The detection was adopted as the landing estimate.
    pub accepted: bool,
    pub crash_message: Option<String>,
}

fn fly_to(from: Vec3, to: Vec2, cruise: f64) -> Vec3 {
    let d = [to[0] - from[0], to[1] - from[1]];
    let n = norm2(d);
    if n < 1e-9 {
        return [0.0; 3];
    }
    let v = cruise.min(n);
    [d[0] / n * v, d[1] / n * v, 0.0]
}

fn descend_command(
    w: &WorldState,
    target: Vec2,
    cfg: &SutConfig,
    planner: Option<&Planner>,
    sim: &SimConfig,
) -> Result<UavCommand, PlanError> {
    match (cfg.planner, planner) {
        (PlannerMode::Avoidance, Some(p)) => {
            let path = plan_descent(p, w, target, cfg)?;
            Ok(UavCommand::Track {
                path,
                speed: cfg.track_speed,
            })
        }
        _ => {
            let pos = w.uav.position;
            let e = [target[0] - pos[0], target[1] - pos[1]];
            let mut v = fly_to(pos, target, sim.cruise_speed);
            if norm2(e) < cfg.align_radius {
                v[2] = -sim.descent_speed;
            }
            Ok(UavCommand::Velocity(v))
        }
    }
}

/// One decision tick of the landing state machine.
///
/// Transit flies to the commanded GPS point; a confident detection starts
/// confirmation (hovering); after `confirm_duration` of confident ticks the
/// stack descends toward the latest estimate, re-targeting on every
/// confident detection. Losing confidence for longer than `confirm_grace`
/// while confirming returns to transit.
pub fn sut_step(
    phase: &LandingPhase,
    detection: &DetectionResult,
    w: &WorldState,
    cfg: &SutConfig,
    planner: Option<&Planner>,
    sim: &SimConfig,
) -> SutOutput {
    let tick = sim.decision_interval;
    let confident = detection.found && detection.confidence >= cfg.confirm_confidence;
    let hold = |phase: LandingPhase| SutOutput {
        command: UavCommand::hover(),
        phase,
        accepted: false,
        crash_message: None,
    };
    if w.landed {
        return hold(LandingPhase::Landed);
    }
    let descend = |target: Vec2, accepted: bool| match descend_command(w, target, cfg, planner, sim) {
        Ok(command) => SutOutput {
            command,
            phase: LandingPhase::Descending { target },
            accepted,
            crash_message: None,
        },
        Err(PlanError::Crash(msg)) => SutOutput {
            command: UavCommand::hover(),
            phase: LandingPhase::Crashed,
            accepted,
            crash_message: Some(msg),
        },
        Err(PlanError::NoPath) => SutOutput {
            command: UavCommand::hover(),
            phase: LandingPhase::Aborted,
            accepted,
            crash_message: None,
        },
    };

    match *phase {
        LandingPhase::Transit => {
            if confident {
                SutOutput {
                    command: UavCommand::hover(),
                    phase: LandingPhase::Confirming {
                        elapsed: 0.0,
                        lost: 0.0,
                        estimate: detection.estimated_position,
                    },
                    accepted: true,
                    crash_message: None,
                }
            } else {
                SutOutput {
                    command: UavCommand::Velocity(fly_to(w.uav.position, w.gps_target, sim.cruise_speed)),
                    phase: LandingPhase::Transit,
                    accepted: false,
                    crash_message: None,
                }
            }
        }
        LandingPhase::Confirming { elapsed, lost, estimate } => {
            if confident {
                let elapsed = elapsed + tick;
                let estimate = detection.estimated_position;
                if elapsed >= cfg.confirm_duration - 1e-9 {
                    descend(estimate, true)
                } else {
                    SutOutput {
                        command: UavCommand::hover(),
                        phase: LandingPhase::Confirming {
                            elapsed,
                            lost: 0.0,
                            estimate,
                        },
                        accepted: true,
                        crash_message: None,
                    }
                }
            } else {
                let lost = lost + tick;
                if lost > cfg.confirm_grace + 1e-9 {
                    hold(LandingPhase::Transit)
                } else {
                    hold(LandingPhase::Confirming { elapsed, lost, estimate })
                }
            }
        }
        LandingPhase::Descending { target } => {
            if confident {
                descend(detection.estimated_position, true)
            } else {
                descend(target, false)
            }
        }
        LandingPhase::Landed => hold(LandingPhase::Landed),
        LandingPhase::Aborted => hold(LandingPhase::Aborted),
        LandingPhase::Crashed => hold(LandingPhase::Crashed),
    }
}
