//! Violation classification and campaign metrics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{CollisionKind, EpisodeTrace, TerminalOutcome};
use crate::geom::{dist2, Vec3};

/// Touchdown farther than this from the marker center is a violation.
pub const LANDING_THRESHOLD: f64 = 1.5;
/// Confidence the landing stacks require; used to delimit missed windows.
pub const CONFIRM_CONFIDENCE: f64 = 0.7;
pub const TOP_K: usize = 10;
/// Segment supersampling step for coverage, m.
const COVERAGE_STEP: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("trace has no terminal outcome")]
    NonTerminal,
    #[error("vector dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationType {
    I,
    II,
    III,
    IV,
    V,
}

impl ViolationType {
    pub const ALL: [ViolationType; 5] = [
        ViolationType::I,
        ViolationType::II,
        ViolationType::III,
        ViolationType::IV,
        ViolationType::V,
    ];

    pub fn description(self) -> &'static str {
        match self {
            ViolationType::I => "false-positive landing",
            ViolationType::II => "no landing",
            ViolationType::III => "static collision",
            ViolationType::IV => "dynamic collision",
            ViolationType::V => "planner crash",
        }
    }
}

impl fmt::Display for ViolationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationType::I => "I",
            ViolationType::II => "II",
            ViolationType::III => "III",
            ViolationType::IV => "IV",
            ViolationType::V => "V",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Indices into the trace's detection events.
    FalsePositives { detections: Vec<usize> },
    LocalizationDrift,
    /// Inclusive tick-record ranges with the marker in view but unconfirmed.
    MissedWindows { windows: Vec<(usize, usize)> },
    CollisionTick { tick: usize, target: usize },
    CrashMessage { message: String },
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evidence::FalsePositives { detections } => write!(f, "accepted false positives at detections {detections:?}"),
            Evidence::LocalizationDrift => f.write_str("localization drift"),
            Evidence::MissedWindows { windows } => write!(f, "missed windows {windows:?}"),
            Evidence::CollisionTick { tick, target } => write!(f, "collision with #{target} at tick {tick}"),
            Evidence::CrashMessage { message } => f.write_str(message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    #[serde(rename = "type")]
    pub vtype: ViolationType,
    pub evidence: Evidence,
    pub dtl: f64,
    pub ttl: f64,
}

fn missed_windows(trace: &EpisodeTrace) -> Vec<(usize, usize)> {
    let fp_ticks: HashSet<usize> = trace
        .detections
        .iter()
        .filter(|d| d.is_false_positive)
        .map(|d| d.tick)
        .collect();
    let mut windows = Vec::new();
    let mut start: Option<usize> = None;
    for (i, t) in trace.ticks.iter().enumerate() {
        let confirmed = t.found && t.confidence >= CONFIRM_CONFIDENCE && !fp_ticks.contains(&i);
        let missed = t.marker_in_fov && !confirmed;
        match (missed, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                windows.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        windows.push((s, trace.ticks.len() - 1));
    }
    if windows.is_empty() && !trace.ticks.is_empty() {
        // marker never in view: the whole episode is one miss
        windows.push((0, trace.ticks.len() - 1));
    }
    windows
}

/// Assigns at most one violation type with precedence V > IV > III > II > I.
pub fn classify(trace: &EpisodeTrace) -> Result<Option<ViolationRecord>, MetricsError> {
    let outcome = trace.outcome.as_ref().ok_or(MetricsError::NonTerminal)?;
    let last = trace.ticks.len().saturating_sub(1);
    let final_ground = trace.ticks.last().map(|t| [t.uav[0], t.uav[1]]).unwrap_or(trace.marker);
    let dtl = dist2(final_ground, trace.marker);
    let record = |vtype, evidence| ViolationRecord {
        vtype,
        evidence,
        dtl,
        ttl: trace.duration,
    };
    Ok(match outcome {
        TerminalOutcome::PlannerCrash { message } => Some(record(
            ViolationType::V,
            Evidence::CrashMessage {
                message: message.clone(),
            },
        )),
        TerminalOutcome::Collision { kind, id } => {
            let vtype = match kind {
                CollisionKind::Dynamic => ViolationType::IV,
                CollisionKind::Static => ViolationType::III,
            };
            Some(record(vtype, Evidence::CollisionTick { tick: last, target: *id }))
        }
        TerminalOutcome::Timeout => Some(record(
            ViolationType::II,
            Evidence::MissedWindows {
                windows: missed_windows(trace),
            },
        )),
        TerminalOutcome::Landed { x, y } => {
            let dtl = dist2([*x, *y], trace.marker);
            if dtl <= LANDING_THRESHOLD {
                None
            } else {
                let fps: Vec<usize> = trace
                    .detections
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.accepted && d.is_false_positive)
                    .map(|(i, _)| i)
                    .collect();
                let evidence = if fps.is_empty() {
                    Evidence::LocalizationDrift
                } else {
                    Evidence::FalsePositives { detections: fps }
                };
                Some(ViolationRecord {
                    vtype: ViolationType::I,
                    evidence,
                    dtl,
                    ttl: trace.duration,
                })
            }
        }
    })
}

pub fn landing_violation_pct(violations: &[bool]) -> f64 {
    if violations.is_empty() {
        return 0.0;
    }
    100.0 * violations.iter().filter(|v| **v).count() as f64 / violations.len() as f64
}

/// 1-based episode index of the K-th violation in execution order.
pub fn top_k(violations: &[bool], k: usize) -> Option<usize> {
    violations
        .iter()
        .enumerate()
        .filter(|(_, v)| **v)
        .nth(k.checked_sub(1)?)
        .map(|(i, _)| i + 1)
}

/// Mean over scenarios of the mean distance to every scenario.
pub fn parameter_distance(vectors: &[Vec<f64>]) -> Result<f64, MetricsError> {
    let n = vectors.len();
    if n == 0 {
        return Ok(0.0);
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(MetricsError::Dimension(dim, v.len()));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            total += 2.0 * d;
        }
    }
    Ok(total / (n * n) as f64)
}

/// World grid for trajectory coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageGrid {
    pub half_extent: f64,
    pub max_altitude: f64,
    pub cell: f64,
}

impl Default for CoverageGrid {
    fn default() -> Self {
        CoverageGrid {
            half_extent: 20.0,
            max_altitude: 16.0,
            cell: 2.0,
        }
    }
}

impl CoverageGrid {
    pub fn dims(&self) -> [usize; 3] {
        let n = |len: f64| (len / self.cell).round().max(1.0) as usize;
        [n(2.0 * self.half_extent), n(2.0 * self.half_extent), n(self.max_altitude)]
    }

    pub fn cell_count(&self) -> usize {
        self.dims().iter().product()
    }

    /// Cell holding `p`; points on the outer faces fall in the last cell.
    pub fn cell_of(&self, p: Vec3) -> Option<[usize; 3]> {
        let d = self.dims();
        let lo = [-self.half_extent, -self.half_extent, 0.0];
        let hi = [self.half_extent, self.half_extent, self.max_altitude];
        let mut idx = [0usize; 3];
        for a in 0..3 {
            if !(p[a] >= lo[a] - 1e-9 && p[a] <= hi[a] + 1e-9) {
                return None;
            }
            idx[a] = (((p[a] - lo[a]) / self.cell).floor().max(0.0) as usize).min(d[a] - 1);
        }
        Some(idx)
    }

    /// Cells touched by a polyline, sampled every 0.25 m along each segment.
    pub fn visited(&self, path: &[Vec3]) -> BTreeSet<[usize; 3]> {
        let mut cells = BTreeSet::new();
        for (i, p) in path.iter().enumerate() {
            cells.extend(self.cell_of(*p));
            if let Some(q) = path.get(i + 1) {
                let len = crate::geom::dist3(*p, *q);
                let steps = (len / COVERAGE_STEP).ceil() as usize;
                for s in 1..steps {
                    let f = s as f64 / steps as f64;
                    let x = [p[0] + (q[0] - p[0]) * f, p[1] + (q[1] - p[1]) * f, p[2] + (q[2] - p[2]) * f];
                    cells.extend(self.cell_of(x));
                }
            }
        }
        cells
    }
}

/// Percentage of grid cells visited by any of the (violating) traces.
pub fn trajectory_coverage<'a>(traces: impl IntoIterator<Item = &'a EpisodeTrace>, grid: &CoverageGrid) -> f64 {
    let mut covered = BTreeSet::new();
    for t in traces {
        let path: Vec<Vec3> = t.uav_positions().collect();
        covered.extend(grid.visited(&path));
    }
    100.0 * covered.len() as f64 / grid.cell_count() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub episodes: usize,
    pub violations: usize,
    pub violation_pct: f64,
    /// `None` when fewer than K violations were found.
    pub top_10: Option<usize>,
    pub parameter_distance: f64,
    pub coverage_pct: f64,
    pub per_type_counts: BTreeMap<ViolationType, usize>,
}

pub fn summarize(
    traces: &[EpisodeTrace],
    records: &[Option<ViolationRecord>],
    vectors: &[Vec<f64>],
    grid: &CoverageGrid,
) -> Result<MetricsSummary, MetricsError> {
    let flags: Vec<bool> = records.iter().map(Option::is_some).collect();
    let mut per_type: BTreeMap<ViolationType, usize> = ViolationType::ALL.iter().map(|t| (*t, 0)).collect();
    for r in records.iter().flatten() {
        *per_type.entry(r.vtype).or_default() += 1;
    }
    let violating = traces.iter().zip(&flags).filter(|(_, v)| **v).map(|(t, _)| t);
    Ok(MetricsSummary {
        episodes: records.len(),
        violations: flags.iter().filter(|v| **v).count(),
        violation_pct: landing_violation_pct(&flags),
        top_10: top_k(&flags, TOP_K),
        parameter_distance: parameter_distance(vectors)?,
        coverage_pct: trajectory_coverage(violating, grid),
        per_type_counts: per_type,
    })
}
