//! Parametric marker detectors standing in for the vision stacks.
//!
//! True-marker confidence is
//! `base · (s_d/s_gt)^occlusion_exponent · exp(-Σ wᵢ·intensityᵢ) + noise`,
//! clamped to [0, 1]. Visible distractor patches may additionally fire
//! false positives; the more confident of the two results is reported.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::scenario::{EnvironmentGene, ENV_GENE_COUNT};
use crate::world::{CameraFrame, MapProfile, WorldState, REFERENCE_ALTITUDE};

/// Confidence below which nothing is reported.
pub const MIN_REPORTED_CONFIDENCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Classic,
    Learned,
}

/// Sensitivity to each weather intensity (sun position excluded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherWeights {
    pub dust: f64,
    pub fog: f64,
    pub rain: f64,
    pub snow: f64,
    pub road_wetness: f64,
    pub falling_leaves: f64,
    pub road_leaves: f64,
    pub road_snow: f64,
}

impl WeatherWeights {
    pub fn uniform(airborne: f64, leaves: f64, ground: f64) -> Self {
        WeatherWeights {
            dust: airborne,
            fog: airborne,
            rain: airborne,
            snow: airborne,
            road_wetness: ground,
            falling_leaves: leaves,
            road_leaves: ground,
            road_snow: ground,
        }
    }

    fn as_array(&self) -> [f64; ENV_GENE_COUNT - 1] {
        [
            self.dust,
            self.fog,
            self.rain,
            self.snow,
            self.road_wetness,
            self.falling_leaves,
            self.road_leaves,
            self.road_snow,
        ]
    }

    /// Σ wᵢ·intensityᵢ over the eight weather fields.
    pub fn load(&self, env: &EnvironmentGene) -> f64 {
        let e = env.to_array();
        self.as_array().iter().zip(e.iter()).map(|(w, x)| w * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorProfile {
    pub name: DetectorKind,
    pub base_confidence: f64,
    pub weather_weights: WeatherWeights,
    pub occlusion_exponent: f64,
    /// Apparent marker area (m², altitude-scaled) below which detection fails.
    pub min_apparent_area: f64,
    pub fp_susceptibility: f64,
    pub confidence_noise_sigma: f64,
    /// Confidence multiplier under low sun over a wet or reflective marker.
    pub glare_factor: f64,
    /// Distance of sun_position from 0 or 1 that counts as low sun.
    pub glare_window: f64,
    /// road_wetness at or above which the marker surface reflects.
    pub wet_threshold: f64,
    /// Standard deviation of the position estimate per meter of altitude.
    pub position_noise_per_meter: f64,
}

impl DetectorProfile {
    /// Hand-tuned feature detector: brittle in weather, many false positives.
    pub fn classic() -> Self {
        DetectorProfile {
            name: DetectorKind::Classic,
            base_confidence: 0.85,
            weather_weights: WeatherWeights::uniform(0.8, 0.4, 0.25),
            occlusion_exponent: 2.0,
            min_apparent_area: 0.8,
            fp_susceptibility: 0.08,
            confidence_noise_sigma: 0.05,
            glare_factor: 0.7,
            glare_window: 0.08,
            wet_threshold: 0.12,
            position_noise_per_meter: 0.02,
        }
    }

    /// Learned detector: robust to weather and small apparent sizes.
    pub fn learned() -> Self {
        DetectorProfile {
            name: DetectorKind::Learned,
            base_confidence: 0.95,
            weather_weights: WeatherWeights::uniform(0.4, 0.2, 0.15),
            occlusion_exponent: 1.5,
            min_apparent_area: 0.3,
            fp_susceptibility: 0.02,
            confidence_noise_sigma: 0.03,
            glare_factor: 0.7,
            glare_window: 0.08,
            wet_threshold: 0.12,
            position_noise_per_meter: 0.02,
        }
    }

    pub fn by_kind(kind: DetectorKind) -> Self {
        match kind {
            DetectorKind::Classic => Self::classic(),
            DetectorKind::Learned => Self::learned(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.base_confidence) {
            return Err("base_confidence out of [0,1]".into());
        }
        if !(0.0..=1.0).contains(&self.fp_susceptibility) {
            return Err("fp_susceptibility out of [0,1]".into());
        }
        if self
            .weather_weights
            .as_array()
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err("weather weights must be finite and >= 0".into());
        }
        if !(self.occlusion_exponent >= 1.0) {
            return Err("occlusion_exponent must be >= 1".into());
        }
        if !(self.confidence_noise_sigma >= 0.0) || !(self.min_apparent_area >= 0.0) {
            return Err("noise sigma and minimum area must be >= 0".into());
        }
        Ok(())
    }

    fn glare(&self, env: &EnvironmentGene, frame: &CameraFrame) -> bool {
        let low_sun = env.sun_position <= self.glare_window || env.sun_position >= 1.0 - self.glare_window;
        low_sun && (env.road_wetness >= self.wet_threshold || frame.marker_on_reflective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub found: bool,
    pub confidence: f64,
    pub estimated_position: Vec2,
    /// Ground truth for oracles; never consulted by the landing system.
    pub is_false_positive: bool,
    /// Distractor patch behind a false positive.
    pub source_patch: Option<usize>,
}

impl DetectionResult {
    pub fn none() -> Self {
        DetectionResult {
            found: false,
            confidence: 0.0,
            estimated_position: [0.0, 0.0],
            is_false_positive: false,
            source_patch: None,
        }
    }
}

/// Random draws consumed by one detection, taken up front so the result is
/// a deterministic function of the frame for a fixed draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionDraw {
    pub confidence_noise: f64,
    pub position_noise: Vec2,
    /// One uniform per distractor patch of the map.
    pub distractor_uniforms: Vec<f64>,
}

impl DetectionDraw {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, patch_count: usize) -> Self {
        let confidence_noise: f64 = StandardNormal.sample(rng);
        let nx: f64 = StandardNormal.sample(rng);
        let ny: f64 = StandardNormal.sample(rng);
        DetectionDraw {
            confidence_noise,
            position_noise: [nx, ny],
            distractor_uniforms: (0..patch_count).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn zero(patch_count: usize) -> Self {
        DetectionDraw {
            confidence_noise: 0.0,
            position_noise: [0.0, 0.0],
            distractor_uniforms: vec![1.0; patch_count],
        }
    }
}

/// Apparent area: visible marker area scaled down beyond the reference altitude.
pub fn apparent_area(s_d: f64, altitude: f64) -> f64 {
    if altitude <= REFERENCE_ALTITUDE {
        s_d
    } else {
        s_d * (REFERENCE_ALTITUDE / altitude).powi(2)
    }
}

/// Noise-free confidence for the true marker, before glare.
pub fn marker_confidence(frame: &CameraFrame, env: &EnvironmentGene, profile: &DetectorProfile) -> f64 {
    if !frame.marker_in_fov || frame.s_gt <= 0.0 {
        return 0.0;
    }
    let visible = (frame.s_d / frame.s_gt).clamp(0.0, 1.0);
    profile.base_confidence
        * visible.powf(profile.occlusion_exponent)
        * (-profile.weather_weights.load(env)).exp()
}

/// Detection with explicit draws; see [`detect_marker`].
pub fn detect_with_draw(
    frame: &CameraFrame,
    env: &EnvironmentGene,
    marker: Vec2,
    map: &MapProfile,
    profile: &DetectorProfile,
    draw: &DetectionDraw,
) -> DetectionResult {
    let mut best = DetectionResult::none();

    if frame.marker_in_fov {
        let mut conf = marker_confidence(frame, env, profile);
        if profile.glare(env, frame) {
            conf *= profile.glare_factor;
        }
        conf = (conf + profile.confidence_noise_sigma * draw.confidence_noise).clamp(0.0, 1.0);
        let area_ok = frame.s_d > 0.0
            && apparent_area(frame.s_d, frame.uav_altitude) >= profile.min_apparent_area;
        if area_ok && conf >= MIN_REPORTED_CONFIDENCE {
            let sigma = profile.position_noise_per_meter * frame.uav_altitude;
            best = DetectionResult {
                found: true,
                confidence: conf,
                estimated_position: [
                    marker[0] + sigma * draw.position_noise[0],
                    marker[1] + sigma * draw.position_noise[1],
                ],
                is_false_positive: false,
                source_patch: None,
            };
        }
    }

    for &(patch, strength) in &frame.visible_distractors {
        let u = draw.distractor_uniforms.get(patch).copied().unwrap_or(1.0);
        if u < profile.fp_susceptibility * strength {
            let conf = (profile.base_confidence * strength).clamp(0.0, 1.0);
            if conf >= MIN_REPORTED_CONFIDENCE && conf > best.confidence {
                best = DetectionResult {
                    found: true,
                    confidence: conf,
                    estimated_position: map.distractor_patches[patch].center,
                    is_false_positive: true,
                    source_patch: Some(patch),
                };
            }
        }
    }
    best
}

/// One detection attempt on a camera frame.
pub fn detect_marker<R: Rng + ?Sized>(
    frame: &CameraFrame,
    env: &EnvironmentGene,
    world: &WorldState,
    map: &MapProfile,
    profile: &DetectorProfile,
    rng: &mut R,
) -> DetectionResult {
    let draw = DetectionDraw::sample(rng, map.distractor_patches.len());
    detect_with_draw(frame, env, world.marker, map, profile, &draw)
}
