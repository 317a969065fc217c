//! Experiment configuration file (TOML) and its resolution into campaign
//! configs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use garl_core::engine::{CampaignConfig, Method};
use garl_core::ga::GaConfig;
use garl_core::metrics::CoverageGrid;
use garl_core::perception::DetectorProfile;
use garl_core::rl::TrainConfig;
use garl_core::world::{MapName, MapProfile, SimConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapOverrides {
    pub world_half_extent: Option<f64>,
    pub object_count: Option<usize>,
    pub person_max_speed: Option<f64>,
    pub dog_max_speed: Option<f64>,
    pub bird_max_speed: Option<f64>,
    pub bird_altitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorOverrides {
    pub base_confidence: Option<f64>,
    pub occlusion_exponent: Option<f64>,
    pub min_apparent_area: Option<f64>,
    pub fp_susceptibility: Option<f64>,
    pub confidence_noise_sigma: Option<f64>,
    pub glare_factor: Option<f64>,
    pub position_noise_per_meter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub method: String,
    pub map: String,
    pub sut: String,
    pub budget: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    /// Trained weights used by RL-driven methods; `train` writes here too.
    pub weights: PathBuf,
    pub ga: GaConfig,
    pub train: TrainConfig,
    pub sim: SimConfig,
    pub coverage: CoverageGrid,
    pub map_overrides: MapOverrides,
    pub detector_overrides: DetectorOverrides,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: "garl".into(),
            map: "court".into(),
            sut: "mm-mls".into(),
            budget: 400,
            repetitions: 3,
            seed: 0,
            out: PathBuf::from("garl-runs"),
            jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            weights: PathBuf::from("garl-weights/weights.bin"),
            ga: GaConfig::default(),
            train: TrainConfig::default(),
            sim: SimConfig::default(),
            coverage: CoverageGrid::default(),
            map_overrides: MapOverrides::default(),
            detector_overrides: DetectorOverrides::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<String>,
    pub map: Option<String>,
    pub sut: Option<String>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub weights: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, cli: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! take {
            ($field:ident, $src:ident) => {
                if let Some(v) = cli.$src.clone() {
                    cfg.$field = v;
                }
            };
        }
        take!(method, method);
        take!(map, map);
        take!(sut, sut);
        take!(budget, budget);
        take!(seed, seed);
        take!(repetitions, reps);
        take!(out, out);
        take!(jobs, jobs);
        take!(weights, weights);
        if let Ok(s) = std::env::var("GARL_SEED") {
            cfg.seed = s.trim().parse().with_context(|| format!("GARL_SEED is not an integer: '{s}'"))?;
        }
        if cfg.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        if cfg.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        Ok(cfg)
    }

    pub fn method(&self) -> Result<Method> {
        self.method.parse::<Method>().map_err(anyhow::Error::msg)
    }

    fn profile(&self, map: MapName) -> MapProfile {
        let mut p = MapProfile::by_name(map);
        let o = &self.map_overrides;
        if let Some(v) = o.world_half_extent {
            p.world_half_extent = v;
        }
        if let Some(v) = o.object_count {
            p.object_count = v;
        }
        if let Some(v) = o.person_max_speed {
            p.person_max_speed = v;
        }
        if let Some(v) = o.dog_max_speed {
            p.dog_max_speed = v;
        }
        if let Some(v) = o.bird_max_speed {
            p.bird_max_speed = v;
        }
        if let Some(v) = o.bird_altitude {
            p.bird_altitude = v;
        }
        p
    }

    fn detector(&self, mut d: DetectorProfile) -> DetectorProfile {
        let o = &self.detector_overrides;
        let pairs = [
            (o.base_confidence, &mut d.base_confidence),
            (o.occlusion_exponent, &mut d.occlusion_exponent),
            (o.min_apparent_area, &mut d.min_apparent_area),
            (o.fp_susceptibility, &mut d.fp_susceptibility),
            (o.confidence_noise_sigma, &mut d.confidence_noise_sigma),
            (o.glare_factor, &mut d.glare_factor),
            (o.position_noise_per_meter, &mut d.position_noise_per_meter),
        ];
        for (v, slot) in pairs {
            if let Some(v) = v {
                *slot = v;
            }
        }
        d
    }

    /// Concrete campaign config for repetition `rep` (seed = master + rep).
    pub fn campaign(&self, rep: usize) -> Result<CampaignConfig> {
        let map: MapName = self.map.parse().map_err(anyhow::Error::msg)?;
        let mut c = CampaignConfig::new(self.method()?, map, &self.sut, self.budget, self.seed.wrapping_add(rep as u64))?;
        c.profile = self.profile(map);
        c.sut.detector = self.detector(c.sut.detector);
        c.sim = self.sim.clone();
        c.ga = self.ga;
        c.train = self.train;
        c.coverage = self.coverage;
        c.validate()?;
        Ok(c)
    }
}
