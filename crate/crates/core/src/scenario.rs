//! Chromosome encoding of a static landing scenario.
//!
//! A scenario is three composite genes: environment (nine single-scalar
//! nuclear genes), marker (one two-scalar nuclear gene) and one nuclear
//! gene per dynamic object. The flat vector form feeds every distance
//! computation in the search and metrics code.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::MapProfile;

/// Upper bound of every weather intensity.
pub const WEATHER_MAX: f64 = 0.15;

/// Number of environment nuclear genes.
pub const ENV_GENE_COUNT: usize = 9;

/// Properties carried by one dynamic-object nuclear gene (type, x, y, speed).
pub const OBJECT_PROPERTY_COUNT: usize = 4;

/// Format tag written into every scenario file.
pub const SCENARIO_FORMAT: &str = "garl-scenario/1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("scenario out of range: {}", .0.join("; "))]
    Range(Vec<String>),
    #[error("unsupported scenario format `{0}`")]
    Version(String),
    #[error("expected {expected} dynamic objects, found {found}")]
    ObjectCount { expected: usize, found: usize },
    #[error("vector has length {found}, expected {expected}")]
    VectorLength { expected: usize, found: usize },
}

/// Weather, ground condition and time of day.
///
/// `sun_position` maps linearly onto 06:00-18:00 local time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentGene {
    pub dust: f64,
    pub fog: f64,
    pub rain: f64,
    pub snow: f64,
    pub road_wetness: f64,
    pub falling_leaves: f64,
    pub road_leaves: f64,
    pub road_snow: f64,
    pub sun_position: f64,
}

/// Names of the environment fields in gene order.
pub const ENV_FIELD_NAMES: [&str; ENV_GENE_COUNT] = [
    "dust",
    "fog",
    "rain",
    "snow",
    "road_wetness",
    "falling_leaves",
    "road_leaves",
    "road_snow",
    "sun_position",
];

impl EnvironmentGene {
    pub fn to_array(&self) -> [f64; ENV_GENE_COUNT] {
        [
            self.dust,
            self.fog,
            self.rain,
            self.snow,
            self.road_wetness,
            self.falling_leaves,
            self.road_leaves,
            self.road_snow,
            self.sun_position,
        ]
    }

    pub fn from_array(a: [f64; ENV_GENE_COUNT]) -> Self {
        Self {
            dust: a[0],
            fog: a[1],
            rain: a[2],
            snow: a[3],
            road_wetness: a[4],
            falling_leaves: a[5],
            road_leaves: a[6],
            road_snow: a[7],
            sun_position: a[8],
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        self.to_array()[index]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        let mut a = self.to_array();
        a[index] = value;
        *self = Self::from_array(a);
    }

    /// Inclusive range of the environment field at `index`.
    pub fn range(index: usize) -> (f64, f64) {
        if index == ENV_GENE_COUNT - 1 {
            (0.0, 1.0)
        } else {
            (0.0, WEATHER_MAX)
        }
    }

    /// Local time of day in hours for the encoded sun position.
    pub fn local_hour(&self) -> f64 {
        6.0 + 12.0 * self.sun_position
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerGene {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Person,
    Dog,
    Bird,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::Person, ObjectKind::Dog, ObjectKind::Bird];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Type index mapped to {0, 0.5, 1}.
    pub fn normalized(self) -> f64 {
        self.index() as f64 / 2.0
    }

    pub fn from_normalized(v: f64) -> ObjectKind {
        let i = (v.clamp(0.0, 1.0) * 2.0).round() as usize;
        Self::ALL[i.min(2)]
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Person => "person",
            ObjectKind::Dog => "dog",
            ObjectKind::Bird => "bird",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicObjectGene {
    pub kind: ObjectKind,
    pub start_x: f64,
    pub start_y: f64,
    /// Fraction of the kind's maximum speed.
    pub speed_fraction: f64,
}

impl DynamicObjectGene {
    pub fn properties(&self) -> [f64; OBJECT_PROPERTY_COUNT] {
        [
            self.kind.normalized(),
            self.start_x,
            self.start_y,
            self.speed_fraction,
        ]
    }

    pub fn from_properties(p: [f64; OBJECT_PROPERTY_COUNT]) -> Self {
        Self {
            kind: ObjectKind::from_normalized(p[0]),
            start_x: p[1],
            start_y: p[2],
            speed_fraction: p[3],
        }
    }
}

/// Value domain of a single gene property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropertyDomain {
    Continuous { lo: f64, hi: f64 },
    /// Categorical with `n` levels encoded as `i / (n - 1)`.
    Categorical { n: usize },
}

impl PropertyDomain {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PropertyDomain::Continuous { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            PropertyDomain::Categorical { n } => {
                let i = rng.random_range(0..n);
                i as f64 / (n - 1) as f64
            }
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            PropertyDomain::Continuous { lo, hi } => v >= lo && v <= hi,
            PropertyDomain::Categorical { n } => {
                let scaled = v * (n - 1) as f64;
                (scaled - scaled.round()).abs() < 1e-12 && (0.0..=1.0).contains(&v)
            }
        }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        match *self {
            PropertyDomain::Continuous { lo, hi } => v.clamp(lo, hi),
            PropertyDomain::Categorical { n } => {
                let i = (v.clamp(0.0, 1.0) * (n - 1) as f64).round();
                i / (n - 1) as f64
            }
        }
    }
}

pub const POSITION_DOMAIN: PropertyDomain = PropertyDomain::Continuous { lo: -1.0, hi: 1.0 };
pub const UNIT_DOMAIN: PropertyDomain = PropertyDomain::Continuous { lo: 0.0, hi: 1.0 };
pub const KIND_DOMAIN: PropertyDomain = PropertyDomain::Categorical { n: 3 };

/// One atomic, never-split unit of the chromosome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuclearGene {
    Environment { index: usize, value: f64 },
    Marker(MarkerGene),
    Object(DynamicObjectGene),
}

impl NuclearGene {
    pub fn property_count(&self) -> usize {
        match self {
            NuclearGene::Environment { .. } => 1,
            NuclearGene::Marker(_) => 2,
            NuclearGene::Object(_) => OBJECT_PROPERTY_COUNT,
        }
    }

    pub fn property(&self, j: usize) -> f64 {
        match self {
            NuclearGene::Environment { value, .. } => *value,
            NuclearGene::Marker(m) => [m.x, m.y][j],
            NuclearGene::Object(o) => o.properties()[j],
        }
    }

    pub fn set_property(&mut self, j: usize, v: f64) {
        match self {
            NuclearGene::Environment { value, .. } => *value = v,
            NuclearGene::Marker(m) => {
                if j == 0 {
                    m.x = v
                } else {
                    m.y = v
                }
            }
            NuclearGene::Object(o) => {
                let mut p = o.properties();
                p[j] = v;
                *o = DynamicObjectGene::from_properties(p);
            }
        }
    }

    pub fn domain(&self, j: usize) -> PropertyDomain {
        match self {
            NuclearGene::Environment { index, .. } => {
                let (lo, hi) = EnvironmentGene::range(*index);
                PropertyDomain::Continuous { lo, hi }
            }
            NuclearGene::Marker(_) => POSITION_DOMAIN,
            NuclearGene::Object(_) => match j {
                0 => KIND_DOMAIN,
                1 | 2 => POSITION_DOMAIN,
                _ => UNIT_DOMAIN,
            },
        }
    }

    /// Bit-exact key, used for multiset comparisons.
    pub fn key(&self) -> Vec<u64> {
        let mut k = vec![match self {
            NuclearGene::Environment { index, .. } => *index as u64,
            NuclearGene::Marker(_) => 100,
            NuclearGene::Object(_) => 200,
        }];
        k.extend((0..self.property_count()).map(|j| self.property(j).to_bits()));
        k
    }
}

/// Complete static test-scenario genome.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioChromosome {
    pub environment: EnvironmentGene,
    pub marker: MarkerGene,
    pub objects: Vec<DynamicObjectGene>,
}

/// Vector dimension of a chromosome with `object_count` objects.
pub fn vector_len(object_count: usize) -> usize {
    ENV_GENE_COUNT + 2 + OBJECT_PROPERTY_COUNT * object_count
}

/// Nuclear gene count of a chromosome with `object_count` objects.
pub fn nuclear_len(object_count: usize) -> usize {
    ENV_GENE_COUNT + 1 + object_count
}

impl ScenarioChromosome {
    /// Draws every field uniformly from its declared range.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, profile: &MapProfile) -> Self {
        Self::random_with_objects(rng, profile.object_count)
    }

    pub fn random_with_objects<R: Rng + ?Sized>(rng: &mut R, object_count: usize) -> Self {
        let mut env = [0.0; ENV_GENE_COUNT];
        for (i, v) in env.iter_mut().enumerate() {
            let (lo, hi) = EnvironmentGene::range(i);
            *v = lo + (hi - lo) * rng.random::<f64>();
        }
        let marker = MarkerGene {
            x: POSITION_DOMAIN.sample(rng),
            y: POSITION_DOMAIN.sample(rng),
        };
        let objects = (0..object_count)
            .map(|_| DynamicObjectGene {
                kind: ObjectKind::from_normalized(KIND_DOMAIN.sample(rng)),
                start_x: POSITION_DOMAIN.sample(rng),
                start_y: POSITION_DOMAIN.sample(rng),
                speed_fraction: UNIT_DOMAIN.sample(rng),
            })
            .collect();
        Self {
            environment: EnvironmentGene::from_array(env),
            marker,
            objects,
        }
    }

    pub fn vector_len(&self) -> usize {
        vector_len(self.objects.len())
    }

    /// Flat vector: environment, marker, then per object (type, x, y, speed).
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.vector_len());
        v.extend_from_slice(&self.environment.to_array());
        v.push(self.marker.x);
        v.push(self.marker.y);
        for o in &self.objects {
            v.extend_from_slice(&o.properties());
        }
        v
    }

    pub fn from_vector(v: &[f64], object_count: usize) -> Result<Self, ScenarioError> {
        let expected = vector_len(object_count);
        if v.len() != expected {
            return Err(ScenarioError::VectorLength {
                expected,
                found: v.len(),
            });
        }
        let mut env = [0.0; ENV_GENE_COUNT];
        env.copy_from_slice(&v[..ENV_GENE_COUNT]);
        let marker = MarkerGene {
            x: v[ENV_GENE_COUNT],
            y: v[ENV_GENE_COUNT + 1],
        };
        let objects = v[ENV_GENE_COUNT + 2..]
            .chunks_exact(OBJECT_PROPERTY_COUNT)
            .map(|c| DynamicObjectGene::from_properties([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            environment: EnvironmentGene::from_array(env),
            marker,
            objects,
        })
    }

    /// Every out-of-range field, described. Empty means valid.
    pub fn range_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, value) in self.environment.to_array().into_iter().enumerate() {
            let (lo, hi) = EnvironmentGene::range(i);
            if !(value >= lo && value <= hi) {
                out.push(format!("{} out of [{lo},{hi}]", ENV_FIELD_NAMES[i]));
            }
        }
        for (name, value) in [("marker.x", self.marker.x), ("marker.y", self.marker.y)] {
            if !POSITION_DOMAIN.contains(value) {
                out.push(format!("{name} out of [-1,1]"));
            }
        }
        for (k, o) in self.objects.iter().enumerate() {
            for (name, value) in [("start_x", o.start_x), ("start_y", o.start_y)] {
                if !POSITION_DOMAIN.contains(value) {
                    out.push(format!("objects[{k}].{name} out of [-1,1]"));
                }
            }
            if !UNIT_DOMAIN.contains(o.speed_fraction) {
                out.push(format!("objects[{k}].speed_fraction out of [0,1]"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let v = self.range_violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Range(v))
        }
    }

    /// Range check plus the profile's object count.
    pub fn validate_for(&self, profile: &MapProfile) -> Result<(), ScenarioError> {
        if self.objects.len() != profile.object_count {
            return Err(ScenarioError::ObjectCount {
                expected: profile.object_count,
                found: self.objects.len(),
            });
        }
        self.validate()
    }

    pub fn nuclear_len(&self) -> usize {
        nuclear_len(self.objects.len())
    }

    pub fn nuclear_genes(&self) -> Vec<NuclearGene> {
        let mut genes: Vec<NuclearGene> = self
            .environment
            .to_array()
            .into_iter()
            .enumerate()
            .map(|(index, value)| NuclearGene::Environment { index, value })
            .collect();
        genes.push(NuclearGene::Marker(self.marker));
        genes.extend(self.objects.iter().copied().map(NuclearGene::Object));
        genes
    }

    pub fn from_nuclear_genes(genes: &[NuclearGene]) -> Self {
        let mut c = ScenarioChromosome {
            environment: EnvironmentGene::default(),
            marker: MarkerGene::default(),
            objects: Vec::new(),
        };
        for g in genes {
            match *g {
                NuclearGene::Environment { index, value } => c.environment.set(index, value),
                NuclearGene::Marker(m) => c.marker = m,
                NuclearGene::Object(o) => c.objects.push(o),
            }
        }
        c
    }

    /// Serializes to the versioned JSON scenario format.
    pub fn encode(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(&ScenarioFile::from(self))
            .expect("scenario serialization is infallible");
        bytes.push(b'\n');
        bytes
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = parse_with_path(bytes)?;
        let c = file.into_chromosome()?;
        c.validate()?;
        Ok(c)
    }
}

pub(crate) fn parse_with_path<T: serde::de::DeserializeOwned>(
    bytes: &[u8],
) -> Result<T, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    #[serde(rename = "type")]
    pub kind: ObjectKind,
    pub start: [f64; 2],
    pub speed: f64,
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: String,
    pub environment: EnvironmentGene,
    pub marker: MarkerGene,
    pub objects: Vec<ObjectEntry>,
}

impl From<&ScenarioChromosome> for ScenarioFile {
    fn from(c: &ScenarioChromosome) -> Self {
        ScenarioFile {
            version: SCENARIO_FORMAT.to_string(),
            environment: c.environment,
            marker: c.marker,
            objects: c
                .objects
                .iter()
                .map(|o| ObjectEntry {
                    kind: o.kind,
                    start: [o.start_x, o.start_y],
                    speed: o.speed_fraction,
                })
                .collect(),
        }
    }
}

impl ScenarioFile {
    pub fn into_chromosome(self) -> Result<ScenarioChromosome, ScenarioError> {
        if self.version != SCENARIO_FORMAT {
            return Err(ScenarioError::Version(self.version));
        }
        Ok(ScenarioChromosome {
            environment: self.environment,
            marker: self.marker,
            objects: self
                .objects
                .into_iter()
                .map(|o| DynamicObjectGene {
                    kind: o.kind,
                    start_x: o.start[0],
                    start_y: o.start[1],
                    speed_fraction: o.speed,
                })
                .collect(),
        })
    }
}

impl Serialize for ScenarioChromosome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ScenarioFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScenarioChromosome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ScenarioFile::deserialize(d)?
            .into_chromosome()
            .map_err(serde::de::Error::custom)
    }
}
