//! Desk-scale landing world: map profiles, kinematics, collisions and the
//! downward camera.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{clip_convex, disc_polygon, polygon_area, union_area, Rect, Vec2, Vec3};
use crate::scenario::{ObjectKind, ScenarioChromosome, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapName {
    Court,
    Lawn,
}

impl MapName {
    pub fn as_str(self) -> &'static str {
        match self {
            MapName::Court => "court",
            MapName::Lawn => "lawn",
        }
    }
}

impl std::str::FromStr for MapName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "court" => Ok(MapName::Court),
            "lawn" => Ok(MapName::Lawn),
            other => Err(format!("unknown map `{other}` (expected court or lawn)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleCategory {
    Bench,
    Branch,
    Wall,
}

/// Axis-aligned box occupying `[base, height]` vertically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticObstacle {
    pub center: Vec2,
    pub size: Vec2,
    pub height: f64,
    #[serde(default)]
    pub base: f64,
    pub category: ObstacleCategory,
}

impl StaticObstacle {
    pub fn footprint(&self) -> Rect {
        Rect::centered(self.center, self.size)
    }
}

/// Ground texture that can be mistaken for the marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistractorPatch {
    pub center: Vec2,
    pub radius: f64,
    pub fp_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapProfile {
    pub name: MapName,
    /// Normalized coordinate ±1 maps to ±this many meters.
    pub world_half_extent: f64,
    pub static_obstacles: Vec<StaticObstacle>,
    pub distractor_patches: Vec<DistractorPatch>,
    pub object_count: usize,
    pub person_max_speed: f64,
    pub dog_max_speed: f64,
    pub bird_max_speed: f64,
    pub bird_altitude: f64,
}

impl MapProfile {
    fn base(name: MapName) -> Self {
        MapProfile {
            name,
            world_half_extent: 20.0,
            static_obstacles: Vec::new(),
            distractor_patches: Vec::new(),
            object_count: 3,
            person_max_speed: 1.5,
            dog_max_speed: 2.0,
            bird_max_speed: 3.0,
            bird_altitude: 2.0,
        }
    }

    /// Hard court: painted lines, red zones and root patches give many
    /// marker look-alikes; benches line the sides, trees overhang corners.
    pub fn court() -> Self {
        let mut p = Self::base(MapName::Court);
        let bench = |x: f64, y: f64, along_x: bool| StaticObstacle {
            center: [x, y],
            size: if along_x { [2.0, 0.6] } else { [0.6, 2.0] },
            height: 0.5,
            base: 0.0,
            category: ObstacleCategory::Bench,
        };
        let branch = |x: f64, y: f64, w: f64, base: f64| StaticObstacle {
            center: [x, y],
            size: [w, w],
            height: base + 1.2,
            base,
            category: ObstacleCategory::Branch,
        };
        p.static_obstacles = vec![
            bench(-12.0, 18.0, true),
            bench(-4.0, 18.0, true),
            bench(4.0, 18.0, true),
            bench(12.0, 18.0, true),
            bench(-18.0, 8.0, false),
            bench(-18.0, -4.0, false),
            bench(18.0, 6.0, false),
            bench(18.0, -8.0, false),
            bench(8.0, -18.0, true),
            bench(-6.0, -18.0, true),
            branch(16.5, 16.5, 4.0, 2.5),
            branch(-16.5, 15.5, 3.5, 2.2),
            branch(15.5, -16.0, 3.5, 2.8),
            branch(0.0, 19.0, 3.0, 2.5),
            StaticObstacle {
                center: [19.6, 0.0],
                size: [0.4, 8.0],
                height: 2.0,
                base: 0.0,
                category: ObstacleCategory::Wall,
            },
        ];
        let patch = |x: f64, y: f64, r: f64, s: f64| DistractorPatch {
            center: [x, y],
            radius: r,
            fp_strength: s,
        };
        p.distractor_patches = vec![
            // painted line crossings
            patch(-10.0, -10.0, 1.0, 0.9),
            patch(10.0, -10.0, 1.0, 0.9),
            patch(-10.0, 10.0, 1.0, 0.9),
            patch(10.0, 10.0, 1.0, 0.9),
            patch(0.0, -10.0, 0.8, 0.8),
            patch(0.0, 10.0, 0.8, 0.8),
            patch(-10.0, 0.0, 0.8, 0.8),
            patch(10.0, 0.0, 0.8, 0.8),
            patch(0.0, 0.0, 1.2, 0.85),
            // red zones
            patch(-5.0, 5.0, 3.0, 0.7),
            patch(6.0, -5.0, 3.0, 0.7),
            // root patches near the trees
            patch(14.0, 14.0, 1.5, 0.6),
            patch(-14.0, 13.0, 1.5, 0.6),
            patch(13.0, -13.5, 1.5, 0.6),
            patch(0.0, 16.0, 1.2, 0.55),
        ];
        p
    }

    /// Uniform grass: few, weak look-alikes.
    pub fn lawn() -> Self {
        let mut p = Self::base(MapName::Lawn);
        p.static_obstacles = vec![
            StaticObstacle {
                center: [-8.0, 12.0],
                size: [2.0, 0.6],
                height: 0.5,
                base: 0.0,
                category: ObstacleCategory::Bench,
            },
            StaticObstacle {
                center: [9.0, -12.0],
                size: [2.0, 0.6],
                height: 0.5,
                base: 0.0,
                category: ObstacleCategory::Bench,
            },
            StaticObstacle {
                center: [12.0, 12.0],
                size: [4.0, 4.0],
                height: 3.8,
                base: 2.6,
                category: ObstacleCategory::Branch,
            },
            StaticObstacle {
                center: [-13.0, -12.0],
                size: [4.0, 4.0],
                height: 3.6,
                base: 2.4,
                category: ObstacleCategory::Branch,
            },
        ];
        p.distractor_patches = vec![
            DistractorPatch {
                center: [12.0, 11.0],
                radius: 1.5,
                fp_strength: 0.3,
            },
            DistractorPatch {
                center: [-13.0, -11.0],
                radius: 1.5,
                fp_strength: 0.3,
            },
        ];
        p
    }

    pub fn by_name(name: MapName) -> Self {
        match name {
            MapName::Court => Self::court(),
            MapName::Lawn => Self::lawn(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.world_half_extent > 0.0) {
            return Err("world_half_extent must be > 0".into());
        }
        for (i, d) in self.distractor_patches.iter().enumerate() {
            if !(0.0..=1.0).contains(&d.fp_strength) {
                return Err(format!("distractor_patches[{i}].fp_strength out of [0,1]"));
            }
        }
        Ok(())
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.world_half_extent * std::f64::consts::SQRT_2
    }

    pub fn denormalize(&self, x: f64, y: f64) -> Vec2 {
        [x * self.world_half_extent, y * self.world_half_extent]
    }

    pub fn max_speed(&self, kind: ObjectKind) -> f64 {
        match kind {
            ObjectKind::Person => self.person_max_speed,
            ObjectKind::Dog => self.dog_max_speed,
            ObjectKind::Bird => self.bird_max_speed,
        }
    }

    pub fn clamp_ground(&self, p: Vec2) -> Vec2 {
        let e = self.world_half_extent;
        [p[0].clamp(-e, e), p[1].clamp(-e, e)]
    }
}

/// Collision cylinder and camera footprint of a dynamic object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectBody {
    pub radius: f64,
    pub bottom: f64,
    pub top: f64,
    /// Radius of the object's ground projection seen by the camera.
    pub occlusion_radius: f64,
}

pub fn object_body(kind: ObjectKind, ground_z: f64) -> ObjectBody {
    match kind {
        ObjectKind::Person => ObjectBody {
            radius: 0.3,
            bottom: ground_z,
            top: ground_z + 1.8,
            occlusion_radius: 0.5,
        },
        ObjectKind::Dog => ObjectBody {
            radius: 0.3,
            bottom: ground_z,
            top: ground_z + 0.5,
            occlusion_radius: 0.4,
        },
        ObjectKind::Bird => ObjectBody {
            radius: 0.2,
            bottom: ground_z - 0.1,
            top: ground_z + 0.1,
            occlusion_radius: 0.3,
        },
    }
}

/// Vehicle limits, timing and episode geometry shared by all maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub decision_interval: f64,
    pub timeout: f64,
    pub spawn: Vec3,
    pub cruise_speed: f64,
    pub descent_speed: f64,
    pub max_accel: f64,
    pub uav_size: Vec3,
    pub marker_side: f64,
    pub gps_offset_radius: f64,
    pub touchdown_height: f64,
    /// Ground grid extent used by coverage metrics.
    pub max_altitude: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            decision_interval: 0.5,
            timeout: 120.0,
            spawn: [-20.0, -20.0, 15.0],
            cruise_speed: 3.0,
            descent_speed: 1.0,
            max_accel: 2.0,
            uav_size: [1.0, 1.0, 0.3],
            marker_side: 1.5,
            gps_offset_radius: 7.5,
            touchdown_height: 0.05,
            max_altitude: 16.0,
        }
    }
}

impl SimConfig {
    pub fn ticks_per_decision(&self) -> usize {
        (self.decision_interval / self.dt).round().max(1.0) as usize
    }

    pub fn uav_box(&self, pos: Vec3) -> (Rect, f64, f64) {
        (
            Rect::centered([pos[0], pos[1]], [self.uav_size[0], self.uav_size[1]]),
            pos[2],
            pos[2] + self.uav_size[2],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum CollisionTarget {
    Static(usize),
    Dynamic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub kind: ObjectKind,
    pub position: Vec3,
    /// Unit (or zero) ground-plane direction currently commanded.
    pub heading: Vec2,
    /// Ground speed in m/s when moving.
    pub speed: f64,
}

impl ObjectState {
    pub fn body(&self) -> ObjectBody {
        let ground = if self.kind == ObjectKind::Bird {
            self.position[2]
        } else {
            0.0
        };
        object_body(self.kind, ground)
    }

    pub fn ground(&self) -> Vec2 {
        [self.position[0], self.position[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time: f64,
    pub uav: UavState,
    pub objects: Vec<ObjectState>,
    pub marker: Vec2,
    pub gps_target: Vec2,
    pub collided_with: Option<CollisionTarget>,
    pub planner_crashed: bool,
    pub landed: bool,
    pub landing_position: Option<Vec2>,
}

impl WorldState {
    pub fn is_terminal(&self) -> bool {
        self.collided_with.is_some() || self.planner_crashed || self.landed
    }

    pub fn uav_ground(&self) -> Vec2 {
        [self.uav.position[0], self.uav.position[1]]
    }
}

/// Places the scenario into the map. The commanded GPS target is the
/// marker perturbed uniformly within `gps_offset_radius`.
pub fn init_world<R: Rng + ?Sized>(
    c: &ScenarioChromosome,
    profile: &MapProfile,
    sim: &SimConfig,
    rng: &mut R,
) -> Result<WorldState, ScenarioError> {
    c.validate_for(profile)?;
    let marker = profile.denormalize(c.marker.x, c.marker.y);
    let r = sim.gps_offset_radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    let gps_target = profile.clamp_ground([marker[0] + r * theta.cos(), marker[1] + r * theta.sin()]);
    let objects = c
        .objects
        .iter()
        .map(|o| {
            let p = profile.denormalize(o.start_x, o.start_y);
            let z = if o.kind == ObjectKind::Bird {
                profile.bird_altitude
            } else {
                0.0
            };
            ObjectState {
                kind: o.kind,
                position: [p[0], p[1], z],
                heading: [0.0, 0.0],
                speed: profile.max_speed(o.kind) * o.speed_fraction,
            }
        })
        .collect();
    Ok(WorldState {
        time: 0.0,
        uav: UavState {
            position: sim.spawn,
            velocity: [0.0; 3],
        },
        objects,
        marker,
        gps_target,
        collided_with: None,
        planner_crashed: false,
        landed: false,
        landing_position: None,
    })
}

fn clamp_norm(v: Vec2, max: f64) -> Vec2 {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if n > max && n > 0.0 {
        [v[0] * max / n, v[1] * max / n]
    } else {
        v
    }
}

/// Advances the world by one physics tick.
///
/// The UAV velocity slews toward `uav_setpoint` under the acceleration
/// limit; objects move along their headings at their own speed. Collision
/// and touchdown flags are set on the returned state.
pub fn step(
    w: &WorldState,
    uav_setpoint: Vec3,
    headings: &[Vec2],
    dt: f64,
    profile: &MapProfile,
    sim: &SimConfig,
) -> WorldState {
    let mut next = w.clone();
    if w.is_terminal() {
        return next;
    }
    next.time = w.time + dt;

    // UAV: clamp the setpoint, slew, integrate.
    let h = clamp_norm([uav_setpoint[0], uav_setpoint[1]], sim.cruise_speed);
    let vz = uav_setpoint[2].clamp(-sim.descent_speed, sim.descent_speed);
    let v = w.uav.velocity;
    let dv = [h[0] - v[0], h[1] - v[1], vz - v[2]];
    let dv_norm = (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]).sqrt();
    let max_dv = sim.max_accel * dt;
    let scale = if dv_norm > max_dv { max_dv / dv_norm } else { 1.0 };
    let mut nv = [v[0] + dv[0] * scale, v[1] + dv[1] * scale, v[2] + dv[2] * scale];
    let nh = clamp_norm([nv[0], nv[1]], sim.cruise_speed);
    nv = [nh[0], nh[1], nv[2].clamp(-sim.descent_speed, sim.descent_speed)];
    let p = w.uav.position;
    let ground = profile.clamp_ground([p[0] + nv[0] * dt, p[1] + nv[1] * dt]);
    let mut z = p[2] + nv[2] * dt;
    if z <= 0.0 {
        z = 0.0;
        nv[2] = 0.0;
    }
    next.uav = UavState {
        position: [ground[0], ground[1], z],
        velocity: nv,
    };

    for (o, heading) in next.objects.iter_mut().zip(headings) {
        let hd = clamp_norm(*heading, 1.0);
        o.heading = hd;
        let g = profile.clamp_ground([
            o.position[0] + hd[0] * o.speed * dt,
            o.position[1] + hd[1] * o.speed * dt,
        ]);
        o.position[0] = g[0];
        o.position[1] = g[1];
        if o.kind == ObjectKind::Bird {
            o.position[2] = profile.bird_altitude;
        }
    }

    next.collided_with = detect_collision(&next, profile, sim);
    if next.collided_with.is_none() && z <= sim.touchdown_height {
        next.landed = true;
        next.landing_position = Some(ground);
    }
    next
}

/// First obstacle (statics before dynamics) the UAV box overlaps.
pub fn detect_collision(w: &WorldState, profile: &MapProfile, sim: &SimConfig) -> Option<CollisionTarget> {
    let (rect, zlo, zhi) = sim.uav_box(w.uav.position);
    for (i, o) in profile.static_obstacles.iter().enumerate() {
        if zlo < o.height && zhi > o.base && rect.intersect(&o.footprint()).is_some() {
            return Some(CollisionTarget::Static(i));
        }
    }
    for (i, o) in w.objects.iter().enumerate() {
        let b = o.body();
        if zlo < b.top && zhi > b.bottom && rect.distance_to(o.ground()) < b.radius {
            return Some(CollisionTarget::Dynamic(i));
        }
    }
    None
}

/// What the downward camera sees at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub marker_in_fov: bool,
    /// Marker area inside the footprint, m².
    pub s_gt: f64,
    /// Unoccluded marker area inside the footprint, m².
    pub s_d: f64,
    /// (patch index, apparent strength) for patches centered in view.
    pub visible_distractors: Vec<(usize, f64)>,
    pub uav_altitude: f64,
    /// Marker sits on a reflective patch.
    pub marker_on_reflective: bool,
}

/// Sides of the regular polygon approximating object ground projections.
pub const DISC_SIDES: usize = 32;

/// Altitude below which distractor strength is not attenuated.
pub const REFERENCE_ALTITUDE: f64 = 10.0;

/// Downward camera with a 90° field of view: the footprint is a square of
/// side 2·altitude centered under the UAV.
pub fn camera_view(w: &WorldState, profile: &MapProfile, sim: &SimConfig) -> CameraFrame {
    let alt = w.uav.position[2].max(0.0);
    let footprint = Rect::centered(w.uav_ground(), [2.0 * alt, 2.0 * alt]);
    let marker = Rect::centered(w.marker, [sim.marker_side, sim.marker_side]);
    let visible = footprint.intersect(&marker);
    let (s_gt, s_d) = match visible {
        None => (0.0, 0.0),
        Some(vis) => {
            let s_gt = vis.area();
            let window = vis.polygon();
            let mut occluders: Vec<Vec<Vec2>> = Vec::new();
            for o in &w.objects {
                let b = o.body();
                if b.bottom >= alt {
                    continue;
                }
                if vis.distance_to(o.ground()) >= b.occlusion_radius {
                    continue;
                }
                let poly = clip_convex(&disc_polygon(o.ground(), b.occlusion_radius, DISC_SIDES), &window);
                if polygon_area(&poly) > 0.0 {
                    occluders.push(poly);
                }
            }
            for o in &profile.static_obstacles {
                if o.base >= alt {
                    continue;
                }
                if let Some(r) = o.footprint().intersect(&vis) {
                    occluders.push(r.polygon());
                }
            }
            let hidden = union_area(&occluders).min(s_gt);
            (s_gt, (s_gt - hidden).clamp(0.0, s_gt))
        }
    };
    let attenuation = if alt > 0.0 {
        (REFERENCE_ALTITUDE / alt).min(1.0)
    } else {
        1.0
    };
    let visible_distractors = profile
        .distractor_patches
        .iter()
        .enumerate()
        .filter(|(_, d)| alt > 0.0 && footprint.contains(d.center))
        .map(|(i, d)| (i, d.fp_strength * attenuation))
        .collect();
    let marker_on_reflective = profile
        .distractor_patches
        .iter()
        .any(|d| crate::geom::dist2(d.center, w.marker) <= d.radius);
    CameraFrame {
        marker_in_fov: s_gt > 0.0,
        s_gt,
        s_d,
        visible_distractors,
        uav_altitude: alt,
        marker_on_reflective,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{DynamicObjectGene, EnvironmentGene, MarkerGene};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(mx: f64, my: f64) -> ScenarioChromosome {
        ScenarioChromosome {
            environment: EnvironmentGene::default(),
            marker: MarkerGene { x: mx, y: my },
            objects: vec![
                DynamicObjectGene {
                    kind: ObjectKind::Person,
                    start_x: 0.5,
                    start_y: 0.5,
                    speed_fraction: 1.0,
                },
                DynamicObjectGene {
                    kind: ObjectKind::Dog,
                    start_x: -0.5,
                    start_y: 0.5,
                    speed_fraction: 1.0,
                },
                DynamicObjectGene {
                    kind: ObjectKind::Bird,
                    start_x: 0.5,
                    start_y: -0.5,
                    speed_fraction: 1.0,
                },
            ],
        }
    }

    fn world_at(uav: Vec3, objects: Vec<ObjectState>) -> WorldState {
        WorldState {
            time: 0.0,
            uav: UavState {
                position: uav,
                velocity: [0.0; 3],
            },
            objects,
            marker: [0.0, 0.0],
            gps_target: [0.0, 0.0],
            collided_with: None,
            planner_crashed: false,
            landed: false,
            landing_position: None,
        }
    }

    fn empty_map() -> MapProfile {
        let mut p = MapProfile::court();
        p.static_obstacles.clear();
        p.distractor_patches.clear();
        p
    }

    #[test]
    fn marker_denormalization() {
        let p = MapProfile::court();
        let sim = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(init_world(&scenario(0.0, 0.0), &p, &sim, &mut rng).unwrap().marker, [0.0, 0.0]);
        assert_eq!(init_world(&scenario(1.0, 1.0), &p, &sim, &mut rng).unwrap().marker, [20.0, 20.0]);
    }

    #[test]
    fn gps_target_deterministic_and_bounded() {
        let p = MapProfile::court();
        let sim = SimConfig::default();
        let a = init_world(&scenario(0.1, 0.2), &p, &sim, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = init_world(&scenario(0.1, 0.2), &p, &sim, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.gps_target, b.gps_target);
        assert!(crate::geom::dist2(a.gps_target, a.marker) <= 7.5);
    }

    #[test]
    fn stationary_objects_do_not_move() {
        let p = empty_map();
        let sim = SimConfig::default();
        let w = init_world(&scenario(0.0, 0.0), &p, &sim, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let n = step(&w, [0.0; 3], &[[0.0, 0.0]; 3], 0.1, &p, &sim);
        for (a, b) in w.objects.iter().zip(&n.objects) {
            assert_eq!(a.position, b.position);
        }
    }

    #[test]
    fn dog_moves_point_two_meters() {
        let p = empty_map();
        let sim = SimConfig::default();
        let w = init_world(&scenario(0.0, 0.0), &p, &sim, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let n = step(&w, [0.0; 3], &[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]], 0.1, &p, &sim);
        assert!((n.objects[1].position[0] - w.objects[1].position[0] - 0.2).abs() < 1e-12);
        assert_eq!(n.objects[2].position[2], 2.0);
    }

    #[test]
    fn box_face_overlap_collides() {
        let mut p = empty_map();
        p.static_obstacles.push(StaticObstacle {
            center: [0.5, 0.0],
            size: [1.0, 1.0],
            height: 1.0,
            base: 0.0,
            category: ObstacleCategory::Bench,
        });
        let sim = SimConfig::default();
        // obstacle face at x = 0; UAV center 0.4 m away
        let w = world_at([-0.4, 0.0, 0.5], vec![]);
        assert_eq!(detect_collision(&w, &p, &sim), Some(CollisionTarget::Static(0)));
        let w = world_at([-0.6, 0.0, 0.5], vec![]);
        assert_eq!(detect_collision(&w, &p, &sim), None);
    }

    #[test]
    fn unoccluded_marker_area() {
        let p = empty_map();
        let sim = SimConfig::default();
        let f = camera_view(&world_at([0.0, 0.0, 10.0], vec![]), &p, &sim);
        assert!(f.marker_in_fov);
        assert!((f.s_gt - 2.25).abs() < 1e-12 && (f.s_d - 2.25).abs() < 1e-12);
    }

    #[test]
    fn person_on_marker_occludes_disc() {
        let p = empty_map();
        let sim = SimConfig::default();
        let person = ObjectState {
            kind: ObjectKind::Person,
            position: [0.0, 0.0, 0.0],
            heading: [0.0, 0.0],
            speed: 0.0,
        };
        let f = camera_view(&world_at([0.0, 0.0, 10.0], vec![person]), &p, &sim);
        let analytic = f.s_gt - std::f64::consts::PI * 0.25;
        assert!(((f.s_d - analytic) / analytic).abs() < 0.02, "{} vs {analytic}", f.s_d);
    }

    #[test]
    fn marker_outside_footprint() {
        let p = empty_map();
        let sim = SimConfig::default();
        let f = camera_view(&world_at([15.0, 15.0, 5.0], vec![]), &p, &sim);
        assert!(!f.marker_in_fov);
        assert_eq!((f.s_gt, f.s_d), (0.0, 0.0));
    }

    #[test]
    fn ground_never_penetrated() {
        let p = empty_map();
        let sim = SimConfig::default();
        let mut w = world_at([5.0, 5.0, 0.3], vec![]);
        for _ in 0..20 {
            w = step(&w, [0.0, 0.0, -5.0], &[], 0.1, &p, &sim);
            assert!(w.uav.position[2] >= 0.0);
        }
        assert!(w.landed);
        assert_eq!(w.landing_position, Some([5.0, 5.0]));
    }
}
