//! Restricted training world: one object, fixed central marker, a UAV that
//! flies straight at the marker without planning.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dqn::{build_state, reward, Action, DqnAgent, QNET_SIZES, STATE_DIM};
use super::replay::Transition;
use super::{Mlp, RlError, TrainConfig};
use crate::geom::Vec2;
use crate::perception::{detect_marker, DetectorProfile};
use crate::scenario::{EnvironmentGene, ObjectKind};
use crate::world::{camera_view, step, MapProfile, ObjectState, SimConfig, UavState, WorldState};

/// Objects start within this distance (per axis) of the marker.
const OBJECT_SPAWN_HALF: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct SurrogateEnv {
    pub world: WorldState,
    profile: MapProfile,
    sim: SimConfig,
    detector: DetectorProfile,
    env: EnvironmentGene,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStat {
    pub episode: usize,
    pub reward: f64,
    pub epsilon: f64,
}

fn surrogate_profile() -> MapProfile {
    let mut p = MapProfile::court();
    p.static_obstacles.clear();
    p.distractor_patches.clear();
    p.object_count = 1;
    p
}

fn edge_point<R: Rng + ?Sized>(half: f64, rng: &mut R) -> Vec2 {
    let t = rng.random_range(-half..half);
    match rng.random_range(0..4) {
        0 => [-half, t],
        1 => [half, t],
        2 => [t, -half],
        _ => [t, half],
    }
}

impl SurrogateEnv {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let obj = [
            rng.random_range(-OBJECT_SPAWN_HALF..OBJECT_SPAWN_HALF),
            rng.random_range(-OBJECT_SPAWN_HALF..OBJECT_SPAWN_HALF),
        ];
        let profile = surrogate_profile();
        let uav = edge_point(profile.world_half_extent, rng);
        Self::with_positions(obj, uav)
    }

    /// Person at `obj` on the ground, UAV above `uav` at spawn altitude.
    pub fn with_positions(obj: Vec2, uav: Vec2) -> Self {
        let profile = surrogate_profile();
        let sim = SimConfig::default();
        let world = WorldState {
            time: 0.0,
            uav: UavState {
                position: [uav[0], uav[1], sim.spawn[2]],
                velocity: [0.0; 3],
            },
            objects: vec![ObjectState {
                kind: ObjectKind::Person,
                position: [obj[0], obj[1], 0.0],
                heading: [0.0, 0.0],
                speed: profile.person_max_speed,
            }],
            marker: [0.0, 0.0],
            gps_target: [0.0, 0.0],
            collided_with: None,
            planner_crashed: false,
            landed: false,
            landing_position: None,
        };
        SurrogateEnv {
            world,
            detector: DetectorProfile::learned(),
            env: EnvironmentGene::default(),
            profile,
            sim,
        }
    }

    pub fn state(&self) -> [f64; STATE_DIM] {
        build_state(
            self.world.objects[0].ground(),
            self.world.uav_ground(),
            self.world.marker,
            self.profile.world_half_extent,
        )
    }

    pub fn done(&self) -> bool {
        self.world.is_terminal() || self.world.time >= self.sim.timeout - 1e-9
    }

    /// Teleports the object one decision's worth of travel, then flies the
    /// UAV for one decision interval. Returns the step reward.
    pub fn step<R: Rng + ?Sized>(&mut self, action: Action, rng: &mut R) -> Result<f64, RlError> {
        let o = &mut self.world.objects[0];
        let h = action.heading();
        let stride = o.speed * self.sim.decision_interval;
        let moved = self
            .profile
            .clamp_ground([o.position[0] + h[0] * stride, o.position[1] + h[1] * stride]);
        o.position[0] = moved[0];
        o.position[1] = moved[1];

        let frame = camera_view(&self.world, &self.profile, &self.sim);
        let det = detect_marker(&frame, &self.env, &self.world, &self.profile, &self.detector, rng);
        let uav = self.world.uav.position;
        let d = [self.world.marker[0] - uav[0], self.world.marker[1] - uav[1]];
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let v = self.sim.cruise_speed.min(n);
        let mut setpoint = if n > 1e-9 { [d[0] / n * v, d[1] / n * v, 0.0] } else { [0.0; 3] };
        if det.found {
            setpoint[2] = -self.sim.descent_speed;
        }
        let still = [[0.0, 0.0]];
        for _ in 0..self.sim.ticks_per_decision() {
            let t = self.world.time + self.sim.dt;
            self.world = step(&self.world, setpoint, &still, self.sim.dt, &self.profile, &self.sim);
            self.world.time = t;
            if self.world.is_terminal() {
                break;
            }
        }
        let frame = camera_view(&self.world, &self.profile, &self.sim);
        reward(frame.s_gt, frame.s_d.min(frame.s_gt), self.world.collided_with.is_some())
    }
}

/// Total reward of one surrogate episode under `policy`.
fn rollout<R: Rng + ?Sized>(
    rng: &mut R,
    mut policy: impl FnMut(&[f64; STATE_DIM], &mut R) -> usize,
    mut on_step: impl FnMut(Transition),
) -> Result<f64, RlError> {
    let mut env = SurrogateEnv::new(rng);
    let mut total = 0.0;
    while !env.done() {
        let s = env.state();
        let a = policy(&s, rng);
        let r = env.step(Action::from_index(a), rng)?;
        total += r;
        on_step(Transition {
            state: s.to_vec(),
            action: a,
            reward: r,
            next_state: env.state().to_vec(),
            terminal: env.world.is_terminal(),
        });
    }
    Ok(total)
}

/// Standard DQN loop in the surrogate; returns weights and per-episode
/// rewards.
pub fn train_surrogate<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> Result<(Mlp, Vec<EpisodeStat>), RlError> {
    cfg.validate()?;
    let mut agent = DqnAgent::new(&QNET_SIZES, *cfg, rng);
    let mut curve = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let epsilon = cfg.epsilon(episode);
        let mut env = SurrogateEnv::new(rng);
        let mut total = 0.0;
        while !env.done() {
            let s = env.state();
            let a = agent.act(&s, epsilon, rng);
            let r = env.step(Action::from_index(a), rng)?;
            total += r;
            agent.remember(Transition {
                state: s.to_vec(),
                action: a,
                reward: r,
                next_state: env.state().to_vec(),
                terminal: env.world.is_terminal(),
            });
            agent.learn(rng)?;
        }
        curve.push(EpisodeStat {
            episode,
            reward: total,
            epsilon,
        });
    }
    Ok((agent.online, curve))
}

/// Mean episode reward of the uniform random policy.
pub fn random_policy_baseline<R: Rng + ?Sized>(episodes: usize, rng: &mut R) -> Result<f64, RlError> {
    let mut sum = 0.0;
    for _ in 0..episodes {
        sum += rollout(rng, |_, r| r.random_range(0..Action::ALL.len()), |_| {})?;
    }
    Ok(sum / episodes.max(1) as f64)
}

/// Mean episode reward of a greedy policy.
pub fn evaluate_policy<R: Rng + ?Sized>(policy: &Mlp, episodes: usize, rng: &mut R) -> Result<f64, RlError> {
    let mut sum = 0.0;
    for _ in 0..episodes {
        sum += rollout(rng, |s, _| super::dqn::argmax(&policy.forward(s)), |_| {})?;
    }
    Ok(sum / episodes.max(1) as f64)
}
