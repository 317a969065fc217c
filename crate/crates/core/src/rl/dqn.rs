use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{Adam, Mlp};
use super::replay::{ReplayBuffer, Transition};
use super::RlError;
use crate::episode::{DecisionView, ObjectController, SimRng};
use crate::geom::Vec2;
use crate::scenario::EnvironmentGene;
use crate::world::WorldState;

pub const STATE_DIM: usize = 4;
pub const QNET_SIZES: [usize; 4] = [STATE_DIM, 64, 64, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    U,
    D,
    L,
    R,
    S,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::U, Action::D, Action::L, Action::R, Action::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    /// Ground-plane unit direction; up is +y.
    pub fn heading(self) -> Vec2 {
        match self {
            Action::U => [0.0, 1.0],
            Action::D => [0.0, -1.0],
            Action::L => [-1.0, 0.0],
            Action::R => [1.0, 0.0],
            Action::S => [0.0, 0.0],
        }
    }
}

/// Object and UAV positions relative to the marker, scaled by the half-extent.
pub fn build_state(obj: Vec2, uav: Vec2, marker: Vec2, half_extent: f64) -> [f64; STATE_DIM] {
    [
        (obj[0] - marker[0]) / half_extent,
        (obj[1] - marker[1]) / half_extent,
        (uav[0] - marker[0]) / half_extent,
        (uav[1] - marker[1]) / half_extent,
    ]
}

/// Per-step occlusion reward plus the collision indicator.
pub fn reward(s_gt: f64, s_d: f64, collided: bool) -> Result<f64, RlError> {
    if s_gt == 0.0 && s_d > 0.0 {
        return Err(RlError::Reward(format!("s_d = {s_d} with s_gt = 0")));
    }
    let i = if collided { 1.0 } else { 0.0 };
    if s_d == 0.0 || s_d == s_gt {
        Ok(i)
    } else {
        Ok(s_gt / s_d + i)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action index.
pub fn select_action<R: Rng + ?Sized>(q: &Mlp, s: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.output_dim())
    } else {
        argmax(&q.forward(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub batch_size: usize,
    pub target_sync: usize,
    pub replay_capacity: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 2000,
            gamma: 0.99,
            learning_rate: 1e-3,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.995,
            batch_size: 64,
            target_sync: 100,
            replay_capacity: 10_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let err = |m: &str| Err(RlError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return err("gamma must lie in (0, 1]");
        }
        for e in [self.epsilon_start, self.epsilon_end, self.epsilon_decay] {
            if !(0.0..=1.0).contains(&e) {
                return err("epsilon parameters must lie in [0, 1]");
            }
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.replay_capacity < self.batch_size {
            return err("batch_size and target_sync must be positive and fit in replay");
        }
        if !(self.learning_rate > 0.0) {
            return err("learning_rate must be positive");
        }
        Ok(())
    }

    /// Exploration rate for a 0-based episode index.
    pub fn epsilon(&self, episode: usize) -> f64 {
        (self.epsilon_start * self.epsilon_decay.powi(episode as i32)).max(self.epsilon_end)
    }
}

/// DQN learner: online and target networks, Adam and replay.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub online: Mlp,
    pub target: Mlp,
    optimizer: Adam,
    pub replay: ReplayBuffer,
    pub cfg: TrainConfig,
    pub updates: usize,
}

fn huber_grad(err: f64) -> f64 {
    err.clamp(-1.0, 1.0)
}

fn huber(err: f64) -> f64 {
    let a = err.abs();
    if a <= 1.0 {
        0.5 * err * err
    } else {
        a - 0.5
    }
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], cfg: TrainConfig, rng: &mut R) -> Self {
        let online = Mlp::new(sizes, rng);
        Self::from_network(online, cfg)
    }

    pub fn from_network(online: Mlp, cfg: TrainConfig) -> Self {
        DqnAgent {
            target: online.clone(),
            optimizer: Adam::new(&online, cfg.learning_rate),
            replay: ReplayBuffer::new(cfg.replay_capacity),
            online,
            cfg,
            updates: 0,
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, s: &[f64], epsilon: f64, rng: &mut R) -> usize {
        select_action(&self.online, s, epsilon, rng)
    }

    /// `r` on terminal transitions, else `r + γ max_a Q_target(s', a)`.
    pub fn td_target(&self, t: &Transition) -> f64 {
        if t.terminal {
            t.reward
        } else {
            let q = self.target.forward(&t.next_state);
            t.reward + self.cfg.gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
    }

    pub fn remember(&mut self, t: Transition) {
        self.replay.push(t);
    }

    /// One minibatch update; `None` until the replay holds a full batch.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>, RlError> {
        let batch = match self.replay.sample(self.cfg.batch_size, rng) {
            Some(b) => b,
            None => return Ok(None),
        };
        let n = batch.len() as f64;
        let targets: Vec<f64> = batch.iter().map(|t| self.td_target(t)).collect();
        let mut grads = self.online.zero_grads();
        let mut loss = 0.0;
        for (t, y) in batch.iter().zip(&targets) {
            self.online.backward_with(
                &t.state,
                |q| {
                    let err = q[t.action] - y;
                    loss += huber(err);
                    let mut g = vec![0.0; q.len()];
                    g[t.action] = huber_grad(err);
                    g
                },
                &mut grads,
            );
        }
        loss /= n;
        if !loss.is_finite() {
            return Err(RlError::NonFiniteLoss);
        }
        grads.scale(1.0 / n);
        self.optimizer.step(&mut self.online, &grads);
        self.updates += 1;
        if self.updates.is_multiple_of(self.cfg.target_sync) {
            self.target = self.online.clone();
        }
        Ok(Some(loss))
    }
}

/// Greedy action per object, each from its own state.
pub fn act_all(policy: &Mlp, w: &WorldState, marker: Vec2, half_extent: f64) -> Vec<Action> {
    let uav = w.uav_ground();
    w.objects
        .iter()
        .map(|o| {
            let s = build_state(o.ground(), uav, marker, half_extent);
            Action::from_index(argmax(&policy.forward(&s)))
        })
        .collect()
}

/// Deploys one shared trained network on every object.
pub struct PolicyController<'a> {
    pub policy: &'a Mlp,
}

impl ObjectController for PolicyController<'_> {
    fn decide(&mut self, view: &DecisionView<'_>, _env: &mut EnvironmentGene, _rng: &mut SimRng) -> Vec<Vec2> {
        act_all(self.policy, view.world, view.world.marker, view.profile.world_half_extent)
            .into_iter()
            .map(Action::heading)
            .collect()
    }
}
