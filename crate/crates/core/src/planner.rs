//! Voxel-grid descent planner with the two seeded faults of the obstacle
//! avoiding landing stack.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geom::{Rect, Vec2, Vec3};
use crate::sut::SutConfig;
use crate::world::{MapProfile, ObjectState, SimConfig, WorldState};

/// Message raised when the touchdown cell is occupied.
pub const TERMINAL_IN_OBSTACLE: &str = "the terminal point of current trajectory is in obstacle";

pub const VOXEL: f64 = 0.5;

/// Extra clearance added around every mapped obstacle, on top of the UAV's
/// own half extent. Covers diagonal cell moves and tracking error.
pub const CLEARANCE: f64 = 0.75;

/// Padding (cells) of the search region around start and goal.
const SEARCH_PAD: i64 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("{0}")]
    Crash(String),
    #[error("no collision-free path to the touchdown point")]
    NoPath,
}

type Cell = [i64; 3];

/// Static occupancy for one map, built once per episode.
#[derive(Debug, Clone)]
pub struct Planner {
    origin: Vec3,
    dims: [i64; 3],
    occupied: Vec<bool>,
    uav_half: Vec2,
    uav_height: f64,
    blind_height: Option<f64>,
}

impl Planner {
    pub fn new(profile: &MapProfile, sim: &SimConfig, cfg: &SutConfig) -> Self {
        let e = profile.world_half_extent;
        let n_xy = ((2.0 * e) / VOXEL).ceil() as i64;
        let n_z = (sim.max_altitude / VOXEL).ceil() as i64;
        let mut planner = Planner {
            origin: [-e, -e, 0.0],
            dims: [n_xy, n_xy, n_z],
            occupied: vec![false; (n_xy * n_xy * n_z) as usize],
            uav_half: [sim.uav_size[0] / 2.0, sim.uav_size[1] / 2.0],
            uav_height: sim.uav_size[2],
            blind_height: cfg.fault_low_height_blind,
        };
        for o in &profile.static_obstacles {
            if planner.is_blind_to(o.height) {
                continue;
            }
            let rect = o.footprint();
            let (lo, hi) = (o.base, o.height);
            for iz in 0..n_z {
                for iy in 0..n_xy {
                    for ix in 0..n_xy {
                        let c = planner.center([ix, iy, iz]);
                        if planner.box_hits(&rect, lo, hi, c) {
                            let idx = planner.index([ix, iy, iz]);
                            planner.occupied[idx] = true;
                        }
                    }
                }
            }
        }
        planner
    }

    fn is_blind_to(&self, top: f64) -> bool {
        matches!(self.blind_height, Some(h) if top <= h)
    }

    fn index(&self, c: Cell) -> usize {
        ((c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]) as usize
    }

    fn in_bounds(&self, c: Cell) -> bool {
        (0..3).all(|k| c[k] >= 0 && c[k] < self.dims[k])
    }

    pub fn center(&self, c: Cell) -> Vec3 {
        [
            self.origin[0] + (c[0] as f64 + 0.5) * VOXEL,
            self.origin[1] + (c[1] as f64 + 0.5) * VOXEL,
            self.origin[2] + (c[2] as f64 + 0.5) * VOXEL,
        ]
    }

    pub fn cell_of(&self, p: Vec3) -> Cell {
        let mut c = [0; 3];
        for k in 0..3 {
            c[k] = (((p[k] - self.origin[k]) / VOXEL).floor() as i64).clamp(0, self.dims[k] - 1);
        }
        c
    }

    /// UAV box centered on `c` (bottom at `c.z`) comes within CLEARANCE of the box.
    fn box_hits(&self, rect: &Rect, lo: f64, hi: f64, c: Vec3) -> bool {
        let dx = (rect.min[0] - c[0]).max(c[0] - rect.max[0]);
        let dy = (rect.min[1] - c[1]).max(c[1] - rect.max[1]);
        dx < self.uav_half[0] + CLEARANCE
            && dy < self.uav_half[1] + CLEARANCE
            && c[2] + self.uav_height + CLEARANCE > lo
            && c[2] - CLEARANCE < hi
    }

    fn object_hits(&self, o: &ObjectState, c: Vec3) -> bool {
        let b = o.body();
        let dx = c[0] - o.position[0];
        let dy = c[1] - o.position[1];
        let reach = b.radius + self.uav_half[0].max(self.uav_half[1]) + CLEARANCE;
        dx * dx + dy * dy < reach * reach
            && c[2] + self.uav_height + CLEARANCE > b.bottom
            && c[2] - CLEARANCE < b.top
    }

    /// Objects the planner can perceive (fault F1 hides low ones).
    pub fn visible_objects<'a>(&'a self, w: &'a WorldState) -> impl Iterator<Item = &'a ObjectState> + 'a {
        w.objects.iter().filter(move |o| !self.is_blind_to(o.body().top))
    }

    pub fn static_occupied(&self, c: Cell) -> bool {
        self.occupied[self.index(c)]
    }

    /// Raw (uninflated) overlap of a visible object with the ground cell.
    fn touchdown_taken(&self, w: &WorldState, goal: Cell) -> bool {
        let cc = self.center(goal);
        let cell = Rect::centered([cc[0], cc[1]], [VOXEL, VOXEL]);
        self.visible_objects(w).any(|o| {
            let b = o.body();
            b.bottom < VOXEL && b.top > 0.0 && cell.distance_to(o.ground()) < b.radius
        })
    }

    fn search(&self, start: Cell, goal: Cell, dynamic: &[&ObjectState]) -> Option<Vec<Cell>> {
        let lo = [
            (start[0].min(goal[0]) - SEARCH_PAD).max(0),
            (start[1].min(goal[1]) - SEARCH_PAD).max(0),
            0,
        ];
        let hi = [
            (start[0].max(goal[0]) + SEARCH_PAD).min(self.dims[0] - 1),
            (start[1].max(goal[1]) + SEARCH_PAD).min(self.dims[1] - 1),
            (start[2].max(goal[2]) + 2).min(self.dims[2] - 1),
        ];
        let size = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
        let local = |c: Cell| (((c[2] - lo[2]) * size[1] + (c[1] - lo[1])) * size[0] + (c[0] - lo[0])) as usize;
        let inside = |c: Cell| (0..3).all(|k| c[k] >= lo[k] && c[k] <= hi[k]);
        let blocked = |c: Cell| {
            if self.static_occupied(c) {
                return true;
            }
            let p = self.center(c);
            dynamic.iter().any(|o| self.object_hits(o, p))
        };
        let goal_p = self.center(goal);
        let h = |c: Cell| crate::geom::dist3(self.center(c), goal_p);

        let total = (size[0] * size[1] * size[2]) as usize;
        let mut parent: Vec<u32> = vec![u32::MAX; total];
        let mut seen = vec![false; total];
        let mut heap = BinaryHeap::new();
        let mut counter = 0u64;
        seen[local(start)] = true;
        heap.push(Node { cost: h(start), order: 0, cell: start });
        while let Some(Node { cell, .. }) = heap.pop() {
            if cell == goal {
                let mut path = vec![cell];
                let mut cur = local(cell);
                while parent[cur] != u32::MAX {
                    let p = parent[cur] as usize;
                    let pz = p as i64 / (size[0] * size[1]);
                    let rem = p as i64 % (size[0] * size[1]);
                    let c = [rem % size[0] + lo[0], rem / size[0] + lo[1], pz + lo[2]];
                    path.push(c);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for dz in -1..=1 {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let n = [cell[0] + dx, cell[1] + dy, cell[2] + dz];
                        if !inside(n) || !self.in_bounds(n) {
                            continue;
                        }
                        let li = local(n);
                        if seen[li] || blocked(n) {
                            continue;
                        }
                        seen[li] = true;
                        parent[li] = local(cell) as u32;
                        counter += 1;
                        heap.push(Node { cost: h(n), order: counter, cell: n });
                    }
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    cost: f64,
    order: u64,
    cell: Cell,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // min-heap on (cost, insertion order)
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost
            .total_cmp(&self.cost)
            .then_with(|| o.order.cmp(&self.order))
    }
}

/// Plans a collision-free descent from the UAV to the touchdown point.
///
/// Greedy best-first search over 26-connected voxels. The last waypoint is
/// the touchdown point on the ground. A path of just the current position
/// means "hold": the way is blocked only by something that moves.
pub fn plan_descent(
    planner: &Planner,
    w: &WorldState,
    target: Vec2,
    cfg: &SutConfig,
) -> Result<Vec<Vec3>, PlanError> {
    let pos = w.uav.position;
    let start = planner.cell_of(pos);
    let goal = planner.cell_of([target[0], target[1], 0.0]);

    if cfg.fault_terminal_crash && planner.touchdown_taken(w, goal) {
        return Err(PlanError::Crash(TERMINAL_IN_OBSTACLE.to_string()));
    }
    if planner.static_occupied(goal) {
        return Err(PlanError::NoPath);
    }
    let dynamic: Vec<&ObjectState> = planner.visible_objects(w).collect();
    let hold = Ok(vec![pos]);
    let goal_p = planner.center(goal);
    if dynamic.iter().any(|o| planner.object_hits(o, goal_p)) {
        return hold;
    }
    match planner.search(start, goal, &dynamic) {
        Some(cells) => {
            let mut path: Vec<Vec3> = cells.iter().map(|&c| planner.center(c)).collect();
            if let Some(last) = path.last_mut() {
                *last = [target[0], target[1], goal_p[2]];
            }
            path.push([target[0], target[1], 0.0]);
            Ok(path)
        }
        None if dynamic.is_empty() => Err(PlanError::NoPath),
        None => match planner.search(start, goal, &[]) {
            Some(_) => hold,
            None => Err(PlanError::NoPath),
        },
    }
}

/// Velocity setpoint that follows `path` at `speed`.
pub fn track_setpoint(path: &[Vec3], pos: Vec3, speed: f64) -> Vec3 {
    if path.is_empty() {
        return [0.0; 3];
    }
    let nearest = path
        .iter()
        .enumerate()
        .min_by(|a, b| {
            crate::geom::dist3(*a.1, pos)
                .total_cmp(&crate::geom::dist3(*b.1, pos))
                .then(b.0.cmp(&a.0))
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut j = nearest;
    while j + 1 < path.len() && crate::geom::dist3(path[j], pos) < 0.35 {
        j += 1;
    }
    let d = [path[j][0] - pos[0], path[j][1] - pos[1], path[j][2] - pos[2]];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if n < 1e-9 {
        return [0.0; 3];
    }
    let v = speed.min(2.0 * n);
    [d[0] / n * v, d[1] / n * v, d[2] / n * v]
}
