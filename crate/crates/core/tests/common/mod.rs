//! Straight-line reference implementations used as test oracles. Written
//! independently of the library code: plain loops, no shared helpers.
#![allow(dead_code)]

use garl_core::episode::{EpisodeTrace, TerminalOutcome, TickRecord};

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

pub fn diversity(v: &[Vec<f64>]) -> Vec<f64> {
    let k = v.len() as f64;
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut total = 0.0;
        for j in 0..v.len() {
            total += euclid(&v[i], &v[j]);
        }
        out.push(total / k);
    }
    out
}

pub fn mutation_pick(m: &[f64], y: &[f64]) -> f64 {
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..m.len() {
        let mut s = 0.0;
        for v in y {
            s += (m[k] - v).abs();
        }
        if s > best {
            best = s;
            best_k = k;
        }
    }
    m[best_k]
}

pub fn state(obj: [f64; 2], uav: [f64; 2], marker: [f64; 2], h: f64) -> [f64; 4] {
    [
        (obj[0] - marker[0]) / h,
        (obj[1] - marker[1]) / h,
        (uav[0] - marker[0]) / h,
        (uav[1] - marker[1]) / h,
    ]
}

pub fn reward(s_gt: f64, s_d: f64, collided: bool) -> f64 {
    let i = if collided { 1.0 } else { 0.0 };
    if s_d == 0.0 || s_d == s_gt {
        i
    } else {
        s_gt / s_d + i
    }
}

pub fn param_distance(v: &[Vec<f64>]) -> f64 {
    let n = v.len() as f64;
    let mut outer = 0.0;
    for a in v {
        let mut inner = 0.0;
        for b in v {
            inner += euclid(a, b);
        }
        outer += inner / n;
    }
    outer / n
}

/// Cells hit by a set of points on a grid with the origin of x and y at the
/// centre and z from the ground up.
pub fn coverage_pct(points: &[[f64; 3]], half: f64, top: f64, cell: f64) -> f64 {
    let nx = (2.0 * half / cell) as i64;
    let nz = (top / cell) as i64;
    let mut seen = std::collections::HashSet::new();
    for p in points {
        if p[0].abs() > half || p[1].abs() > half || p[2] < 0.0 || p[2] > top {
            continue;
        }
        let ix = (((p[0] + half) / cell) as i64).min(nx - 1);
        let iy = (((p[1] + half) / cell) as i64).min(nx - 1);
        let iz = ((p[2] / cell) as i64).min(nz - 1);
        seen.insert((ix, iy, iz));
    }
    100.0 * seen.len() as f64 / (nx * nx * nz) as f64
}

pub fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    let mut strictly = false;
    for i in 0..3 {
        if a[i] < b[i] {
            return false;
        }
        if a[i] > b[i] {
            strictly = true;
        }
    }
    strictly
}

/// Pareto rank of every point: peel off non-dominated sets one at a time.
pub fn brute_force_ranks(p: &[[f64; 3]]) -> Vec<usize> {
    let mut rank = vec![usize::MAX; p.len()];
    let mut r = 0;
    while rank.contains(&usize::MAX) {
        let live: Vec<usize> = (0..p.len()).filter(|&i| rank[i] == usize::MAX).collect();
        let front: Vec<usize> = live
            .iter()
            .copied()
            .filter(|&i| !live.iter().any(|&j| dominates(&p[j], &p[i])))
            .collect();
        for i in front {
            rank[i] = r;
        }
        r += 1;
    }
    rank
}

pub fn fronts_to_ranks(fronts: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut rank = vec![usize::MAX; n];
    for (r, f) in fronts.iter().enumerate() {
        for &i in f {
            assert_eq!(rank[i], usize::MAX, "index {i} in two fronts");
            rank[i] = r;
        }
    }
    rank
}

pub fn tick(index: usize, uav: [f64; 3]) -> TickRecord {
    TickRecord {
        index,
        t: index as f64 * 0.5,
        uav,
        objects: vec![],
        phase: "transit".into(),
        marker_in_fov: false,
        s_gt: 0.0,
        s_d: 0.0,
        found: false,
        confidence: 0.0,
    }
}

/// Terminal trace along `path` with the given outcome, marker at the origin.
pub fn trace(path: &[[f64; 3]], outcome: TerminalOutcome) -> EpisodeTrace {
    EpisodeTrace {
        seed: 0,
        marker: [0.0, 0.0],
        gps_target: [0.0, 0.0],
        ticks: path.iter().enumerate().map(|(i, p)| tick(i, *p)).collect(),
        detections: vec![],
        transitions: vec![],
        outcome: Some(outcome),
        final_phase: "landed".into(),
        duration: path.len() as f64 * 0.5,
    }
}
