//! Small planar geometry kit: axis-aligned rectangles and convex polygon
//! clipping, used for camera footprints and occlusion areas.

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

pub fn dist2(a: Vec2, b: Vec2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn dist3(a: Vec3, b: Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn norm2(v: Vec2) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn centered(center: Vec2, size: Vec2) -> Self {
        Rect {
            min: [center[0] - size[0] / 2.0, center[1] - size[1] / 2.0],
            max: [center[0] + size[0] / 2.0, center[1] + size[1] / 2.0],
        }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]).max(0.0) * (self.max[1] - self.min[1]).max(0.0)
    }

    pub fn intersect(&self, o: &Rect) -> Option<Rect> {
        let r = Rect {
            min: [self.min[0].max(o.min[0]), self.min[1].max(o.min[1])],
            max: [self.max[0].min(o.max[0]), self.max[1].min(o.max[1])],
        };
        (r.max[0] > r.min[0] && r.max[1] > r.min[1]).then_some(r)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn polygon(&self) -> Vec<Vec2> {
        vec![
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }

    /// Distance from `p` to the closest point of the rectangle (0 inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let dx = (self.min[0] - p[0]).max(0.0).max(p[0] - self.max[0]);
        let dy = (self.min[1] - p[1]).max(0.0).max(p[1] - self.max[1]);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Regular `n`-gon inscribed in the circle.
pub fn disc_polygon(center: Vec2, radius: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect()
}

/// Shoelace area; counter-clockwise polygons are positive.
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a[0] * b[1] - b[0] * a[1];
    }
    (s / 2.0).abs()
}

/// Sutherland-Hodgman clip of `subject` against convex counter-clockwise `clip`.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let inside = |p: Vec2| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0;
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci {
                if !pi {
                    out.push(line_hit(prev, cur, a, b));
                }
                out.push(cur);
            } else if pi {
                out.push(line_hit(prev, cur, a, b));
            }
        }
    }
    out
}

fn line_hit(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let r = [q[0] - p[0], q[1] - p[1]];
    let s = [b[0] - a[0], b[1] - a[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    if denom.abs() < 1e-300 {
        return q;
    }
    let t = ((a[0] - p[0]) * s[1] - (a[1] - p[1]) * s[0]) / denom;
    [p[0] + t * r[0], p[1] + t * r[1]]
}

/// Exact area of the union of convex polygons, by inclusion-exclusion over
/// their intersections. Intended for a handful of shapes.
pub fn union_area(polys: &[Vec<Vec2>]) -> f64 {
    fn recurse(polys: &[Vec<Vec2>], start: usize, current: &[Vec2], depth: usize, acc: &mut f64) {
        for i in start..polys.len() {
            let inter = if depth == 0 {
                polys[i].clone()
            } else {
                clip_convex(current, &polys[i])
            };
            let a = polygon_area(&inter);
            if a <= 0.0 {
                continue;
            }
            let sign = if depth.is_multiple_of(2) { 1.0 } else { -1.0 };
            *acc += sign * a;
            recurse(polys, i + 1, &inter, depth + 1, acc);
        }
    }
    let mut acc = 0.0;
    recurse(polys, 0, &[], 0, &mut acc);
    acc.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_square_halves() {
        let a = Rect::centered([0.0, 0.0], [2.0, 2.0]).polygon();
        let b = Rect::centered([1.0, 0.0], [2.0, 2.0]).polygon();
        assert!((polygon_area(&clip_convex(&a, &b)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn union_of_overlapping_squares() {
        let a = Rect::centered([0.0, 0.0], [2.0, 2.0]).polygon();
        let b = Rect::centered([1.0, 0.0], [2.0, 2.0]).polygon();
        let c = Rect::centered([10.0, 0.0], [1.0, 1.0]).polygon();
        assert!((union_area(&[a, b, c]) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn disc_area_close_to_pi() {
        let d = disc_polygon([0.0, 0.0], 1.0, 32);
        let rel = (polygon_area(&d) - std::f64::consts::PI).abs() / std::f64::consts::PI;
        assert!(rel < 0.01);
    }
}
