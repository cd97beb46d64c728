//! Geometric queries against the triangle mesh spanned by a net.

use super::StringNetGraph;
use crate::dynamics::Vec3;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshDistance {
    pub distance: f64,
    pub closest: Vec3,
    pub face: usize,
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn point_triangle_closest(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Exact distance from `p` to the union of the net's faces.
///
/// Returns `None` for a net without faces.
pub fn point_mesh_distance(p: &Vec3, net: &StringNetGraph, positions: &[Vec3]) -> Option<MeshDistance> {
    let mut best: Option<MeshDistance> = None;
    for (i, f) in net.faces().iter().enumerate() {
        let q = point_triangle_closest(p, &positions[f[0]], &positions[f[1]], &positions[f[2]]);
        let d = (p - q).norm();
        if best.map_or(true, |b| d < b.distance) {
            best = Some(MeshDistance { distance: d, closest: q, face: i });
        }
    }
    best
}

enum Hit {
    Miss,
    Hit,
    Ambiguous,
}

fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, eps: f64) -> Hit {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-12 * scale {
        return Hit::Miss;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = inv * s.dot(&h);
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    let t = inv * e2.dot(&q);
    let out = u < -eps || v < -eps || u + v > 1.0 + eps || t < -eps;
    if out {
        return Hit::Miss;
    }
    let edge = u < eps || v < eps || u + v > 1.0 - eps || t.abs() < eps;
    if edge {
        Hit::Ambiguous
    } else {
        Hit::Hit
    }
}

const RAY_DIRECTIONS: [[f64; 3]; 6] = [
    [0.5773502691896258, 0.5773502691896258, 0.5773502691896258],
    [0.2672612419124244, -0.5345224838248488, 0.8017837257372732],
    [-0.8164965809277261, 0.4082482904638631, 0.4082482904638631],
    [0.3713906763541037, 0.5570860145311556, -0.7427813527082074],
    [-0.1825741858350554, -0.3651483716701107, -0.9128709291752769],
    [0.9284766908852594, 0.3713906763541037, 0.0],
];

/// Parity ray-casting containment. Points on the surface count as inside.
pub fn contains(p: &Vec3, net: &StringNetGraph, positions: &[Vec3]) -> Result<bool> {
    if !net.is_closed() {
        return Err(Error::NotClosed);
    }
    let Some(md) = point_mesh_distance(p, net, positions) else {
        return Ok(false);
    };
    let scale = positions.iter().map(|q| (q - p).norm()).fold(1.0, f64::max);
    if md.distance <= 1e-9 * scale {
        return Ok(true);
    }
    'dirs: for d in RAY_DIRECTIONS {
        let dir = Vec3::from(d);
        let mut crossings = 0usize;
        for f in net.faces() {
            match ray_triangle(p, &dir, &positions[f[0]], &positions[f[1]], &positions[f[2]], 1e-9) {
                Hit::Miss => {}
                Hit::Hit => crossings += 1,
                Hit::Ambiguous => continue 'dirs,
            }
        }
        return Ok(crossings % 2 == 1);
    }
    // every probe grazed an edge; fall back to the winding sign of the nearest face
    let [a, b, c] = net.triangle(md.face, positions);
    let n = (b - a).cross(&(c - a));
    Ok(n.dot(&(p - md.closest)) <= 0.0)
}

/// First face crossed by the segment `p0 -> p1`, with the segment parameter of the crossing.
pub fn segment_crossing(p0: &Vec3, p1: &Vec3, net: &StringNetGraph, positions: &[Vec3]) -> Option<(usize, f64)> {
    let dir = p1 - p0;
    let mut best: Option<(usize, f64)> = None;
    for (i, f) in net.faces().iter().enumerate() {
        let (a, b, c) = (positions[f[0]], positions[f[1]], positions[f[2]]);
        let e1 = b - a;
        let e2 = c - a;
        let h = dir.cross(&e2);
        let det = e1.dot(&h);
        if det.abs() <= 1e-14 * e1.norm() * e2.norm() * dir.norm() {
            continue;
        }
        let s = p0 - a;
        let u = s.dot(&h) / det;
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        let t = e2.dot(&q) / det;
        if u >= 0.0 && v >= 0.0 && u + v <= 1.0 && (0.0..=1.0).contains(&t) && best.map_or(true, |b| t < b.1) {
            best = Some((i, t));
        }
    }
    best
}
