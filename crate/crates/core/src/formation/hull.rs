//! Incremental 3D convex hull, used to triangulate points in convex position.

use crate::dynamics::Vec3;
use crate::error::{Error, Result};
use crate::net::StringNetGraph;

struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
}

impl Face {
    fn new(v: [usize; 3], pts: &[Vec3]) -> Self {
        let normal = (pts[v[1]] - pts[v[0]]).cross(&(pts[v[2]] - pts[v[0]])).normalize();
        Face { v, normal, offset: normal.dot(&pts[v[0]]) }
    }

    fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Triangulates points in convex position into a closed, outward-oriented net.
///
/// Every input point must end up as a hull vertex; duplicated, coplanar or
/// interior points are rejected.
pub fn triangulate(points: &[Vec3]) -> Result<StringNetGraph> {
    let n = points.len();
    if n < 4 {
        return Err(Error::DegenerateConfiguration(format!("need at least 4 points, got {n}")));
    }
    let centroid = points.iter().sum::<Vec3>() / n as f64;
    let scale = points.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateConfiguration("points have no extent".into()));
    }
    let eps = 1e-10 * scale;
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= eps {
                return Err(Error::DegenerateConfiguration(format!("points {i} and {j} coincide")));
            }
        }
    }

    // initial simplex from extreme points
    let a = 0;
    let b = (0..n).max_by(|&i, &j| (points[i] - points[a]).norm().total_cmp(&(points[j] - points[a]).norm())).unwrap();
    let ab = (points[b] - points[a]).normalize();
    let line_dist = |i: usize| {
        let d = points[i] - points[a];
        (d - ab * d.dot(&ab)).norm()
    };
    let c = (0..n).max_by(|&i, &j| line_dist(i).total_cmp(&line_dist(j))).unwrap();
    if line_dist(c) <= eps {
        return Err(Error::DegenerateConfiguration("points are collinear".into()));
    }
    let plane_n = (points[b] - points[a]).cross(&(points[c] - points[a])).normalize();
    let plane_dist = |i: usize| plane_n.dot(&(points[i] - points[a]));
    let d = (0..n).max_by(|&i, &j| plane_dist(i).abs().total_cmp(&plane_dist(j).abs())).unwrap();
    if plane_dist(d).abs() <= eps {
        return Err(Error::DegenerateConfiguration("points are coplanar".into()));
    }

    let interior = (points[a] + points[b] + points[c] + points[d]) / 4.0;
    let mut faces: Vec<Face> = Vec::new();
    let push = |mut v: [usize; 3], faces: &mut Vec<Face>| {
        let f = Face::new(v, points);
        if f.signed_distance(&interior) > 0.0 {
            v.swap(1, 2);
            faces.push(Face::new(v, points));
        } else {
            faces.push(f);
        }
    };
    for v in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        push(v, &mut faces);
    }

    let mut on_hull = vec![false; n];
    for i in [a, b, c, d] {
        on_hull[i] = true;
    }
    for p in 0..n {
        if on_hull[p] {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| f.signed_distance(&points[p]) > eps).collect();
        if !visible.iter().any(|&v| v) {
            return Err(Error::DegenerateConfiguration(format!("point {p} is not in convex position")));
        }
        let mut directed = std::collections::HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, v)| **v) {
            for k in 0..3 {
                directed.insert((f.v[k], f.v[(k + 1) % 3]));
            }
        }
        let mut horizon = Vec::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, v)| **v) {
            for k in 0..3 {
                let (x, y) = (f.v[k], f.v[(k + 1) % 3]);
                if !directed.contains(&(y, x)) {
                    horizon.push((x, y));
                }
            }
        }
        let mut kept: Vec<Face> = faces.into_iter().zip(visible).filter(|(_, v)| !v).map(|(f, _)| f).collect();
        for (x, y) in horizon {
            kept.push(Face::new([x, y, p], points));
        }
        faces = kept;
        on_hull[p] = true;
    }

    let used: std::collections::BTreeSet<usize> = faces.iter().flat_map(|f| f.v).collect();
    if used.len() != n {
        return Err(Error::DegenerateConfiguration(format!("only {} of {n} points are hull vertices", used.len())));
    }
    StringNetGraph::from_faces(n, faces.into_iter().map(|f| f.v).collect(), true)
}
