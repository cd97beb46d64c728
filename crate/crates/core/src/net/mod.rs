//! The StringNet graph: defenders as vertices, string barriers as edges and
//! triangular net barriers as faces.

mod query;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::Vec3;
use crate::error::{Error, Result};

pub use query::{contains, point_mesh_distance, point_triangle_closest, segment_crossing, MeshDistance};

#[derive(Debug, Clone, PartialEq)]
pub struct StringNetGraph {
    vertex_count: usize,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    closed: bool,
    /// Longest admissible string barrier; `f64::INFINITY` when unconstrained.
    pub max_edge_constraint: f64,
}

impl StringNetGraph {
    /// Builds a net from oriented faces and checks its topology.
    ///
    /// A closed net must be a genus-0 manifold; an open net must be a single
    /// connected disk whose boundary is one cycle.
    pub fn from_faces(vertex_count: usize, faces: Vec<[usize; 3]>, closed: bool) -> Result<Self> {
        let net = Self::from_faces_unchecked(vertex_count, faces, closed);
        net.check_topology()?;
        Ok(net)
    }

    pub(crate) fn from_faces_unchecked(vertex_count: usize, faces: Vec<[usize; 3]>, closed: bool) -> Self {
        let mut edges = BTreeSet::new();
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert([a.min(b), a.max(b)]);
            }
        }
        Self {
            vertex_count,
            edges: edges.into_iter().collect(),
            faces,
            closed,
            max_edge_constraint: f64::INFINITY,
        }
    }

    pub fn with_max_edge(mut self, limit: f64) -> Self {
        self.max_edge_constraint = limit;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    fn edge_face_counts(&self) -> BTreeMap<[usize; 2], (usize, usize)> {
        // (forward, backward) occurrences of each undirected edge
        let mut counts: BTreeMap<[usize; 2], (usize, usize)> = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let e = counts.entry([a.min(b), a.max(b)]).or_default();
                if a < b {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        counts
    }

    /// Edges bordering exactly one face, oriented as they appear in that face.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let counts = self.edge_face_counts();
        let mut out = Vec::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let (fw, bw) = counts[&[a.min(b), a.max(b)]];
                if fw + bw == 1 {
                    out.push([a, b]);
                }
            }
        }
        out
    }

    /// Vertices touched by at least one face, as a single connected component check.
    fn face_connected(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for [a, b] in &self.edges {
            let (ra, rb) = (find(&mut parent, *a), find(&mut parent, *b));
            parent[ra] = rb;
        }
        let used: BTreeSet<usize> = self.faces.iter().flatten().copied().collect();
        let root = find(&mut parent, self.faces[0][0]);
        used.iter().all(|&v| find(&mut parent, v) == root)
    }

    pub fn check_topology(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::DegenerateConfiguration(msg));
        for f in &self.faces {
            if f.iter().any(|&v| v >= self.vertex_count) || f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return bad(format!("invalid face {f:?}"));
            }
        }
        let counts = self.edge_face_counts();
        for (e, (fw, bw)) in &counts {
            if fw + bw > 2 || *fw > 1 || *bw > 1 {
                return bad(format!("edge {e:?} is non-manifold or inconsistently oriented"));
            }
        }
        if !self.face_connected() {
            return bad("faces do not form a single component".into());
        }
        let boundary = self.boundary_edges();
        if self.closed {
            if !boundary.is_empty() {
                return bad(format!("closed net has {} boundary edges", boundary.len()));
            }
            if self.euler_characteristic() != 2 {
                return bad(format!("closed net has Euler characteristic {}", self.euler_characteristic()));
            }
        } else {
            if boundary.is_empty() {
                return bad("open net has no boundary".into());
            }
            let next: BTreeMap<usize, usize> = boundary.iter().map(|e| (e[0], e[1])).collect();
            if next.len() != boundary.len() {
                return bad("boundary is not a simple cycle".into());
            }
            let start = boundary[0][0];
            let mut cur = start;
            let mut steps = 0;
            loop {
                cur = next[&cur];
                steps += 1;
                if cur == start || steps > boundary.len() {
                    break;
                }
            }
            if cur != start || steps != boundary.len() {
                return bad("boundary splits into several loops".into());
            }
        }
        Ok(())
    }

    pub fn edge_lengths<'a>(&'a self, positions: &'a [Vec3]) -> impl Iterator<Item = f64> + 'a {
        self.edges.iter().map(move |[a, b]| (positions[*a] - positions[*b]).norm())
    }

    pub fn max_edge_length(&self, positions: &[Vec3]) -> f64 {
        self.edge_lengths(positions).fold(0.0, f64::max)
    }

    pub fn avg_edge_length(&self, positions: &[Vec3]) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.edge_lengths(positions).sum::<f64>() / self.edges.len() as f64
    }

    pub fn triangle(&self, face: usize, positions: &[Vec3]) -> [Vec3; 3] {
        let f = self.faces[face];
        [positions[f[0]], positions[f[1]], positions[f[2]]]
    }

    /// Wavefront OFF text with the given vertex positions.
    pub fn to_off(&self, positions: &[Vec3]) -> String {
        let mut s = String::new();
        writeln!(s, "OFF").unwrap();
        writeln!(s, "{} {} {}", self.vertex_count, self.faces.len(), self.edges.len()).unwrap();
        for p in positions.iter().take(self.vertex_count) {
            writeln!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
        }
        for f in &self.faces {
            writeln!(s, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeViolation {
    pub edge: [usize; 2],
    pub length: f64,
}

/// Outcome of checking every string barrier against the length limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeLimitReport {
    pub pass: bool,
    pub limit: f64,
    pub max_edge: f64,
    pub violations: Vec<EdgeViolation>,
    pub max_face_area: f64,
    /// `sqrt(3)/4 * limit^2`, the area of an equilateral face at the limit.
    pub face_area_bound: f64,
}

pub fn check_edge_limit(net: &StringNetGraph, positions: &[Vec3]) -> EdgeLimitReport {
    let limit = net.max_edge_constraint;
    let mut violations = Vec::new();
    let mut max_edge = 0.0f64;
    for (e, len) in net.edges.iter().zip(net.edge_lengths(positions)) {
        max_edge = max_edge.max(len);
        if len >= limit {
            violations.push(EdgeViolation { edge: *e, length: len });
        }
    }
    let max_face_area = (0..net.faces.len())
        .map(|i| {
            let [a, b, c] = net.triangle(i, positions);
            0.5 * (b - a).cross(&(c - a)).norm()
        })
        .fold(0.0, f64::max);
    EdgeLimitReport {
        pass: violations.is_empty(),
        limit,
        max_edge,
        violations,
        max_face_area,
        face_area_bound: 3f64.sqrt() / 4.0 * limit * limit,
    }
}
