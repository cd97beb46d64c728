//! Defender formations: the uniform spherical formation, its sizing rules and
//! its triangulation into a closed net.

mod hull;
mod sizing;
mod thomson;

use serde::{Deserialize, Serialize};

use crate::dynamics::Vec3;
use crate::net::StringNetGraph;

pub use hull::triangulate;
pub use sizing::{
    f_n, initial_guess_count, min_defender_count, min_defender_count_from, min_radius, precomputed_ratio_table,
    ratio_table_csv, search_ratio_table, DefenderCount, RatioRow, DEFAULT_COUNT_CAP,
};
pub use thomson::{coulomb_energy, lambda_fn, relax, solve_uniform_sphere, ThomsonSolution, SolverOptions};

/// A point in spherical coordinates (radius, polar angle, azimuth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub radius: f64,
    pub polar: f64,
    pub azimuth: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

impl SphericalPoint {
    pub fn new(radius: f64, polar: f64, azimuth: f64) -> Self {
        Self { radius, polar, azimuth: wrap_angle(azimuth) }
    }

    pub fn from_cartesian(p: &Vec3) -> Self {
        let r = p.norm();
        if r == 0.0 {
            return Self { radius: 0.0, polar: 0.0, azimuth: 0.0 };
        }
        let polar = (p.z / r).clamp(-1.0, 1.0).acos();
        Self::new(r, polar, p.y.atan2(p.x))
    }

    pub fn to_cartesian(&self) -> Vec3 {
        let (st, ct) = self.polar.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        self.radius * Vec3::new(st * cp, st * sp, ct)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormationKind {
    Spherical,
    Hemispherical,
    Planar,
}

/// Relative target positions plus the net connecting them.
#[derive(Debug, Clone, PartialEq)]
pub struct Formation {
    pub relative_positions: Vec<Vec3>,
    pub mesh: StringNetGraph,
    /// Nominal radius: the sphere radius, or the planar disk radius.
    pub radius: f64,
    pub kind: FormationKind,
}

impl Formation {
    pub fn len(&self) -> usize {
        self.relative_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relative_positions.is_empty()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.mesh.max_edge_length(&self.relative_positions)
    }

    pub fn avg_edge_length(&self) -> f64 {
        self.mesh.avg_edge_length(&self.relative_positions)
    }

    /// Largest distance of any position from the formation center.
    pub fn extent(&self) -> f64 {
        self.relative_positions.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, k: f64) -> Formation {
        Formation {
            relative_positions: self.relative_positions.iter().map(|p| p * k).collect(),
            mesh: self.mesh.clone(),
            radius: self.radius * k,
            kind: self.kind,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spherical_round_trip() {
        let p = SphericalPoint::new(2.0, 0.7, -2.5);
        let q = SphericalPoint::from_cartesian(&p.to_cartesian());
        assert!((p.radius - q.radius).abs() < 1e-12);
        assert!((p.polar - q.polar).abs() < 1e-12);
        assert!((p.azimuth - q.azimuth).abs() < 1e-12);
    }

    #[test]
    fn azimuth_wraps_to_plus_pi() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_is_homogeneous() {
        let f = solve_uniform_sphere(6, 1.0, 3, 1e-8).unwrap();
        let g = f.scaled(3.5);
        assert!((g.max_edge_length() - 3.5 * f.max_edge_length()).abs() < 1e-12);
        assert!((g.avg_edge_length() - 3.5 * f.avg_edge_length()).abs() < 1e-12);
    }
}
