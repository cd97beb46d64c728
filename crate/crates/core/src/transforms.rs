//! Sphere to hemisphere to plane maps, rigid placement of relative formations
//! and the formation family used across the herding phases.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit, UnitQuaternion};

use crate::dynamics::Vec3;
use crate::error::{require, Error, Result};
use crate::formation::{Formation, FormationKind, SphericalPoint};
use crate::net::StringNetGraph;

pub type Quaternion = UnitQuaternion<f64>;

/// Halves the azimuth, folding the sphere onto the `x >= 0` hemisphere.
pub fn map_sphere_to_hemisphere(p: SphericalPoint) -> SphericalPoint {
    let p = SphericalPoint::new(p.radius, p.polar, p.azimuth);
    SphericalPoint { azimuth: 0.5 * p.azimuth, ..p }
}

/// Rotation by 90 degrees about the y axis.
pub fn rotate_to_primed(p: &Vec3) -> Vec3 {
    Vec3::new(p.z, p.y, -p.x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub radius: f64,
    pub azimuth: f64,
}

impl PolarPoint {
    pub fn to_cartesian(&self) -> Vec3 {
        let (s, c) = self.azimuth.sin_cos();
        Vec3::new(self.radius * c, self.radius * s, 0.0)
    }
}

/// Projects a point of the rotated hemisphere onto its base plane, scaled by `k_pl`.
pub fn map_hemisphere_to_plane(p: SphericalPoint, k_pl: f64) -> Result<PolarPoint> {
    require(k_pl > 0.0, "k_pl", || format!("must be > 0, got {k_pl}"))?;
    require((0.0..=PI).contains(&p.polar), "polar", || format!("must lie in [0, pi], got {}", p.polar))?;
    Ok(PolarPoint { radius: k_pl * p.radius * p.polar.sin(), azimuth: p.azimuth })
}

/// Largest planar scale that keeps every planar edge within `r_sb`.
pub fn max_planar_scale(r_sb: f64, r_hs_max: f64) -> Result<f64> {
    require(r_sb > 0.0 && r_hs_max > 0.0, "r_sb", || "lengths must be > 0".into())?;
    if r_hs_max >= r_sb {
        return Err(Error::InconsistentMesh { hemisphere_max: r_hs_max, limit: r_sb });
    }
    Ok(r_sb / r_hs_max)
}

/// Position plus body-to-world orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quaternion,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quaternion) -> Self {
        Self { position, orientation }
    }

    pub fn identity() -> Self {
        Self { position: Vec3::zeros(), orientation: Quaternion::identity() }
    }

    /// Quaternion components `[q1, q2, q3, q4]` with the scalar last.
    pub fn quaternion_coords(&self) -> [f64; 4] {
        let c = self.orientation.as_ref().coords;
        [c.x, c.y, c.z, c.w]
    }

    pub fn apply(&self, local: &Vec3) -> Vec3 {
        self.position + self.orientation * local
    }
}

pub fn place(f: &Formation, pose: &Pose) -> Vec<Vec3> {
    f.relative_positions.iter().map(|p| pose.apply(p)).collect()
}

/// Minimal rotation taking the z axis onto the direction `to - from`.
pub fn orientation_towards(from: &Vec3, to: &Vec3) -> Result<Quaternion> {
    let d = to - from;
    let len = d.norm();
    if !(len > 1e-12 * from.norm().max(to.norm()).max(1.0)) {
        return Err(Error::CoincidentPoints);
    }
    let d = d / len;
    let z = Vec3::z();
    let axis = z.cross(&d);
    let s = axis.norm();
    if s < 1e-12 {
        return Ok(if d.z > 0.0 {
            Quaternion::identity()
        } else {
            Quaternion::from_axis_angle(&Vec3::x_axis(), PI)
        });
    }
    Ok(Quaternion::from_axis_angle(&Unit::new_unchecked(axis / s), s.atan2(d.z)))
}

/// Error quaternion from `desired` to `current`, sign-fixed to the short way round.
pub fn error_quaternion(current: &Quaternion, desired: &Quaternion) -> Quaternion {
    let e = desired.inverse() * current;
    if e.w < 0.0 {
        Quaternion::new_unchecked(-e.into_inner())
    } else {
        e
    }
}

/// The three relative formations of one defender team, sharing vertex order.
///
/// All are expressed in the formation frame whose z axis is the orientation
/// vector: the planar disk lies in `z = 0`, the hemisphere opens toward `+z`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationFamily {
    pub spherical: Formation,
    pub hemispherical: Formation,
    pub planar: Formation,
    pub k_pl: f64,
    pub hemisphere_max_edge: f64,
    /// Seam-aligned polar and azimuth angles of every vertex on the sphere.
    angles: Vec<(f64, f64)>,
}

struct SeamCandidate {
    angles: Vec<(f64, f64)>,
    faces: Vec<[usize; 3]>,
    hemisphere_max: f64,
}

fn seam_faces(sphere_faces: &[[usize; 3]], angles: &[(f64, f64)]) -> Vec<[usize; 3]> {
    sphere_faces
        .iter()
        .copied()
        .filter(|f| (0..3).all(|k| (angles[f[k]].1 - angles[f[(k + 1) % 3]].1).abs() <= PI))
        .collect()
}

fn hemisphere_point(rho: f64, (theta, phi): (f64, f64), fold: f64) -> Vec3 {
    rotate_to_primed(&SphericalPoint { radius: rho, polar: theta, azimuth: phi * fold }.to_cartesian())
}

fn planar_orientation_consistent(faces: &[[usize; 3]], hs: &[Vec3]) -> bool {
    let sign = |f: &[usize; 3]| {
        let (a, b, c) = (hs[f[0]], hs[f[1]], hs[f[2]]);
        ((b - a).x * (c - a).y - (b - a).y * (c - a).x).signum()
    };
    let s0 = sign(&faces[0]);
    faces.iter().all(|f| sign(f) == s0)
}

fn evaluate_seam(sphere: &Formation, rot: &Rotation3<f64>) -> Option<SeamCandidate> {
    let n = sphere.len();
    let angles: Vec<(f64, f64)> = sphere
        .relative_positions
        .iter()
        .map(|p| {
            let s = SphericalPoint::from_cartesian(&(rot * p));
            (s.polar, s.azimuth)
        })
        .collect();
    let faces = seam_faces(sphere.mesh.faces(), &angles);
    if faces.is_empty() {
        return None;
    }
    let mut used = vec![false; n];
    faces.iter().flatten().for_each(|&v| used[v] = true);
    if !used.iter().all(|u| *u) {
        return None;
    }
    let mesh = StringNetGraph::from_faces(n, faces.clone(), false).ok()?;
    let hs: Vec<Vec3> = angles.iter().map(|a| hemisphere_point(sphere.radius, *a, 0.5)).collect();
    if !planar_orientation_consistent(&faces, &hs) {
        return None;
    }
    Some(SeamCandidate { hemisphere_max: mesh.max_edge_length(&hs), angles, faces })
}

impl FormationFamily {
    /// Derives hemispherical and planar formations from a solved sphere.
    ///
    /// The sphere is first rotated so the cut meridian removes as few faces as
    /// possible while leaving a single disk that covers every defender. With
    /// `k_pl = None` the planar scale is the largest one the edge limit allows.
    pub fn build(sphere: &Formation, edge_limit: f64, k_pl: Option<f64>) -> Result<Self> {
        require(sphere.kind == FormationKind::Spherical, "sphere", || "expected a spherical formation".into())?;
        require(sphere.mesh.is_closed(), "sphere", || "expected a closed net".into())?;
        require(sphere.len() >= 4, "sphere", || "need at least 4 defenders".into())?;
        let rho = sphere.radius;

        let mut poles = vec![Vec3::z()];
        poles.extend(sphere.relative_positions.iter().take(8).map(|p| p.normalize()));
        let mut best: Option<SeamCandidate> = None;
        for pole in &poles {
            let tilt = Rotation3::rotation_between(pole, &Vec3::z())
                .unwrap_or_else(|| Rotation3::from_axis_angle(&Vec3::x_axis(), PI));
            for m in 0..64 {
                let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), 2.0 * PI * m as f64 / 64.0) * tilt;
                let Some(c) = evaluate_seam(sphere, &rot) else { continue };
                let better = match &best {
                    None => true,
                    Some(b) => {
                        c.faces.len() > b.faces.len()
                            || (c.faces.len() == b.faces.len() && c.hemisphere_max < b.hemisphere_max - 1e-12)
                    }
                };
                if better {
                    best = Some(c);
                }
            }
        }
        let seam = best.ok_or_else(|| {
            Error::DegenerateConfiguration("no seam rotation yields a single-disk open net".into())
        })?;

        let limit = edge_limit;
        let closed = sphere.mesh.clone().with_max_edge(limit);
        let open = StringNetGraph::from_faces(sphere.len(), seam.faces, false)?.with_max_edge(limit);
        let k_max = max_planar_scale(limit, seam.hemisphere_max)?;
        let k_pl = match k_pl {
            None => k_max,
            Some(k) => {
                require(k > 0.0 && k <= k_max, "k_pl", || format!("must lie in (0, {k_max}], got {k}"))?;
                k
            }
        };

        let spherical_pts: Vec<Vec3> = seam.angles.iter().map(|a| hemisphere_point(rho, *a, 1.0)).collect();
        let hemi_pts: Vec<Vec3> = seam.angles.iter().map(|a| hemisphere_point(rho, *a, 0.5)).collect();
        let planar_pts = hemi_pts
            .iter()
            .map(|p| map_hemisphere_to_plane(SphericalPoint::from_cartesian(p), k_pl).map(|q| q.to_cartesian()))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            spherical: Formation {
                relative_positions: spherical_pts,
                mesh: closed,
                radius: rho,
                kind: FormationKind::Spherical,
            },
            hemispherical: Formation {
                relative_positions: hemi_pts,
                mesh: open.clone(),
                radius: rho,
                kind: FormationKind::Hemispherical,
            },
            planar: Formation {
                relative_positions: planar_pts,
                mesh: open,
                radius: k_pl * rho,
                kind: FormationKind::Planar,
            },
            k_pl,
            hemisphere_max_edge: seam.hemisphere_max,
            angles: seam.angles,
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Straight-line blend from the planar (`w = 0`) to the hemispherical (`w = 1`) shape.
    pub fn planar_to_hemisphere(&self, w: f64) -> Vec<Vec3> {
        self.planar
            .relative_positions
            .iter()
            .zip(&self.hemispherical.relative_positions)
            .map(|(p, h)| p * (1.0 - w) + h * w)
            .collect()
    }

    /// Unfolds the hemisphere (`w = 0`) into the sphere (`w = 1`) along the sphere surface.
    pub fn hemisphere_to_sphere(&self, w: f64) -> Vec<Vec3> {
        let fold = 0.5 * (1.0 + w);
        self.angles.iter().map(|a| hemisphere_point(self.spherical.radius, *a, fold)).collect()
    }

    /// First and second derivatives of [`Self::hemisphere_to_sphere`] with respect to `w`.
    pub fn hemisphere_to_sphere_rates(&self, w: f64) -> (Vec<Vec3>, Vec<Vec3>) {
        let fold = 0.5 * (1.0 + w);
        let rho = self.spherical.radius;
        self.angles
            .iter()
            .map(|&(theta, phi)| {
                let a = phi * fold;
                let s = rho * theta.sin() * 0.5 * phi;
                let d1 = rotate_to_primed(&Vec3::new(-s * a.sin(), s * a.cos(), 0.0));
                let d2 = rotate_to_primed(&Vec3::new(-s * 0.5 * phi * a.cos(), -s * 0.5 * phi * a.sin(), 0.0));
                (d1, d2)
            })
            .unzip()
    }
}
