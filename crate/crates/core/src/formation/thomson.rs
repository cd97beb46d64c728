//! Uniform point sets on a sphere by minimizing the Coulomb energy.
//!
//! The continuous gradient flow is discretized as projected gradient descent:
//! each step moves along the tangential negative gradient and renormalizes every
//! point back onto the sphere. A backtracking line search accepts only steps whose
//! energy change is non-positive. Energy differences are evaluated pairwise from
//! the exact position deltas, so the acceptance test stays meaningful long after
//! the total energy has stopped changing in its last representable digit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;

use super::{triangulate, Formation, FormationKind, SphericalPoint};
use crate::dynamics::Vec3;
use crate::error::{require, Error, Result};

/// Cosine of the central angle between two directions given in spherical angles.
pub fn lambda_fn(dphi: f64, theta_i: f64, theta_j: f64) -> f64 {
    dphi.cos() * theta_i.sin() * theta_j.sin() + theta_i.cos() * theta_j.cos()
}

/// Coulomb energy summed over ordered pairs (each pair counted twice).
pub fn coulomb_energy(points: &[SphericalPoint], rho: f64) -> Result<f64> {
    require(points.len() >= 2, "points", || "need at least two points".into())?;
    let mut e = 0.0;
    for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let lam = lambda_fn(p.azimuth - q.azimuth, p.polar, q.polar);
            let chord = rho * (2.0 * (1.0 - lam)).max(0.0).sqrt();
            if chord < 1e-12 * rho {
                return Err(Error::SingularConfiguration(i.min(j), i.max(j)));
            }
            e += 1.0 / chord;
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 50_000, starts: 4 }
    }
}

/// A converged configuration on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct ThomsonSolution {
    pub points: Vec<Vec3>,
    pub energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Energy change of every accepted step.
    pub accepted_deltas: Vec<f64>,
}

fn energy_unit(x: &[Vec3]) -> f64 {
    let mut e = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            e += 2.0 / (x[i] - x[j]).norm();
        }
    }
    e
}

/// Tangential gradient of the (double-counted) energy on the unit sphere.
fn tangential_gradient(x: &[Vec3], g: &mut [Vec3]) {
    g.iter_mut().for_each(|v| *v = Vec3::zeros());
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let d = x[i] - x[j];
            let r = d.norm();
            let f = d * (2.0 / (r * r * r));
            g[i] -= f;
            g[j] += f;
        }
    }
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi -= xi * gi.dot(xi);
    }
}

/// `E(new) - E(old)` from pairwise chord changes.
fn energy_delta(old: &[Vec3], new: &[Vec3]) -> f64 {
    let mut delta = 0.0;
    for i in 0..old.len() {
        for j in (i + 1)..old.len() {
            let u = old[i] - old[j];
            let w = new[i] - new[j];
            let du = (new[i] - old[i]) - (new[j] - old[j]);
            let (a, b) = (u.norm(), w.norm());
            // 1/b - 1/a = (a - b)/(ab), a - b = (a^2 - b^2)/(a + b)
            let sq_diff = -du.dot(&(u + w));
            delta += 2.0 * sq_diff / ((a + b) * a * b);
        }
    }
    delta
}

fn max_norm(g: &[Vec3]) -> f64 {
    g.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Energy changes below this are indistinguishable from rounding in the positions.
fn energy_resolution(x: &[Vec3]) -> f64 {
    64.0 * f64::EPSILON * energy_unit(x)
}

fn descend(mut x: Vec<Vec3>, opts: &SolverOptions) -> Result<ThomsonSolution> {
    let n = x.len();
    let mut g = vec![Vec3::zeros(); n];
    let mut g_trial = vec![Vec3::zeros(); n];
    let mut trial = vec![Vec3::zeros(); n];
    tangential_gradient(&x, &mut g);
    let resolution = energy_resolution(&x);
    let mut step = 0.1 / n as f64;
    let mut deltas = Vec::new();
    let mut iterations = 0;
    let mut gnorm = max_norm(&g);
    while gnorm >= opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence { iterations, residual: gnorm });
        }
        iterations += 1;
        let g2: f64 = g.iter().map(|v| v.norm_squared()).sum();
        let mut accepted = false;
        for _ in 0..60 {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                *t = (xi - gi * step).normalize();
            }
            let de = energy_delta(&x, &trial);
            let armijo = de <= -1e-4 * step * g2;
            // near the minimum the decrease drops below rounding; then require a smaller gradient instead
            if armijo || de <= resolution {
                tangential_gradient(&trial, &mut g_trial);
                let gn = max_norm(&g_trial);
                if armijo || gn < gnorm {
                    deltas.push(de);
                    std::mem::swap(&mut x, &mut trial);
                    std::mem::swap(&mut g, &mut g_trial);
                    gnorm = gn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        // Barzilai-Borwein estimate for the next trial step; `trial` and `g_trial` hold the previous iterate
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..n {
            let s_i = x[i] - trial[i];
            ss += s_i.norm_squared();
            sy += s_i.dot(&(g[i] - g_trial[i]));
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-3 * step, 1e3 * step) } else { step * 1.5 };
    }
    if gnorm >= opts.tol {
        return Err(Error::NonConvergence { iterations, residual: gnorm });
    }
    Ok(ThomsonSolution { energy: energy_unit(&x), points: x, iterations, gradient_norm: gnorm, accepted_deltas: deltas })
}

fn random_start(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Vec3::from(UnitSphere.sample(&mut rng))).collect()
}

/// Multi-start gradient descent on the unit sphere; keeps the lowest energy.
///
/// Accepts `n >= 2`. Deterministic per seed; starts run in parallel.
pub fn relax(n: usize, seed: u64, opts: &SolverOptions) -> Result<ThomsonSolution> {
    require(n >= 2, "n", || format!("need at least 2 points, got {n}"))?;
    require(opts.tol > 0.0, "tol", || "must be > 0".into())?;
    let starts = opts.starts.max(1);
    let runs: Vec<Result<ThomsonSolution>> = (0..starts)
        .into_par_iter()
        .map(|k| descend(random_start(n, seed.wrapping_mul(0x9E37_79B9).wrapping_add(k as u64)), opts))
        .collect();
    let mut best: Option<ThomsonSolution> = None;
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(s) => {
                if best.as_ref().map_or(true, |b| s.energy < b.energy) {
                    best = Some(s);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one start"))
}

/// Uniform spherical formation of `n` points on a sphere of radius `rho`,
/// triangulated into a closed net.
pub fn solve_uniform_sphere(n: usize, rho: f64, seed: u64, tol: f64) -> Result<Formation> {
    require(n >= 4, "n", || format!("need at least 4 defenders, got {n}"))?;
    require(rho > 0.0, "rho", || format!("must be > 0, got {rho}"))?;
    let sol = relax(n, seed, &SolverOptions { tol, ..Default::default() })?;
    log::debug!("thomson n={n}: energy {:.9} after {} iterations", sol.energy, sol.iterations);
    // go through angular coordinates so positions sit on the sphere to rounding
    let relative_positions: Vec<Vec3> = sol
        .points
        .iter()
        .map(|p| {
            let s = SphericalPoint::from_cartesian(p);
            SphericalPoint { radius: rho, ..s }.to_cartesian()
        })
        .collect();
    let mesh = triangulate(&relative_positions)?;
    Ok(Formation { relative_positions, mesh, radius: rho, kind: FormationKind::Spherical })
}
