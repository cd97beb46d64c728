//! The defenders' dominance region: attacker start radii from which the defenders
//! can always gather on the attack path with a time margin to spare.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Vec3;
use crate::error::{require, Error, Result};
use crate::formation::{lambda_fn, SphericalPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominanceParams {
    /// Order of the soft max norm.
    pub delta: f64,
    /// Time the defenders need to connect their nets once gathered.
    pub gather_margin: f64,
    /// Radius of the planar formation.
    pub planar_radius: f64,
    pub max_swarm_radius: f64,
    pub attacker_speed: f64,
    pub defender_accel: f64,
    pub drag_coeff: f64,
    pub protected_radius: f64,
}

impl DominanceParams {
    pub fn validate(&self) -> Result<()> {
        require(self.delta >= 2.0, "delta", || format!("must be >= 2, got {}", self.delta))?;
        require(self.gather_margin >= 0.0, "gather_margin", || "must be >= 0".into())?;
        require(self.planar_radius > 0.0, "planar_radius", || "must be > 0".into())?;
        require(self.max_swarm_radius > 0.0, "max_swarm_radius", || "must be > 0".into())?;
        require(self.attacker_speed >= 0.0, "attacker_speed", || "must be >= 0".into())?;
        require(self.defender_accel > 0.0, "defender_accel", || "must be > 0".into())?;
        require(self.drag_coeff > 0.0, "drag_coeff", || "must be > 0".into())?;
        require(self.protected_radius > 0.0, "protected_radius", || "must be > 0".into())
    }
}

/// Distance from the point at radius `r` along `direction` to a defender.
pub fn rho_j(r: f64, defender: SphericalPoint, direction: (f64, f64)) -> f64 {
    let lam = lambda_fn(direction.1 - defender.azimuth, direction.0, defender.polar);
    let rj = defender.radius;
    (r * r + rj * rj - 2.0 * r * rj * lam).max(0.0).sqrt()
}

/// The `delta`-norm of non-negative values, an upper bound on their maximum.
pub fn soft_max(values: &[f64], delta: f64) -> Result<f64> {
    require(delta >= 1.0, "delta", || format!("must be >= 1, got {delta}"))?;
    require(values.iter().all(|v| *v >= 0.0), "values", || "must be non-negative".into())?;
    let m = values.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = values.iter().map(|v| (v / m).powf(delta)).sum();
    Ok(m * s.powf(1.0 / delta))
}

/// Soft max of defender distances with its first two derivatives in `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftDistance {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn soft_max_distance(r: f64, defenders: &[SphericalPoint], direction: (f64, f64), delta: f64) -> SoftDistance {
    let terms: Vec<(f64, f64)> = defenders
        .iter()
        .map(|d| {
            let lam = lambda_fn(direction.1 - d.azimuth, direction.0, d.polar);
            let rho = (r * r + d.radius * d.radius - 2.0 * r * d.radius * lam).max(0.0).sqrt();
            let slope = if rho > 0.0 { ((r - d.radius * lam) / rho).clamp(-1.0, 1.0) } else { 0.0 };
            (rho, slope)
        })
        .collect();
    let m = terms.iter().map(|t| t.0).fold(0.0, f64::max);
    if m == 0.0 {
        return SoftDistance { value: 0.0, d1: 0.0, d2: 0.0 };
    }
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &(rho, slope) in &terms {
        let x = rho / m;
        s0 += x.powf(delta);
        let xd2 = x.powf(delta - 2.0);
        s1 += xd2 * x * slope;
        s2 += xd2 * (1.0 + (delta - 2.0) * slope * slope);
    }
    let ratio = s0.powf(1.0 / delta);
    let value = m * ratio;
    let d1 = s1 / ratio.powf(delta - 1.0);
    let d2 = s2 / (m * ratio.powf(delta - 1.0)) - (delta - 1.0) * d1 * d1 / value;
    SoftDistance { value, d1, d2 }
}

fn check_travel_inputs(distance: f64, u_max: f64, c_d: f64) -> Result<()> {
    require(distance >= 0.0 && distance.is_finite(), "distance", || format!("must be >= 0, got {distance}"))?;
    require(u_max > 0.0, "u_max", || format!("must be > 0, got {u_max}"))?;
    require(c_d > 0.0, "c_d", || format!("must be > 0, got {c_d}"))
}

/// Rest-to-rest time over `distance` under full thrust then full braking with
/// quadratic drag.
pub fn travel_time_bound(distance: f64, u_max: f64, c_d: f64) -> Result<f64> {
    check_travel_inputs(distance, u_max, c_d)?;
    let y = c_d * distance;
    let x = y.tanh().sqrt();
    // atanh(x) rewritten so it stays accurate as x -> 1
    let atanh = x.ln_1p() + 0.5 * (2.0 * y + (-2.0 * y).exp().ln_1p() - LN_2);
    Ok((atanh + x.atan()) / (u_max * c_d).sqrt())
}

/// First and second derivatives of [`travel_time_bound`] in the distance.
pub fn travel_time_derivatives(distance: f64, u_max: f64, c_d: f64) -> Result<(f64, f64)> {
    check_travel_inputs(distance, u_max, c_d)?;
    require(distance > 0.0, "distance", || "derivatives need distance > 0".into())?;
    let lambda0 = (u_max * c_d).sqrt();
    let y = c_d * distance;
    let x = y.tanh().sqrt();
    let sech2 = 1.0 / y.cosh().powi(2);
    Ok((c_d / (lambda0 * x), -c_d * c_d * sech2 / (2.0 * lambda0 * x.powi(3))))
}

/// Value and two derivatives of the limiting attacker distance at gathering radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCurve {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

fn to_spherical(defenders: &[Vec3]) -> Vec<SphericalPoint> {
    defenders.iter().map(SphericalPoint::from_cartesian).collect()
}

fn limit_curve(r: f64, defenders: &[SphericalPoint], direction: (f64, f64), p: &DominanceParams) -> LimitCurve {
    let s = soft_max_distance(r, defenders, direction, p.delta);
    let dist = s.value + p.planar_radius;
    let t = travel_time_bound(dist, p.defender_accel, p.drag_coeff).expect("validated inputs");
    let (t1, t2) = travel_time_derivatives(dist, p.defender_accel, p.drag_coeff).expect("validated inputs");
    LimitCurve {
        value: p.max_swarm_radius + r + p.attacker_speed * (t + p.gather_margin),
        d1: 1.0 + p.attacker_speed * t1 * s.d1,
        d2: p.attacker_speed * (t2 * s.d1 * s.d1 + t1 * s.d2),
    }
}

/// Smallest attacker distance along `direction` for which defenders gathering at
/// radius `r` still meet the time margin. Defender positions are relative to the
/// protected area's center.
pub fn f_r(r: f64, direction: (f64, f64), defenders: &[Vec3], params: &DominanceParams) -> f64 {
    limit_curve(r, &to_spherical(defenders), direction, params).value
}

pub fn f_r_derivatives(r: f64, direction: (f64, f64), defenders: &[Vec3], params: &DominanceParams) -> LimitCurve {
    limit_curve(r, &to_spherical(defenders), direction, params)
}

fn check_defenders(defenders: &[Vec3]) -> Result<()> {
    require(!defenders.is_empty(), "defenders", || "need at least one defender".into())?;
    let scale = defenders.iter().map(|p| p.norm()).fold(1.0, f64::max);
    for i in 0..defenders.len() {
        if !defenders[i].iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("defender position"));
        }
        for j in (i + 1)..defenders.len() {
            if (defenders[i] - defenders[j]).norm() <= 1e-9 * scale {
                return Err(Error::DegenerateDefenders(i, j));
            }
        }
    }
    Ok(())
}

/// Minimum of a unimodal function on `[a, b]`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-10 * (1.0 + a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackRadius {
    /// Smallest admissible attacker start distance along the direction.
    pub r_min: f64,
    /// Gathering radius attaining it.
    pub r_opt: f64,
    /// Minimizer of the soft max distance, the descent's starting point.
    pub r_star: f64,
    /// The minimum sits on the protected-area boundary.
    pub at_boundary: bool,
}

/// Projected gradient descent with Armijo backtracking on `R >= lo`.
fn descend(curve: impl Fn(f64) -> LimitCurve, start: f64, lo: f64, step0: f64, tol: f64) -> (f64, f64) {
    let mut r = start.max(lo);
    let mut c = curve(r);
    let mut step = step0;
    for _ in 0..100_000 {
        if c.d1.abs() < tol || (r <= lo && c.d1 > 0.0) {
            break;
        }
        let trial = (r - step * c.d1).max(lo);
        let ct = curve(trial);
        if ct.value <= c.value - 1e-4 * c.d1 * (r - trial) {
            r = trial;
            c = ct;
            step *= 1.5;
        } else {
            step *= 0.5;
            if step < 1e-14 * (1.0 + r) {
                break;
            }
        }
    }
    (c.value, r)
}

/// Minimal start radius of the attackers along `direction` (polar, azimuth).
pub fn min_attack_radius(direction: (f64, f64), defenders: &[Vec3], params: &DominanceParams) -> Result<AttackRadius> {
    params.validate()?;
    check_defenders(defenders)?;
    let sph = to_spherical(defenders);
    let delta = params.delta;
    let curve = |r: f64| limit_curve(r, &sph, direction, params);

    let r_hi = sph.iter().map(|d| d.radius).fold(0.0, f64::max) + 1.0;
    let r_star = golden_section(|r| soft_max_distance(r, &sph, direction, delta).value, 0.0, r_hi);

    let lo = params.protected_radius;
    let step0 = 0.01 * lo;
    let tol = 1e-8 * params.attacker_speed.max(1e-3);
    let (mut best_f, mut best_r) = descend(curve, r_star, lo, step0, tol);

    // coarse global scan guards against leaving the locally convex region
    let upper = curve(lo).value - params.max_swarm_radius;
    let grid_best = (1..=200)
        .map(|k| lo + (upper - lo) * k as f64 / 200.0)
        .map(|r| (curve(r).value, r))
        .fold((curve(lo).value, lo), |a, b| if b.0 < a.0 { b } else { a });
    let (gf, gr) = descend(curve, grid_best.1, lo, step0, tol);
    if gf < best_f {
        best_f = gf;
        best_r = gr;
    }
    Ok(AttackRadius { r_min: best_f, r_opt: best_r, r_star, at_boundary: best_r <= lo })
}

/// Interval around the soft-max minimizer on which `f` is provably convex,
/// judged from its analytic second derivative.
pub fn convexity_neighborhood(direction: (f64, f64), defenders: &[Vec3], params: &DominanceParams) -> Result<(f64, f64)> {
    params.validate()?;
    check_defenders(defenders)?;
    let sph = to_spherical(defenders);
    let r_hi = sph.iter().map(|d| d.radius).fold(0.0, f64::max) + 1.0;
    let r_star =
        golden_section(|r| soft_max_distance(r, &sph, direction, params.delta).value, 0.0, r_hi);
    let h = 1e-3 * (1.0 + r_star);
    let convex = |r: f64| limit_curve(r, &sph, direction, params).d2 >= 0.0;
    let mut hi = r_star;
    while convex(hi + h) && hi - r_star < 10.0 * r_hi {
        hi += h;
    }
    let mut lo = r_star;
    while lo - h > 0.0 && convex(lo - h) && r_star - lo < 10.0 * r_hi {
        lo -= h;
    }
    Ok((lo, hi))
}

/// Boundary radii on a latitude-longitude grid of attack directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceBoundary {
    pub n_theta: usize,
    pub n_phi: usize,
    /// `(polar, azimuth)` per grid node, row-major in polar angle.
    pub directions: Vec<(f64, f64)>,
    pub radii: Vec<f64>,
    pub gathering_radii: Vec<f64>,
}

impl DominanceBoundary {
    pub fn theta(&self, i: usize) -> f64 {
        PI * i as f64 / (self.n_theta - 1) as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        -PI + 2.0 * PI * j as f64 / self.n_phi as f64
    }

    /// Largest of the four grid radii surrounding the direction.
    pub fn radius_at(&self, theta: f64, phi: f64) -> f64 {
        let dt = PI / (self.n_theta - 1) as f64;
        let dp = 2.0 * PI / self.n_phi as f64;
        let i = ((theta.clamp(0.0, PI) / dt).floor() as usize).min(self.n_theta - 2);
        let j = (((phi + PI).rem_euclid(2.0 * PI) / dp).floor() as usize) % self.n_phi;
        let j1 = (j + 1) % self.n_phi;
        [(i, j), (i, j1), (i + 1, j), (i + 1, j1)]
            .iter()
            .map(|&(a, b)| self.radii[a * self.n_phi + b])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether an attacker start (relative to the protected center) lies in the
    /// estimated dominance region of the defenders.
    pub fn contains(&self, point: &Vec3) -> bool {
        let s = SphericalPoint::from_cartesian(point);
        s.radius >= self.radius_at(s.polar, s.azimuth)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,phi,r_min\n");
        for ((t, p), r) in self.directions.iter().zip(&self.radii) {
            writeln!(s, "{t},{p},{r}").unwrap();
        }
        s
    }
}

pub fn dominance_boundary(
    defenders: &[Vec3],
    params: &DominanceParams,
    n_theta: usize,
    n_phi: usize,
) -> Result<DominanceBoundary> {
    require(n_theta >= 8 && n_phi >= 8, "grid", || format!("need at least 8x8, got {n_theta}x{n_phi}"))?;
    params.validate()?;
    check_defenders(defenders)?;
    let mut b = DominanceBoundary { n_theta, n_phi, directions: Vec::new(), radii: Vec::new(), gathering_radii: Vec::new() };
    b.directions = (0..n_theta).flat_map(|i| (0..n_phi).map(move |j| (i, j))).map(|(i, j)| (b.theta(i), b.phi(j))).collect();
    let results: Vec<AttackRadius> = b
        .directions
        .par_iter()
        .map(|&(theta, phi)| {
            min_attack_radius((theta, phi), defenders, params)
                .map_err(|e| Error::Direction { theta, phi, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    b.radii = results.iter().map(|r| r.r_min).collect();
    b.gathering_radii = results.iter().map(|r| r.r_opt).collect();
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> DominanceParams {
        DominanceParams {
            delta: 20.0,
            gather_margin: 5.0,
            planar_radius: 33.0,
            max_swarm_radius: 25.0,
            attacker_speed: 10.0,
            defender_accel: 20.0,
            drag_coeff: 0.05,
            protected_radius: 50.0,
        }
    }

    fn unit(theta: f64, phi: f64) -> Vec3 {
        SphericalPoint::new(1.0, theta, phi).to_cartesian()
    }

    #[test]
    fn rho_j_examples() {
        let d = SphericalPoint::new(40.0, 0.7, 1.1);
        assert!(rho_j(40.0, d, (0.7, 1.1)) < 1e-6);
        let anti = SphericalPoint::new(30.0, PI - 0.7, 1.1 + PI);
        assert_relative_eq!(rho_j(20.0, anti, (0.7, 1.1)), 50.0, epsilon = 1e-9);
    }

    #[test]
    fn soft_max_examples() {
        assert_relative_eq!(soft_max(&[3.0, 4.0], 2.0).unwrap(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(soft_max(&[7.0], 13.0).unwrap(), 7.0, epsilon = 1e-12);
        // (3^20 + 4^20)^(1/20)
        assert_relative_eq!(soft_max(&[3.0, 4.0], 20.0).unwrap(), 4.000633, epsilon = 1e-6);
        let mut prev = f64::INFINITY;
        for d in [2.0, 5.0, 10.0, 20.0, 50.0] {
            let v = soft_max(&[3.0, 4.0], d).unwrap();
            assert!(v >= 4.0 && v < prev);
            prev = v;
        }
        assert!(soft_max(&[1e300, 1e300], 20.0).unwrap().is_finite());
        assert!(soft_max(&[1.0], 0.5).is_err());
    }

    #[test]
    fn travel_time_examples() {
        assert_relative_eq!(travel_time_bound(100.0, 10.0, 0.01).unwrap(), 6.520, epsilon = 5e-4);
        assert!(travel_time_bound(1e-12, 10.0, 0.01).unwrap() < 1e-5);
        assert_eq!(travel_time_bound(0.0, 10.0, 0.01).unwrap(), 0.0);
        assert!(travel_time_bound(1e6, 10.0, 0.01).unwrap().is_finite());
        // long trips approach cruise at terminal speed sqrt(u/c)
        let far = travel_time_bound(1e4, 10.0, 0.01).unwrap() - travel_time_bound(9e3, 10.0, 0.01).unwrap();
        assert_relative_eq!(far, 1e3 / 10f64.sqrt() / 10.0, max_relative = 1e-9);
    }

    /// Accelerate, then brake, integrating the drag dynamics directly.
    fn bang_bang(distance: f64, u: f64, c: f64) -> (f64, f64) {
        let lambda = (2.0 * c * distance).exp();
        let v_sw = ((lambda - 1.0) * u / ((lambda + 1.0) * c)).sqrt();
        let dt = 1e-5 * (1.0 / (u * c).sqrt()).min(1.0);
        let (mut x, mut v, mut t) = (0.0, 0.0, 0.0);
        let accel = |v: f64, sign: f64| sign * u - c * v * v;
        let mut sign = 1.0;
        loop {
            let k1 = accel(v, sign);
            let k2 = accel(v + 0.5 * dt * k1, sign);
            let k3 = accel(v + 0.5 * dt * k2, sign);
            let k4 = accel(v + dt * k3, sign);
            let dv = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if sign > 0.0 && v + dv >= v_sw * (1.0 - 1e-13) {
                let h = dt * (v_sw - v) / dv;
                x += h * (v + 0.5 * (v_sw - v));
                t += h;
                v = v_sw;
                sign = -1.0;
                continue;
            }
            if sign < 0.0 && v + dv <= 0.0 {
                let h = dt * v / -dv;
                x += 0.5 * h * v;
                t += h;
                return (t, x);
            }
            x += dt * (v + 0.5 * dv);
            v += dv;
            t += dt;
        }
    }

    #[test]
    fn travel_time_matches_integration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (d, u, c) = (rng.random_range(5.0..500.0), rng.random_range(1.0..30.0), rng.random_range(0.001..0.02));
            let (t, x) = bang_bang(d, u, c);
            assert_relative_eq!(t, travel_time_bound(d, u, c).unwrap(), max_relative = 1e-3);
            assert_relative_eq!(x, d, max_relative = 1e-3);
        }
    }

    #[test]
    fn travel_time_derivative_signs() {
        let (u, c) = (10.0, 0.01);
        for d in [0.5, 5.0, 50.0, 500.0] {
            let (t1, t2) = travel_time_derivatives(d, u, c).unwrap();
            let h = 1e-3 * d;
            let f = |x: f64| travel_time_bound(x, u, c).unwrap();
            let fd1 = (f(d + h) - f(d - h)) / (2.0 * h);
            let fd2 = (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h);
            assert!(t1 > 0.0 && t2 <= 0.0);
            assert_relative_eq!(t1, fd1, max_relative = 1e-5);
            assert_relative_eq!(t2, fd2, max_relative = 1e-3);
        }
    }

    #[test]
    fn f_r_reductions() {
        let p = params();
        let origin = [Vec3::zeros()];
        let r = 120.0;
        let t = travel_time_bound(r + p.planar_radius, p.defender_accel, p.drag_coeff).unwrap();
        let expect = p.max_swarm_radius + r + p.attacker_speed * (t + p.gather_margin);
        assert_relative_eq!(f_r(r, (0.3, 0.2), &origin, &p), expect, max_relative = 1e-12);

        let slow = DominanceParams { attacker_speed: 0.0, ..p };
        assert_relative_eq!(f_r(r, (0.3, 0.2), &origin, &slow), p.max_swarm_radius + r);

        let later = DominanceParams { gather_margin: p.gather_margin + 2.5, ..p };
        let shift = f_r(r, (0.3, 0.2), &origin, &later) - f_r(r, (0.3, 0.2), &origin, &p);
        assert_relative_eq!(shift, 25.0, max_relative = 1e-12);
    }

    fn random_layout(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                v.normalize() * rng.random_range(55.0..120.0)
            })
            .collect()
    }

    #[test]
    fn soft_distance_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let def: Vec<SphericalPoint> = random_layout(&mut rng, 20).iter().map(SphericalPoint::from_cartesian).collect();
        for &r in &[10.0, 60.0, 150.0, 400.0] {
            let dir = (1.0, -0.4);
            let h = 1e-4 * r;
            let s = soft_max_distance(r, &def, dir, 20.0);
            let v = |x: f64| soft_max_distance(x, &def, dir, 20.0);
            let fd1 = (v(r + h).value - v(r - h).value) / (2.0 * h);
            let fd2 = (v(r + h).d1 - v(r - h).d1) / (2.0 * h);
            assert_relative_eq!(s.d1, fd1, max_relative = 1e-6);
            assert_relative_eq!(s.d2, fd2, max_relative = 1e-4, epsilon = 1e-9);
            let direct = soft_max(&def.iter().map(|d| rho_j(r, *d, dir)).collect::<Vec<_>>(), 20.0).unwrap();
            assert_relative_eq!(s.value, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn far_side_defenders_give_boundary_minimum() {
        let defenders: Vec<Vec3> = (0..5).map(|k| unit(PI - 0.1 * k as f64, 0.3 * k as f64) * 80.0).collect();
        let p = params();
        let a = min_attack_radius((0.0, 0.0), &defenders, &p).unwrap();
        assert!(a.at_boundary);
        assert_eq!(a.r_opt, p.protected_radius);
        let grid = (0..=4000).map(|k| 50.0 + k as f64 * 0.25).map(|r| f_r(r, (0.0, 0.0), &defenders, &p));
        assert!(a.r_min <= grid.fold(f64::INFINITY, f64::min) + 1e-9);
    }

    #[test]
    fn minimum_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = DominanceParams { protected_radius: 20.0, ..params() };
        for _ in 0..5 {
            let defenders = random_layout(&mut rng, 20);
            let dir = (rng.random_range(0.0..PI), rng.random_range(-PI..PI));
            let a = min_attack_radius(dir, &defenders, &p).unwrap();
            let upper = f_r(p.protected_radius, dir, &defenders, &p) - p.max_swarm_radius;
            let cell = (upper - p.protected_radius) / 20000.0;
            let (gf, gr) = (0..=20000)
                .map(|k| p.protected_radius + cell * k as f64)
                .map(|r| (f_r(r, dir, &defenders, &p), r))
                .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
            assert!(a.r_min <= gf + 1e-9);
            assert!((a.r_opt - gr).abs() <= cell + 1e-6 * gr, "{} vs {}", a.r_opt, gr);
        }
    }

    #[test]
    fn colocated_defenders_are_rejected() {
        let d = [Vec3::new(60.0, 0.0, 0.0), Vec3::new(60.0, 0.0, 0.0)];
        assert!(matches!(min_attack_radius((0.0, 0.0), &d, &params()), Err(Error::DegenerateDefenders(0, 1))));
    }

    #[test]
    fn symmetric_shell_gives_round_boundary() {
        let oct: Vec<Vec3> = [Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()]
            .iter()
            .map(|v| v * 70.0)
            .collect();
        let p = params();
        let a = min_attack_radius((0.0, 0.0), &oct, &p).unwrap().r_min;
        for dir in [(PI / 2.0, 0.0), (PI, 0.0), (PI / 2.0, PI / 2.0)] {
            assert_relative_eq!(min_attack_radius(dir, &oct, &p).unwrap().r_min, a, max_relative = 1e-6);
        }
        let b = dominance_boundary(&oct, &p, 9, 8).unwrap();
        assert!(b.radii.iter().all(|r| *r > p.protected_radius + p.max_swarm_radius));
        assert!(b.to_csv().starts_with("theta,phi,r_min\n"));
        assert_eq!(b.to_csv().lines().count(), 73);
    }

    #[test]
    fn dense_side_has_smaller_radius() {
        let mut defenders: Vec<Vec3> = (0..16)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 16.0;
                Vec3::new(70.0, 25.0 * a.cos(), 25.0 * a.sin())
            })
            .collect();
        defenders.extend([Vec3::new(-70.0, 0.0, 20.0), Vec3::new(-70.0, 0.0, -20.0), Vec3::new(0.0, 70.0, 0.0), Vec3::new(0.0, -70.0, 0.0)]);
        let p = params();
        let dense = min_attack_radius((PI / 2.0, 0.0), &defenders, &p).unwrap().r_min;
        let sparse = min_attack_radius((PI / 2.0, PI), &defenders, &p).unwrap().r_min;
        assert!(dense < sparse, "{dense} vs {sparse}");
    }

    #[test]
    fn membership_is_conservative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let defenders = random_layout(&mut rng, 12);
        let p = params();
        let b = dominance_boundary(&defenders, &p, 10, 12).unwrap();
        for _ in 0..50 {
            let (t, ph) = (rng.random_range(0.0..PI), rng.random_range(-PI..PI));
            let r = b.radius_at(t, ph);
            assert!(b.contains(&(unit(t, ph) * (r * 1.0001))));
            assert!(!b.contains(&(unit(t, ph) * (r * 0.9999))));
        }
        let bad = dominance_boundary(&defenders, &p, 4, 12);
        assert!(bad.is_err());
    }

    #[test]
    fn local_convexity_near_soft_max_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = params();
        for _ in 0..3 {
            let defenders = random_layout(&mut rng, 20);
            let dir = (rng.random_range(0.0..PI), rng.random_range(-PI..PI));
            let (lo, hi) = convexity_neighborhood(dir, &defenders, &p).unwrap();
            assert!(hi > lo);
            let h = 1e-3 * (hi - lo);
            for k in 0..20 {
                let r = lo + h + (hi - lo - 2.0 * h) * k as f64 / 19.0;
                let d2 = f_r(r + h, dir, &defenders, &p) - 2.0 * f_r(r, dir, &defenders, &p) + f_r(r - h, dir, &defenders, &p);
                assert!(d2 >= -1e-9, "{d2}");
            }
        }
    }

    proptest! {
        #[test]
        fn rho_j_is_cartesian_distance(
            r in 0.0f64..500.0, rj in 0.0f64..500.0, t in 0.0f64..PI, p in -PI..PI, td in 0.0f64..PI, pd in -PI..PI,
        ) {
            let d = SphericalPoint::new(rj, td, pd);
            let direct = (unit(t, p) * r - d.to_cartesian()).norm();
            prop_assert!((rho_j(r, d, (t, p)) - direct).abs() <= 1e-9 * (1.0 + r + rj));
        }

        #[test]
        fn soft_max_dominates_max(values in proptest::collection::vec(0.0f64..1e3, 1..30), delta in 1.0f64..80.0) {
            let m = values.iter().copied().fold(0.0, f64::max);
            prop_assert!(soft_max(&values, delta).unwrap() >= m * (1.0 - 1e-15));
        }

        #[test]
        fn travel_time_increasing(d in 0.0f64..2000.0, extra in 1e-3f64..100.0, u in 0.5f64..40.0, c in 1e-3f64..0.2) {
            prop_assert!(travel_time_bound(d + extra, u, c).unwrap() > travel_time_bound(d, u, c).unwrap());
        }
    }
}
