//! Agent state, actuation saturation and the double-integrator-with-drag model.
//!
//! Every agent obeys `r' = v`, `v' = u - C_D |v| v` with `|u| <= u_max`. The
//! drag term caps the reachable speed at `sqrt(u_max / C_D)`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};

pub type Vec3 = Vector3<f64>;

/// Default integration step in seconds.
pub const DEFAULT_DT: f64 = 0.01;

/// Physical and sensing limits of one agent class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentParams {
    pub radius: f64,
    pub max_accel: f64,
    pub drag_coeff: f64,
    pub sensing_radius: f64,
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        require(self.max_accel > 0.0, "max_accel", || format!("must be > 0, got {}", self.max_accel))?;
        require(self.drag_coeff > 0.0, "drag_coeff", || format!("must be > 0, got {}", self.drag_coeff))?;
        require(self.radius >= 0.0, "radius", || format!("must be >= 0, got {}", self.radius))?;
        require(self.sensing_radius >= 0.0, "sensing_radius", || {
            format!("must be >= 0, got {}", self.sensing_radius)
        })
    }

    pub fn speed_bound(&self) -> f64 {
        (self.max_accel / self.drag_coeff).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl AgentState {
    pub fn at_rest(position: Vec3) -> Self {
        Self { position, velocity: Vec3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|x| x.is_finite())
    }
}

/// Protected area `P` and safe area `S`, both balls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Areas {
    pub protected_center: [f64; 3],
    pub protected_radius: f64,
    pub safe_center: [f64; 3],
    pub safe_radius: f64,
}

impl Areas {
    pub fn protected(&self) -> Vec3 {
        Vec3::from(self.protected_center)
    }

    pub fn safe(&self) -> Vec3 {
        Vec3::from(self.safe_center)
    }

    pub fn in_protected(&self, p: &Vec3) -> bool {
        (p - self.protected()).norm() <= self.protected_radius
    }

    pub fn in_safe(&self, p: &Vec3) -> bool {
        (p - self.safe()).norm() <= self.safe_radius
    }

    pub fn validate(&self) -> Result<()> {
        require(self.protected_radius > 0.0, "protected_radius", || "must be > 0".into())?;
        require(self.safe_radius > 0.0, "safe_radius", || "must be > 0".into())?;
        let gap = (self.protected() - self.safe()).norm();
        require(gap > self.protected_radius + self.safe_radius, "safe_center", || {
            format!("protected and safe areas overlap (center gap {gap})")
        })
    }
}

/// `min(|g|, bound) * g / |g|`, with the zero vector mapped to itself.
pub fn saturate(g: &Vec3, bound: f64) -> Vec3 {
    let n = g.norm();
    if n <= bound || n == 0.0 {
        *g
    } else {
        g * (bound / n)
    }
}

pub fn speed_bound(max_accel: f64, drag_coeff: f64) -> Result<f64> {
    require(max_accel > 0.0, "max_accel", || format!("must be > 0, got {max_accel}"))?;
    require(drag_coeff > 0.0, "drag_coeff", || format!("must be > 0, got {drag_coeff}"))?;
    Ok((max_accel / drag_coeff).sqrt())
}

#[inline]
pub(crate) fn drag(v: &Vec3, drag_coeff: f64) -> Vec3 {
    v * (drag_coeff * v.norm())
}

/// One RK4 step of the drag dynamics with the control held over the step.
pub fn step_agent(state: &AgentState, u: &Vec3, params: &AgentParams, dt: f64) -> Result<AgentState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter { name: "dt", reason: format!("must be finite and > 0, got {dt}") });
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("agent state"));
    }
    if !u.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("control input"));
    }
    Ok(rk4(state, u, params.drag_coeff, dt))
}

pub(crate) fn rk4(s: &AgentState, u: &Vec3, c_d: f64, dt: f64) -> AgentState {
    let acc = |v: &Vec3| u - drag(v, c_d);
    let (r0, v0) = (s.position, s.velocity);

    let k1r = v0;
    let k1v = acc(&v0);
    let v1 = v0 + k1v * (0.5 * dt);
    let k2r = v1;
    let k2v = acc(&v1);
    let v2 = v0 + k2v * (0.5 * dt);
    let k3r = v2;
    let k3v = acc(&v2);
    let v3 = v0 + k3v * dt;
    let k4r = v3;
    let k4v = acc(&v3);

    AgentState {
        position: r0 + (k1r + 2.0 * k2r + 2.0 * k3r + k4r) * (dt / 6.0),
        velocity: v0 + (k1v + 2.0 * k2v + 2.0 * k3v + k4v) * (dt / 6.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(u: f64, c: f64) -> AgentParams {
        AgentParams { radius: 1.0, max_accel: u, drag_coeff: c, sensing_radius: 10.0 }
    }

    #[test]
    fn saturate_examples() {
        assert_relative_eq!(saturate(&Vec3::new(3.0, 4.0, 0.0), 1.0), Vec3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
        assert_eq!(saturate(&Vec3::new(0.1, 0.0, 0.0), 1.0), Vec3::new(0.1, 0.0, 0.0));
        assert_eq!(saturate(&Vec3::zeros(), 5.0), Vec3::zeros());
    }

    #[test]
    fn speed_bound_examples() {
        assert_relative_eq!(speed_bound(10.0, 0.01).unwrap(), 31.622776601683793, epsilon = 1e-12);
        assert_eq!(speed_bound(1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(speed_bound(4.0, 0.04).unwrap(), 10.0, epsilon = 1e-12);
        assert!(speed_bound(0.0, 1.0).is_err());
        assert!(speed_bound(1.0, -1.0).is_err());
    }

    #[test]
    fn equilibrium_is_fixed() {
        let s = AgentState::default();
        let next = step_agent(&s, &Vec3::zeros(), &params(10.0, 0.01), 0.01).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn terminal_speed_under_constant_thrust() {
        let p = params(10.0, 0.01);
        let u = Vec3::new(10.0, 0.0, 0.0);
        let mut s = AgentState::default();
        for _ in 0..3000 {
            s = step_agent(&s, &u, &p, 0.01).unwrap();
        }
        assert_relative_eq!(s.velocity.norm(), 31.6228, epsilon = 1e-3);
    }

    /// Accelerate at full thrust, then brake once the remaining distance equals
    /// the drag-assisted stopping distance `ln(1 + C v^2 / u) / (2C)`.
    #[test]
    fn rest_to_rest_bang_bang_time() {
        let p = params(10.0, 0.01);
        let dt = 1e-4;
        let mut s = AgentState::default();
        let mut t = 0.0;
        let target = 100.0;
        loop {
            let v = s.velocity.x;
            let stop = (1.0 + p.drag_coeff * v * v / p.max_accel).ln() / (2.0 * p.drag_coeff);
            let braking = s.position.x + stop >= target;
            let u = Vec3::new(if braking { -p.max_accel } else { p.max_accel }, 0.0, 0.0);
            let next = step_agent(&s, &u, &p, dt).unwrap();
            if braking && next.velocity.x <= 0.0 {
                t += dt * s.velocity.x / (s.velocity.x - next.velocity.x);
                break;
            }
            s = next;
            t += dt;
        }
        assert!((t - 6.52).abs() < 5e-3, "t = {t}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(1.0, 1.0);
        let s = AgentState::default();
        assert!(step_agent(&s, &Vec3::new(f64::NAN, 0.0, 0.0), &p, 0.01).is_err());
        assert!(step_agent(&s, &Vec3::zeros(), &p, 0.0).is_err());
        let bad = AgentState { position: Vec3::new(f64::INFINITY, 0.0, 0.0), velocity: Vec3::zeros() };
        assert!(step_agent(&bad, &Vec3::zeros(), &p, 0.01).is_err());
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-50.0f64..50.0).prop_map(Vec3::from)
    }

    proptest! {
        #[test]
        fn saturate_idempotent(g in vec3(), b in 0.01f64..20.0) {
            let once = saturate(&g, b);
            let twice = saturate(&once, b);
            prop_assert!((once - twice).norm() <= 1e-12 * (1.0 + once.norm()));
            prop_assert!(once.norm() <= b * (1.0 + 1e-12));
        }

        #[test]
        fn speed_stays_below_bound(
            seq in prop::collection::vec(vec3(), 50..200),
            v0 in vec3(),
        ) {
            let p = params(5.0, 0.05);
            let vbar = p.speed_bound();
            let mut s = AgentState { position: Vec3::zeros(), velocity: saturate(&v0, 0.99 * vbar) };
            for g in &seq {
                let u = saturate(g, p.max_accel);
                for _ in 0..10 {
                    s = step_agent(&s, &u, &p, 0.01).unwrap();
                    prop_assert!(s.velocity.norm() < vbar + 1e-9);
                }
            }
        }

        #[test]
        fn drag_decelerates(v0 in vec3()) {
            prop_assume!(v0.norm() > 1e-6);
            let p = params(1.0, 0.1);
            let mut s = AgentState { position: Vec3::zeros(), velocity: v0 };
            for _ in 0..100 {
                let next = step_agent(&s, &Vec3::zeros(), &p, 0.01).unwrap();
                prop_assert!(next.velocity.norm() < s.velocity.norm());
                s = next;
            }
        }

        #[test]
        fn integration_is_deterministic(seq in prop::collection::vec(vec3(), 1..50)) {
            let p = params(5.0, 0.05);
            let run = || {
                let mut s = AgentState::default();
                for g in &seq {
                    s = step_agent(&s, &saturate(g, 5.0), &p, 0.01).unwrap();
                }
                s
            };
            let (a, b) = (run(), run());
            prop_assert_eq!(a.position.map(f64::to_bits), b.position.map(f64::to_bits));
            prop_assert_eq!(a.velocity.map(f64::to_bits), b.velocity.map(f64::to_bits));
        }
    }
}
