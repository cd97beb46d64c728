//! Bounded goal tracking for a single defender.
//!
//! The error is driven along a braking envelope `|e'| = psi(|e|)`, which is
//! finite-time near the goal (`k_e |e|^beta`, `beta < 1`) and never asks for
//! more deceleration than a fraction of the actuation limit. A finite-time
//! sliding term pulls the relative velocity onto that envelope.

use serde::{Deserialize, Serialize};

use crate::dynamics::{drag, saturate, AgentParams, AgentState, Vec3};
use crate::error::{require, Error, Result};

/// Target position with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

impl Reference {
    pub fn fixed(position: Vec3) -> Self {
        Self { position, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingGains {
    /// Envelope gain near the goal.
    pub position_gain: f64,
    /// Envelope exponent in `(0, 1)`.
    pub position_exponent: f64,
    pub velocity_gain: f64,
    /// Sliding exponent in `(0, 1)`.
    pub velocity_exponent: f64,
    /// Share of the actuation limit reserved for braking along the envelope.
    pub braking_share: f64,
    /// Cap on the commanded relative speed, as a share of the speed bound.
    pub speed_share: f64,
}

impl Default for TrackingGains {
    fn default() -> Self {
        Self {
            position_gain: 2.5,
            position_exponent: 0.6,
            velocity_gain: 8.0,
            velocity_exponent: 0.6,
            braking_share: 0.85,
            speed_share: 0.95,
        }
    }
}

impl TrackingGains {
    pub fn validate(&self) -> Result<()> {
        require(self.position_gain > 0.0, "position_gain", || "must be > 0".into())?;
        require(self.velocity_gain > 0.0, "velocity_gain", || "must be > 0".into())?;
        for (name, x) in [("position_exponent", self.position_exponent), ("velocity_exponent", self.velocity_exponent)] {
            require(x > 0.0 && x < 1.0, name, || format!("must lie in (0, 1), got {x}"))?;
        }
        for (name, x) in [("braking_share", self.braking_share), ("speed_share", self.speed_share)] {
            require(x > 0.0 && x <= 1.0, name, || format!("must lie in (0, 1], got {x}"))?;
        }
        Ok(())
    }
}

/// `|x|^alpha * x / |x|`.
pub fn sig(x: &Vec3, alpha: f64) -> Vec3 {
    let n = x.norm();
    if n == 0.0 {
        Vec3::zeros()
    } else {
        x * (n.powf(alpha) / n)
    }
}

/// Commanded closing speed at distance `d` from the goal.
pub fn envelope_speed(d: f64, params: &AgentParams, gains: &TrackingGains) -> f64 {
    let c = params.drag_coeff;
    let brake = ((gains.braking_share * params.max_accel / c) * (2.0 * c * d).exp_m1()).sqrt();
    let cap = gains.speed_share * params.speed_bound();
    (gains.position_gain * d.powf(gains.position_exponent)).min(brake).min(cap)
}

/// Acceleration needed to ride the reference exactly.
pub fn feedforward(target: &Reference, params: &AgentParams) -> Vec3 {
    target.acceleration + drag(&target.velocity, params.drag_coeff)
}

/// Saturated tracking control toward `target`.
pub fn track_goal(state: &AgentState, target: &Reference, params: &AgentParams, gains: &TrackingGains) -> Result<Vec3> {
    let demand = feedforward(target, params).norm();
    if !demand.is_finite() {
        return Err(Error::NonFinite("tracking reference"));
    }
    if demand >= params.max_accel {
        return Err(Error::InfeasibleMargin { demand, limit: params.max_accel });
    }
    let e = state.position - target.position;
    let de = state.velocity - target.velocity;
    let d = e.norm();
    let v_cmd = if d > 0.0 { e * (-envelope_speed(d, params, gains) / d) } else { Vec3::zeros() };
    let s = de - v_cmd;
    let u = target.acceleration + drag(&state.velocity, params.drag_coeff) - gains.velocity_gain * sig(&s, gains.velocity_exponent);
    Ok(saturate(&u, params.max_accel))
}
