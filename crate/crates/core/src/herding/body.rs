//! The virtual rigid body carrying the defenders' formation.

use serde::{Deserialize, Serialize};

use crate::dynamics::{drag, rk4, saturate, AgentState, Areas, Vec3};
use crate::error::{require, Result};
use crate::herding::tracking::Reference;
use crate::transforms::{error_quaternion, orientation_towards, Quaternion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualBody {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Translational acceleration applied over the last step.
    pub acceleration: Vec3,
    pub orientation: Quaternion,
    /// Body frame.
    pub angular_velocity: Vec3,
    /// Body frame, applied over the last step.
    pub angular_acceleration: Vec3,
}

impl VirtualBody {
    pub fn at_rest(position: Vec3, orientation: Quaternion) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            orientation,
            angular_velocity: Vec3::zeros(),
            angular_acceleration: Vec3::zeros(),
        }
    }

    pub fn world_angular_velocity(&self) -> Vec3 {
        self.orientation * self.angular_velocity
    }

    pub fn world_angular_acceleration(&self) -> Vec3 {
        self.orientation * self.angular_acceleration
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).chain(self.angular_velocity.iter()).all(|x| x.is_finite())
            && self.orientation.coords.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyGains {
    /// Position gain `k1` of the seeking law.
    pub position_gain: f64,
    /// Damping on the velocity relative to the attackers.
    pub damping_gain: f64,
    pub max_accel: f64,
    pub drag_coeff: f64,
    /// Attitude stiffness `K`.
    pub attitude_gain: f64,
    /// Attitude damping `D`.
    pub attitude_damping: f64,
    pub max_angular_accel: f64,
    /// Below this distance to the attackers the heading is held.
    pub hold_radius: f64,
    /// Herding speed command per metre of distance to the safe area.
    pub herding_gain: f64,
    /// Velocity loop gain used while herding.
    pub herding_velocity_gain: f64,
    /// Extra distance kept between the carried net and the protected area.
    pub keep_out_margin: f64,
}

impl Default for BodyGains {
    fn default() -> Self {
        Self {
            position_gain: 0.5,
            damping_gain: 1.5,
            max_accel: 4.0,
            drag_coeff: 0.05,
            attitude_gain: 2.0,
            attitude_damping: 2.5,
            max_angular_accel: 0.15,
            hold_radius: 1.0,
            herding_gain: 0.3,
            herding_velocity_gain: 1.0,
            keep_out_margin: 10.0,
        }
    }
}

impl BodyGains {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("position_gain", self.position_gain),
            ("damping_gain", self.damping_gain),
            ("attitude_gain", self.attitude_gain),
            ("attitude_damping", self.attitude_damping),
            ("hold_radius", self.hold_radius),
            ("herding_gain", self.herding_gain),
            ("herding_velocity_gain", self.herding_velocity_gain),
            ("keep_out_margin", self.keep_out_margin),
        ] {
            require(x >= 0.0 && x.is_finite(), name, || format!("must be finite and >= 0, got {x}"))?;
        }
        for (name, x) in
            [("max_accel", self.max_accel), ("drag_coeff", self.drag_coeff), ("max_angular_accel", self.max_angular_accel)]
        {
            require(x > 0.0 && x.is_finite(), name, || format!("must be finite and > 0, got {x}"))?;
        }
        Ok(())
    }

    pub fn speed_bound(&self) -> f64 {
        (self.max_accel / self.drag_coeff).sqrt()
    }
}

/// Vector part of the error quaternion toward `desired`.
pub fn attitude_error(current: &Quaternion, desired: &Quaternion) -> Vec3 {
    error_quaternion(current, desired).imag()
}

pub fn attitude_control(body: &VirtualBody, desired: &Quaternion, gains: &BodyGains) -> Vec3 {
    let q_e = attitude_error(&body.orientation, desired);
    let u = -gains.attitude_damping * body.angular_velocity - gains.attitude_gain * q_e;
    saturate(&u, gains.max_angular_accel)
}

/// Advance the body under fixed translational and rotational controls.
pub fn advance(body: &VirtualBody, u_trans: &Vec3, u_rot: &Vec3, gains: &BodyGains, dt: f64) -> VirtualBody {
    let state = AgentState { position: body.position, velocity: body.velocity };
    let next = rk4(&state, u_trans, gains.drag_coeff, dt);
    let omega = body.angular_velocity + u_rot * dt;
    let mean = (body.angular_velocity + omega) * 0.5;
    let q = body.orientation * Quaternion::from_scaled_axis(mean * dt);
    VirtualBody {
        position: next.position,
        velocity: next.velocity,
        acceleration: u_trans - drag(&next.velocity, gains.drag_coeff),
        orientation: Quaternion::new_normalize(q.into_inner()),
        angular_velocity: omega,
        angular_acceleration: *u_rot,
    }
}

/// Heading that points the local z axis at `target`, or the current one when too close.
pub fn heading_towards(body: &VirtualBody, target: &Vec3, gains: &BodyGains) -> Quaternion {
    if (target - body.position).norm() <= gains.hold_radius {
        return body.orientation;
    }
    orientation_towards(&body.position, target).unwrap_or(body.orientation)
}

/// Translational seeking law toward a point moving with velocity `target_velocity`.
pub fn seek_control(body: &VirtualBody, target: &Vec3, target_velocity: &Vec3, gains: &BodyGains) -> Vec3 {
    let u = -gains.position_gain * (body.position - target) - gains.damping_gain * (body.velocity - target_velocity);
    saturate(&u, gains.max_accel)
}

/// Heading along the attack line, from `anchor` toward the attackers.
///
/// With the anchor at the protected center the disk stays square to the
/// leader's pull, so a pressed swarm has no sideways force to slide along it.
pub fn attack_line_heading(body: &VirtualBody, anchor: &Vec3, attacker_center: &Vec3) -> Quaternion {
    orientation_towards(anchor, attacker_center).unwrap_or(body.orientation)
}

/// Seeking phase: approach the attacker center while turning to `heading`.
pub fn seeking_body_step(
    body: &VirtualBody,
    attacker_center: &Vec3,
    attacker_velocity: &Vec3,
    heading: &Quaternion,
    gains: &BodyGains,
    dt: f64,
) -> VirtualBody {
    let u_trans = seek_control(body, attacker_center, attacker_velocity, gains);
    let u_rot = attitude_control(body, heading, gains);
    advance(body, &u_trans, &u_rot, gains, dt)
}

/// Move to a fixed point while holding a fixed attitude.
pub fn hold_body_step(body: &VirtualBody, center: &Vec3, attitude: &Quaternion, gains: &BodyGains, dt: f64) -> VirtualBody {
    let u_trans = seek_control(body, center, &Vec3::zeros(), gains);
    let u_rot = attitude_control(body, attitude, gains);
    advance(body, &u_trans, &u_rot, gains, dt)
}

/// Commanded herding velocity toward the safe area.
///
/// When the straight line to the safe area would bring the net within the
/// keep-out ball around the protected area, the inward component is dropped
/// so the body slides around the ball instead.
pub fn herding_velocity(position: &Vec3, areas: &Areas, formation_radius: f64, speed_cap: f64, gains: &BodyGains) -> Vec3 {
    let to_safe = areas.safe() - position;
    let d = to_safe.norm();
    if d + formation_radius <= areas.safe_radius || d == 0.0 {
        return Vec3::zeros();
    }
    let speed = speed_cap.min(gains.herding_gain * d);
    let mut dir = to_safe / d;
    let keep = areas.protected_radius + formation_radius + gains.keep_out_margin;
    let rel = position - areas.protected();
    let dist = rel.norm();
    if dist > 0.0 {
        let out = rel / dist;
        let inward = -dir.dot(&out);
        let s = (-rel.dot(&dir)).clamp(0.0, d);
        let blocked = (rel + dir * s).norm() < keep;
        if inward > 0.0 && blocked {
            dir += out * inward;
            if dist < keep {
                dir += out * ((keep - dist) / keep);
            }
            let n = dir.norm();
            dir = if n > 1e-12 { dir / n } else { out };
        }
    }
    dir * speed
}

/// Herding phase: carry the closed net to the safe area with the attitude held.
pub fn herding_body_step(
    body: &VirtualBody,
    areas: &Areas,
    formation_radius: f64,
    speed_cap: f64,
    attitude: &Quaternion,
    gains: &BodyGains,
    dt: f64,
) -> VirtualBody {
    let v_des = herding_velocity(&body.position, areas, formation_radius, speed_cap, gains);
    let u = drag(&body.velocity, gains.drag_coeff) + gains.herding_velocity_gain * (v_des - body.velocity);
    let u_trans = saturate(&u, gains.max_accel);
    let u_rot = attitude_control(body, attitude, gains);
    advance(body, &u_trans, &u_rot, gains, dt)
}

/// Formation point `l` riding the body, with its world-frame derivatives.
///
/// `local`, `local_velocity` and `local_acceleration` describe a point that may
/// itself move in the body frame.
pub fn desired_reference(body: &VirtualBody, local: &Vec3, local_velocity: &Vec3, local_acceleration: &Vec3) -> Reference {
    let q = &body.orientation;
    let lever = q * local;
    let w = body.world_angular_velocity();
    let dw = body.world_angular_acceleration();
    let drift = q * local_velocity;
    Reference {
        position: body.position + lever,
        velocity: body.velocity + w.cross(&lever) + drift,
        acceleration: body.acceleration
            + dw.cross(&lever)
            + w.cross(&w.cross(&lever))
            + 2.0 * w.cross(&drift)
            + q * local_acceleration,
    }
}

/// Desired position, velocity and acceleration of every point of a rigid formation.
pub fn desired_positions(body: &VirtualBody, relative: &[Vec3]) -> Vec<Reference> {
    let zero = Vec3::zeros();
    relative.iter().map(|l| desired_reference(body, l, &zero, &zero)).collect()
}
