//! Phase logic of the defenders.

use serde::{Deserialize, Serialize};

use crate::dominance::{min_attack_radius, DominanceParams};
use crate::dynamics::{Areas, Vec3};
use crate::error::{require, Error, Result};
use crate::formation::SphericalPoint;
use crate::transforms::Quaternion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Gathering,
    Seeking,
    EnclosingHemisphere,
    EnclosingSphere,
    Herding,
    Done,
}

impl Phase {
    pub const ALL: [Phase; 6] =
        [Phase::Gathering, Phase::Seeking, Phase::EnclosingHemisphere, Phase::EnclosingSphere, Phase::Herding, Phase::Done];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Gathering => "gathering",
            Phase::Seeking => "seeking",
            Phase::EnclosingHemisphere => "enclosing_hemisphere",
            Phase::EnclosingSphere => "enclosing_sphere",
            Phase::Herding => "herding",
            Phase::Done => "done",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Seeking ends once the body is this close to the attacker center.
    pub eps1: f64,
    /// ... and the attitude error norm is below this.
    pub eps2: f64,
    /// Tracking error bound of the defenders.
    pub b_d: f64,
    /// Time to establish the nets after gathering.
    pub gather_margin: f64,
    /// Duration of each enclosing morph.
    pub morph_time: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { eps1: 5.0, eps2: 0.05, b_d: 2.0, gather_margin: 5.0, morph_time: 8.0 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("eps1", self.eps1), ("eps2", self.eps2), ("b_d", self.b_d)] {
            require(x > 0.0 && x.is_finite(), name, || format!("must be finite and > 0, got {x}"))?;
        }
        for (name, x) in [("gather_margin", self.gather_margin), ("morph_time", self.morph_time)] {
            require(x >= 0.0 && x.is_finite(), name, || format!("must be finite and >= 0, got {x}"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub phase: Phase,
    /// Goal index of every defender.
    pub assignment: Vec<usize>,
    pub entered_at: f64,
    pub gathered_at: Option<f64>,
    pub nets_at: Option<f64>,
    /// Body target and attitude frozen when enclosing starts.
    pub enclosing_center: Option<Vec3>,
    pub enclosing_attitude: Option<Quaternion>,
    /// Entry time of every phase reached so far.
    pub history: Vec<(Phase, f64)>,
}

impl PhaseState {
    pub fn new(assignment: Vec<usize>, t: f64) -> Self {
        Self {
            phase: Phase::Gathering,
            assignment,
            entered_at: t,
            gathered_at: None,
            nets_at: None,
            enclosing_center: None,
            enclosing_attitude: None,
            history: vec![(Phase::Gathering, t)],
        }
    }

    pub fn nets_established(&self, t: f64) -> bool {
        self.nets_at.is_some_and(|n| t >= n)
    }

    fn enter(&mut self, phase: Phase, t: f64) {
        self.phase = phase;
        self.entered_at = t;
        self.history.push((phase, t));
    }
}

/// What the phase logic needs to know about the world at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// Largest distance of a defender from its current goal.
    pub max_goal_error: f64,
    pub attacker_count: usize,
    pub attacker_center: Vec3,
    pub body_position: Vec3,
    pub body_orientation: Quaternion,
    /// Norm of the vector part of the error toward the seeking attitude.
    pub attitude_error: f64,
    pub attackers_safe: bool,
}

pub fn phase_transition(current: &PhaseState, world: &Snapshot, th: &Thresholds) -> PhaseState {
    let mut next = current.clone();
    let t = world.t;
    let settled = world.max_goal_error < th.b_d;
    let morphed = t - current.entered_at >= th.morph_time;
    match current.phase {
        Phase::Gathering => {
            if next.gathered_at.is_none() && settled {
                next.gathered_at = Some(t);
                next.nets_at = Some(t + th.gather_margin);
            }
            if next.nets_established(t) && world.attacker_count > 0 {
                next.enter(Phase::Seeking, t);
            }
        }
        Phase::Seeking => {
            let close = (world.body_position - world.attacker_center).norm() < th.eps1;
            if close && world.attitude_error < th.eps2 {
                next.enclosing_center = Some(world.attacker_center);
                next.enclosing_attitude = Some(world.body_orientation);
                next.enter(Phase::EnclosingHemisphere, t);
            }
        }
        Phase::EnclosingHemisphere if morphed && settled => next.enter(Phase::EnclosingSphere, t),
        Phase::EnclosingSphere if morphed && settled => next.enter(Phase::Herding, t),
        Phase::Herding if world.attackers_safe => next.enter(Phase::Done, t),
        _ => {}
    }
    next
}

/// Gathering point on the segment from the protected center to the attackers,
/// at the radius that minimizes the required attacker start distance.
pub fn gathering_center(
    defenders: &[Vec3],
    attacker_center: &Vec3,
    areas: &Areas,
    params: &DominanceParams,
) -> Result<Vec3> {
    let origin = areas.protected();
    let ray = attacker_center - origin;
    let distance = ray.norm();
    let lo = params.protected_radius;
    let hi = distance - params.max_swarm_radius;
    if !(hi > lo) {
        return Err(Error::InfeasibleGathering { distance });
    }
    let dir = SphericalPoint::from_cartesian(&ray);
    let rel: Vec<Vec3> = defenders.iter().map(|d| d - origin).collect();
    let best = min_attack_radius((dir.polar, dir.azimuth), &rel, params)?;
    let pad = 1e-6 * (hi - lo);
    let r = best.r_opt.clamp(lo + pad, hi - pad);
    Ok(origin + ray * (r / distance))
}
