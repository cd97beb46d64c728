//! Leader-follower potential-field model of the adversarial swarm.

use serde::{Deserialize, Serialize};

use crate::dynamics::{saturate, AgentParams, AgentState, Areas, Vec3};
use crate::error::{require, Result};
use crate::net::{point_triangle_closest, segment_crossing, StringNetGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerGains {
    /// Leader spring toward the protected area.
    pub goal: f64,
    /// Follower spring toward the leader.
    pub follow: f64,
    pub velocity_match: f64,
    pub cohesion: f64,
    pub separation: f64,
    /// Inter-agent repulsion is active below this distance.
    pub separation_radius: f64,
    pub barrier: f64,
    /// Gain on the deceleration needed to stop before the clearance.
    pub barrier_brake: f64,
}

impl Default for AttackerGains {
    fn default() -> Self {
        Self {
            goal: 1.0,
            follow: 0.6,
            velocity_match: 1.2,
            cohesion: 0.1,
            separation: 20.0,
            separation_radius: 8.0,
            barrier: 20.0,
            barrier_brake: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSwarmParams {
    pub connectivity_radius: f64,
    pub max_connectivity_radius: f64,
    #[serde(default)]
    pub leader_index: usize,
    /// Barrier faces closer than this are sensed.
    pub sensing_radius: f64,
    #[serde(default)]
    pub gains: AttackerGains,
    /// Barriers stop attackers outright instead of only repelling them.
    #[serde(default)]
    pub impenetrable: bool,
}

impl AttackerSwarmParams {
    pub fn validate(&self, count: usize) -> Result<()> {
        require(self.connectivity_radius > 0.0, "connectivity_radius", || "must be > 0".into())?;
        require(self.connectivity_radius <= self.max_connectivity_radius, "max_connectivity_radius", || {
            "must be >= connectivity_radius".into()
        })?;
        require(count == 0 || self.leader_index < count, "leader_index", || format!("out of range for {count} attackers"))?;
        require(self.sensing_radius > 0.0, "sensing_radius", || "must be > 0".into())?;
        let g = &self.gains;
        let all = [g.goal, g.follow, g.velocity_match, g.cohesion, g.separation, g.separation_radius, g.barrier, g.barrier_brake];
        require(all.iter().all(|x| *x >= 0.0 && x.is_finite()), "gains", || "must be finite and >= 0".into())
    }
}

/// A net as seen by an attacker: topology plus current vertex positions and velocities.
#[derive(Debug, Clone, Copy)]
pub struct SensedNet<'a> {
    pub net: &'a StringNetGraph,
    pub positions: &'a [Vec3],
    pub velocities: &'a [Vec3],
}

pub fn swarm_center(states: &[AgentState]) -> Vec3 {
    assert!(!states.is_empty(), "swarm_center needs at least one attacker");
    states.iter().map(|s| s.position).sum::<Vec3>() / states.len() as f64
}

pub fn swarm_velocity(states: &[AgentState]) -> Vec3 {
    assert!(!states.is_empty(), "swarm_velocity needs at least one attacker");
    states.iter().map(|s| s.velocity).sum::<Vec3>() / states.len() as f64
}

pub fn swarm_radius(states: &[AgentState]) -> f64 {
    let c = swarm_center(states);
    states.iter().map(|s| (s.position - c).norm()).fold(0.0, f64::max)
}

/// Gradient of `k / (d - d_min)` shifted to vanish at `cutoff`, as a repulsive magnitude.
fn repulsion(k: f64, d: f64, d_min: f64, cutoff: f64) -> f64 {
    if d >= cutoff {
        return 0.0;
    }
    let floor = 1e-2 * (cutoff - d_min).max(1e-6);
    let m = (d - d_min).max(floor);
    k * (1.0 / (m * m) - 1.0 / ((cutoff - d_min) * (cutoff - d_min)))
}

fn barrier_term(state: &AgentState, nets: &[SensedNet], sensing: f64, clearance: f64, gains: &AttackerGains) -> Vec3 {
    let mut u = Vec3::zeros();
    let p = state.position;
    for sn in nets {
        for f in sn.net.faces() {
            let (a, b, c) = (sn.positions[f[0]], sn.positions[f[1]], sn.positions[f[2]]);
            let q = point_triangle_closest(&p, &a, &b, &c);
            let off = p - q;
            let d = off.norm();
            if d >= sensing {
                continue;
            }
            let n = if d > 1e-12 {
                off / d
            } else {
                let n = (b - a).cross(&(c - a));
                n / n.norm().max(1e-300)
            };
            u += n * repulsion(gains.barrier, d, clearance, sensing);
            let face_v = (sn.velocities[f[0]] + sn.velocities[f[1]] + sn.velocities[f[2]]) / 3.0;
            let closing = -(state.velocity - face_v).dot(&n);
            if closing > 0.0 {
                let margin = (d - clearance).max(1e-2);
                u += n * (gains.barrier_brake * closing * closing / (2.0 * margin));
            }
        }
    }
    u
}

/// Unsaturated control of attacker `i`; the caller saturates it to the attacker's limit.
pub fn attacker_control(
    i: usize,
    states: &[AgentState],
    nets: &[SensedNet],
    params: &AttackerSwarmParams,
    agent: &AgentParams,
    areas: &Areas,
) -> Vec3 {
    let g = &params.gains;
    let me = &states[i];
    let barrier = barrier_term(me, nets, params.sensing_radius, agent.radius, g);
    let leader = &states[params.leader_index];
    if i == params.leader_index {
        return saturate(&(g.goal * (areas.protected() - me.position)), agent.max_accel) + barrier;
    }
    let follow = saturate(&(g.follow * (leader.position - me.position)), agent.max_accel);
    let matching = g.velocity_match * (leader.velocity - me.velocity);
    let cohesion = g.cohesion * (swarm_center(states) - me.position);
    let mut separation = Vec3::zeros();
    for (j, other) in states.iter().enumerate() {
        if j == i {
            continue;
        }
        let off = me.position - other.position;
        let d = off.norm();
        if d > 1e-12 {
            separation += off / d * repulsion(g.separation, d, 2.0 * agent.radius, g.separation_radius);
        }
    }
    follow + matching + cohesion + separation + barrier
}

/// Pushes an attacker back to its previous position if its step crossed a barrier,
/// removing the velocity component into the face.
pub fn enforce_impenetrable(old: &AgentState, new: &mut AgentState, nets: &[SensedNet]) -> bool {
    for sn in nets {
        if let Some((face, _)) = segment_crossing(&old.position, &new.position, sn.net, sn.positions) {
            let [a, b, c] = sn.net.triangle(face, sn.positions);
            let n = (b - a).cross(&(c - a)).normalize();
            let side = (old.position - a).dot(&n).signum();
            let n = n * side;
            new.position = old.position;
            let into = new.velocity.dot(&n);
            if into < 0.0 {
                new.velocity -= n * into;
            }
            return true;
        }
    }
    false
}
