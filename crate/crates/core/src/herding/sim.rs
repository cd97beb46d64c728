//! Fixed-step co-simulation of attackers, defenders, virtual body and phase logic.

use std::fmt::Write as _;

use serde::Serialize;

use crate::attackers::{attacker_control, enforce_impenetrable, swarm_center, swarm_velocity, SensedNet};
use crate::dominance::DominanceParams;
use crate::dynamics::{saturate, step_agent, AgentState, Vec3};
use crate::error::{Error, Result};
use crate::formation::{min_radius, solve_uniform_sphere};
use crate::herding::assign::assign_goals;
use crate::herding::body::{
    attack_line_heading, attitude_error, desired_reference, herding_body_step, hold_body_step, seeking_body_step,
    VirtualBody,
};
use crate::herding::fsm::{gathering_center, phase_transition, Phase, PhaseState, Snapshot};
use crate::herding::tracking::{track_goal, Reference};
use crate::net::{check_edge_limit, contains, point_mesh_distance, StringNetGraph};
use crate::scenario::ScenarioConfig;
use crate::transforms::{orientation_towards, FormationFamily, Quaternion};

const THOMSON_TOL: f64 = 1e-6;

/// Formation family and derived parameters shared by every run of a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub family: FormationFamily,
    pub rho_sn: f64,
    pub dominance: DominanceParams,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    cfg.validate()?;
    let f = &cfg.formation;
    let b_d = cfg.strategy.thresholds.b_d;
    let rho_sn = min_radius(f.swarm_radius, f.max_edge, b_d);
    let n = cfg.defenders.initial_positions.len();
    let sphere = solve_uniform_sphere(n, rho_sn, cfg.seed, THOMSON_TOL)?;
    let design = f.max_edge - 2.0 * b_d;
    if sphere.max_edge_length() >= design {
        return Err(Error::Config(format!(
            "defenders.initial_positions: {n} defenders on a sphere of radius {rho_sn:.3} leave edges of {:.3}, \
             not below {design:.3} (formation.max_edge minus twice the tracking bound)",
            sphere.max_edge_length()
        )));
    }
    let mut family = FormationFamily::build(&sphere, design, f.planar_scale)?;
    for form in [&mut family.spherical, &mut family.hemispherical, &mut family.planar] {
        form.mesh = form.mesh.clone().with_max_edge(f.max_edge);
    }
    let s = &cfg.strategy;
    let clearance = s.gathering_clearance.unwrap_or(rho_sn + 2.0 * b_d);
    let dominance = DominanceParams {
        delta: s.soft_max_delta,
        gather_margin: s.thresholds.gather_margin,
        planar_radius: family.planar.extent(),
        max_swarm_radius: f.max_swarm_radius,
        attacker_speed: cfg.attackers.params.speed_bound(),
        defender_accel: cfg.defenders.params.max_accel,
        drag_coeff: cfg.defenders.params.drag_coeff,
        protected_radius: cfg.areas.protected_radius + clearance,
    };
    dominance.validate()?;
    Ok(Prepared { family, rho_sn, dominance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Defender,
    Attacker,
    Body,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Defender => "defender",
            AgentKind::Attacker => "attacker",
            AgentKind::Body => "body",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub agent_id: usize,
    pub kind: AgentKind,
    pub position: Vec3,
    pub velocity: Vec3,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    None,
    Open,
    Closed,
}

/// A change of phase together with the net the attackers sense from then on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseEvent {
    pub t: f64,
    pub phase: Phase,
    pub net: NetKind,
    pub faces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMetrics {
    pub phase: Phase,
    pub entered_at: f64,
    pub duration: f64,
    /// Largest defender tracking error over the whole phase.
    pub max_tracking_error: f64,
    /// Largest tracking error once the phase transient has passed.
    pub max_steady_tracking_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub herding_success: bool,
    pub breach: bool,
    pub final_phase: Phase,
    /// Every phase was entered, in order, without skipping.
    pub phases_in_order: bool,
    pub steps: usize,
    pub sim_time: f64,
    pub defender_count: usize,
    pub attacker_count: usize,
    pub formation_radius: f64,
    pub planar_scale: f64,
    pub gathering_feasible: bool,
    pub gathering_center: [f64; 3],
    pub gathered_at: Option<f64>,
    pub nets_at: Option<f64>,
    /// First time the swarm center came within the maximum swarm radius of the gathering center.
    pub attacker_arrival: Option<f64>,
    pub gather_margin_met: bool,
    pub phases: Vec<PhaseMetrics>,
    pub events: Vec<PhaseEvent>,
    /// Smallest attacker-to-net distance while a net was up.
    pub min_barrier_clearance: Option<f64>,
    pub max_net_edge: f64,
    pub edge_limit_violation_steps: usize,
    pub containment_checked_steps: usize,
    pub containment_violation_steps: usize,
    pub max_steady_tracking_error: f64,
    pub attackers_in_safe: usize,
    pub max_body_speed_herding: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub metrics: Metrics,
    pub trajectory: Vec<TrajectoryRow>,
}

impl SimulationResult {
    pub fn trajectory_csv(&self) -> String {
        trajectory_csv(&self.trajectory)
    }
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("t,agent_id,kind,x,y,z,vx,vy,vz,phase\n");
    for r in rows {
        let (p, v) = (r.position, r.velocity);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.agent_id,
            r.kind.name(),
            p.x,
            p.y,
            p.z,
            v.x,
            v.y,
            v.z,
            r.phase.name()
        );
    }
    out
}

/// Quintic smoothstep on `s` in `[0, 1]` with its first two derivatives in `s`.
fn smoothstep(s: f64) -> (f64, f64, f64) {
    let s = s.clamp(0.0, 1.0);
    let w = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let dw = 30.0 * s * s * (1.0 - s) * (1.0 - s);
    let ddw = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    (w, dw, ddw)
}

struct Goals {
    refs: Vec<Reference>,
    net: NetKind,
}

fn formation_goals(fam: &FormationFamily, state: &PhaseState, body: &VirtualBody, t: f64, morph_time: f64) -> Goals {
    let zero = Vec3::zeros();
    let rigid = |pts: &[Vec3]| pts.iter().map(|l| desired_reference(body, l, &zero, &zero)).collect::<Vec<_>>();
    let morph = || {
        if morph_time <= 0.0 {
            (1.0, 0.0, 0.0)
        } else {
            let (w, dw, ddw) = smoothstep((t - state.entered_at) / morph_time);
            (w, dw / morph_time, ddw / (morph_time * morph_time))
        }
    };
    match state.phase {
        Phase::Gathering => Goals { refs: rigid(&fam.planar.relative_positions), net: NetKind::None },
        Phase::Seeking => Goals { refs: rigid(&fam.planar.relative_positions), net: NetKind::Open },
        Phase::EnclosingHemisphere => {
            let (w, wd, wdd) = morph();
            let refs = fam
                .planar
                .relative_positions
                .iter()
                .zip(&fam.hemispherical.relative_positions)
                .map(|(p, h)| {
                    let d = h - p;
                    desired_reference(body, &(p + d * w), &(d * wd), &(d * wdd))
                })
                .collect();
            Goals { refs, net: NetKind::Open }
        }
        Phase::EnclosingSphere => {
            let (w, wd, wdd) = morph();
            let pts = fam.hemisphere_to_sphere(w);
            let (d1, d2) = fam.hemisphere_to_sphere_rates(w);
            let refs = (0..pts.len())
                .map(|i| desired_reference(body, &pts[i], &(d1[i] * wd), &(d2[i] * wd * wd + d1[i] * wdd)))
                .collect();
            Goals { refs, net: NetKind::Open }
        }
        Phase::Herding | Phase::Done => Goals { refs: rigid(&fam.spherical.relative_positions), net: NetKind::Closed },
    }
}

struct PhaseTracker {
    metrics: Vec<PhaseMetrics>,
}

impl PhaseTracker {
    fn record(&mut self, phase: Phase, entered_at: f64, err: f64, steady: bool) {
        if self.metrics.last().is_none_or(|m| m.phase != phase) {
            self.metrics.push(PhaseMetrics {
                phase,
                entered_at,
                duration: 0.0,
                max_tracking_error: 0.0,
                max_steady_tracking_error: 0.0,
            });
        }
        let m = self.metrics.last_mut().expect("pushed above");
        m.max_tracking_error = m.max_tracking_error.max(err);
        if steady {
            m.max_steady_tracking_error = m.max_steady_tracking_error.max(err);
        }
    }
}

fn log_rows(
    rows: &mut Vec<TrajectoryRow>,
    t: f64,
    phase: Phase,
    defenders: &[AgentState],
    attackers: &[AgentState],
    body: &VirtualBody,
) {
    for (kind, list) in [(AgentKind::Defender, defenders), (AgentKind::Attacker, attackers)] {
        for (i, s) in list.iter().enumerate() {
            rows.push(TrajectoryRow { t, agent_id: i, kind, position: s.position, velocity: s.velocity, phase });
        }
    }
    rows.push(TrajectoryRow { t, agent_id: 0, kind: AgentKind::Body, position: body.position, velocity: body.velocity, phase });
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<SimulationResult> {
    let prepared = prepare(cfg)?;
    simulate_prepared(cfg, &prepared)
}

/// Runs a scenario whose formation was prepared beforehand (with [`prepare`] on the same team).
pub fn simulate_prepared(cfg: &ScenarioConfig, prep: &Prepared) -> Result<SimulationResult> {
    cfg.validate()?;
    let fam = &prep.family;
    let th = cfg.strategy.thresholds;
    let areas = cfg.areas;
    let dt = cfg.integration.dt;
    let d_params = cfg.defenders.params;
    let a_params = cfg.attackers.params;
    let swarm = cfg.attackers.swarm;
    let herd_speed = cfg.strategy.herd_speed_ratio * a_params.speed_bound();

    let mut defenders: Vec<AgentState> = cfg.defender_positions().into_iter().map(AgentState::at_rest).collect();
    let mut attackers: Vec<AgentState> = cfg.attacker_positions().into_iter().map(AgentState::at_rest).collect();
    let n_d = defenders.len();
    let n_a = attackers.len();
    if fam.len() != n_d {
        return Err(Error::Config(format!("prepared formation has {} vertices for {n_d} defenders", fam.len())));
    }

    let origin = areas.protected();
    let start_positions: Vec<Vec3> = defenders.iter().map(|s| s.position).collect();
    let (center, gathering_feasible, heading) = if n_a > 0 {
        let r_ac = swarm_center(&attackers);
        let (c, ok) = match gathering_center(&start_positions, &r_ac, &areas, &prep.dominance) {
            Ok(c) => (c, true),
            Err(Error::InfeasibleGathering { .. }) => {
                (origin + (r_ac - origin).normalize() * prep.dominance.protected_radius, false)
            }
            Err(e) => return Err(e),
        };
        (c, ok, orientation_towards(&c, &r_ac)?)
    } else {
        let mean = start_positions.iter().sum::<Vec3>() / n_d as f64 - origin;
        let dir = if mean.norm() > 1e-9 { mean.normalize() } else { Vec3::x() };
        let c = origin + dir * prep.dominance.protected_radius;
        (c, true, orientation_towards(&origin, &c)?)
    };
    let mut body = VirtualBody::at_rest(center, heading);
    let goals0: Vec<Vec3> = fam.planar.relative_positions.iter().map(|l| center + heading * l).collect();
    let mut state = PhaseState::new(assign_goals(&start_positions, &goals0), 0.0);

    let open = &fam.hemispherical.mesh;
    let closed = &fam.spherical.mesh;
    let mut events = vec![PhaseEvent { t: 0.0, phase: Phase::Gathering, net: NetKind::None, faces: 0 }];
    let mut tracker = PhaseTracker { metrics: Vec::new() };
    let mut rows = Vec::new();
    let mut breach = false;
    let mut arrival = None;
    let mut min_clearance: Option<f64> = None;
    let mut max_edge = 0.0f64;
    let mut c1_violations = 0;
    let mut contain_checked = 0;
    let mut contain_violations = 0;
    let mut max_herd_speed = 0.0f64;
    let mut hold: Option<(Vec3, Quaternion)> = None;

    let max_steps = (cfg.integration.time_cap / dt).ceil() as usize;
    let mut k = 0usize;
    let mut t = 0.0;
    loop {
        let mut goals = formation_goals(fam, &state, &body, t, th.morph_time);
        let errors: Vec<f64> =
            defenders.iter().zip(&state.assignment).map(|(s, &g)| (s.position - goals.refs[g].position).norm()).collect();
        let max_err = errors.iter().copied().fold(0.0, f64::max);
        let steady = match state.phase {
            Phase::Gathering => state.gathered_at.is_some(),
            _ => t - state.entered_at >= cfg.strategy.transient_time,
        };
        tracker.record(state.phase, state.entered_at, max_err, steady);

        let mut vertex_pos = vec![Vec3::zeros(); n_d];
        let mut vertex_vel = vec![Vec3::zeros(); n_d];
        for (j, s) in defenders.iter().enumerate() {
            vertex_pos[state.assignment[j]] = s.position;
            vertex_vel[state.assignment[j]] = s.velocity;
        }
        let active: Option<&StringNetGraph> = match goals.net {
            NetKind::None => None,
            NetKind::Open => Some(open),
            NetKind::Closed => Some(closed),
        };
        if let Some(net) = active {
            let report = check_edge_limit(net, &vertex_pos);
            max_edge = max_edge.max(report.max_edge);
            if !report.pass {
                c1_violations += 1;
            }
            for a in &attackers {
                if let Some(d) = point_mesh_distance(&a.position, net, &vertex_pos) {
                    min_clearance = Some(min_clearance.map_or(d.distance, |m| m.min(d.distance)));
                }
            }
            if net.is_closed() {
                contain_checked += 1;
                let mut inside = true;
                for a in &attackers {
                    inside &= contains(&a.position, net, &vertex_pos)?;
                }
                if !inside {
                    contain_violations += 1;
                }
            }
        }
        if matches!(state.phase, Phase::Herding) {
            max_herd_speed = max_herd_speed.max(body.velocity.norm());
        }

        let (r_ac, v_ac) =
            if n_a > 0 { (swarm_center(&attackers), swarm_velocity(&attackers)) } else { (center, Vec3::zeros()) };
        if n_a > 0 && arrival.is_none() && (r_ac - center).norm() <= cfg.formation.max_swarm_radius {
            arrival = Some(t);
        }
        if attackers.iter().any(|a| areas.in_protected(&a.position)) {
            breach = true;
        }

        let desired = attack_line_heading(&body, &origin, &r_ac);
        let snap = Snapshot {
            t,
            max_goal_error: max_err,
            attacker_count: n_a,
            attacker_center: r_ac,
            body_position: body.position,
            body_orientation: body.orientation,
            attitude_error: attitude_error(&body.orientation, &desired).norm(),
            attackers_safe: attackers.iter().all(|a| areas.in_safe(&a.position)),
        };
        let next = phase_transition(&state, &snap, &th);
        if next.phase != state.phase {
            state = next;
            if state.phase == Phase::EnclosingHemisphere {
                hold = Some((
                    state.enclosing_center.expect("set on entry"),
                    state.enclosing_attitude.expect("set on entry"),
                ));
            }
            goals = formation_goals(fam, &state, &body, t, th.morph_time);
            let faces = match goals.net {
                NetKind::None => 0,
                NetKind::Open => open.faces().len(),
                NetKind::Closed => closed.faces().len(),
            };
            events.push(PhaseEvent { t, phase: state.phase, net: goals.net, faces });
        } else {
            state = next;
        }

        let last = breach || state.phase == Phase::Done || k >= max_steps;
        if cfg.integration.log_every > 0 && (k % cfg.integration.log_every == 0 || last) {
            log_rows(&mut rows, t, state.phase, &defenders, &attackers, &body);
        }
        if last {
            break;
        }

        // controls from one snapshot, then advance everything
        let u_d = defenders
            .iter()
            .zip(&state.assignment)
            .map(|(s, &g)| track_goal(s, &goals.refs[g], &d_params, &cfg.tracking))
            .collect::<Result<Vec<_>>>()?;
        let sensed: Vec<SensedNet> = match goals.net {
            NetKind::None => Vec::new(),
            NetKind::Open => vec![SensedNet { net: open, positions: &vertex_pos, velocities: &vertex_vel }],
            NetKind::Closed => vec![SensedNet { net: closed, positions: &vertex_pos, velocities: &vertex_vel }],
        };
        let u_a: Vec<Vec3> = (0..n_a)
            .map(|i| saturate(&attacker_control(i, &attackers, &sensed, &swarm, &a_params, &areas), a_params.max_accel))
            .collect();

        body = match state.phase {
            Phase::Gathering => body,
            Phase::Seeking => seeking_body_step(&body, &r_ac, &v_ac, &desired, &cfg.body, dt),
            Phase::EnclosingHemisphere | Phase::EnclosingSphere => {
                let (c, q) = hold.expect("enclosing hold set");
                hold_body_step(&body, &c, &q, &cfg.body, dt)
            }
            Phase::Herding | Phase::Done => {
                let (_, q) = hold.expect("enclosing hold set");
                herding_body_step(&body, &areas, prep.rho_sn, herd_speed, &q, &cfg.body, dt)
            }
        };
        for (s, u) in defenders.iter_mut().zip(&u_d) {
            *s = step_agent(s, u, &d_params, dt)?;
        }
        let before = attackers.clone();
        for (s, u) in attackers.iter_mut().zip(&u_a) {
            *s = step_agent(s, u, &a_params, dt)?;
        }
        if swarm.impenetrable && !sensed.is_empty() {
            let mut moved_pos = vec![Vec3::zeros(); n_d];
            for (j, s) in defenders.iter().enumerate() {
                moved_pos[state.assignment[j]] = s.position;
            }
            let nets = [SensedNet { net: sensed[0].net, positions: &moved_pos, velocities: &vertex_vel }];
            for (old, new) in before.iter().zip(attackers.iter_mut()) {
                enforce_impenetrable(old, new, &nets);
            }
        }
        if !body.is_finite() || !defenders.iter().chain(&attackers).all(AgentState::is_finite) {
            return Err(Error::NonFinite("simulation state"));
        }
        k += 1;
        t = k as f64 * dt;
    }

    let mut phases = tracker.metrics;
    for i in 0..phases.len() {
        let end = phases.get(i + 1).map_or(t, |m| m.entered_at);
        phases[i].duration = end - phases[i].entered_at;
    }
    let reached: Vec<Phase> = state.history.iter().map(|(p, _)| *p).collect();
    let phases_in_order = reached.iter().enumerate().all(|(i, p)| *p == Phase::ALL[i]);
    let max_steady = phases.iter().map(|m| m.max_steady_tracking_error).fold(0.0, f64::max);
    let in_safe = attackers.iter().filter(|a| areas.in_safe(&a.position)).count();
    let gather_margin_met = match (state.nets_at, arrival) {
        (Some(n), Some(a)) => a >= n,
        (Some(_), None) => true,
        (None, _) => false,
    };
    let metrics = Metrics {
        herding_success: !breach && (n_a == 0 || state.phase == Phase::Done),
        breach,
        final_phase: state.phase,
        phases_in_order,
        steps: k,
        sim_time: t,
        defender_count: n_d,
        attacker_count: n_a,
        formation_radius: prep.rho_sn,
        planar_scale: fam.k_pl,
        gathering_feasible,
        gathering_center: center.into(),
        gathered_at: state.gathered_at,
        nets_at: state.nets_at,
        attacker_arrival: arrival,
        gather_margin_met,
        phases,
        events,
        min_barrier_clearance: min_clearance,
        max_net_edge: max_edge,
        edge_limit_violation_steps: c1_violations,
        containment_checked_steps: contain_checked,
        containment_violation_steps: contain_violations,
        max_steady_tracking_error: max_steady,
        attackers_in_safe: in_safe,
        max_body_speed_herding: max_herd_speed,
    };
    Ok(SimulationResult { metrics, trajectory: rows })
}
