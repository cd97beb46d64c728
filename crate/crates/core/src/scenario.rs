//! Scenario documents: everything a simulation run needs, in one JSON file.

use serde::{Deserialize, Serialize};

use crate::attackers::{AttackerGains, AttackerSwarmParams};
use crate::dynamics::{AgentParams, Areas, Vec3, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::herding::body::BodyGains;
use crate::herding::fsm::Thresholds;
use crate::herding::tracking::TrackingGains;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenderConfig {
    pub params: AgentParams,
    pub initial_positions: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerConfig {
    pub params: AgentParams,
    pub swarm: AttackerSwarmParams,
    pub initial_positions: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationConfig {
    /// Radius of the attacker swarm the sphere must swallow.
    pub swarm_radius: f64,
    /// Upper bound on the swarm radius while it travels.
    pub max_swarm_radius: f64,
    /// Longest admissible string barrier.
    pub max_edge: f64,
    /// Fixed planar scale; `null` picks the largest admissible one.
    #[serde(default)]
    pub planar_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub thresholds: Thresholds,
    /// Herding speed as a share of the attackers' speed bound.
    pub herd_speed_ratio: f64,
    /// Order of the soft max used for the gathering radius.
    pub soft_max_delta: f64,
    /// Tracking errors are ignored this long after each phase change.
    pub transient_time: f64,
    /// Keep-out distance added to the protected radius when gathering;
    /// `null` uses the sphere radius plus twice the tracking bound.
    #[serde(default)]
    pub gathering_clearance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub time_cap: f64,
    /// Trajectory rows are written every this many steps; 0 disables logging.
    pub log_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub seed: u64,
    pub areas: Areas,
    pub defenders: DefenderConfig,
    pub attackers: AttackerConfig,
    pub formation: FormationConfig,
    pub strategy: StrategyConfig,
    pub body: BodyGains,
    pub tracking: TrackingGains,
    pub integration: IntegrationConfig,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be finite and > 0, got {x}")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization; parsing it back and re-serializing is byte-identical.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn defender_positions(&self) -> Vec<Vec3> {
        self.defenders.initial_positions.iter().map(|p| Vec3::from(*p)).collect()
    }

    pub fn attacker_positions(&self) -> Vec<Vec3> {
        self.attackers.initial_positions.iter().map(|p| Vec3::from(*p)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(bad("version", format!("unsupported version {}, expected {CONFIG_VERSION}", self.version)));
        }
        self.areas.validate().map_err(|e| bad("areas", e))?;
        self.defenders.params.validate().map_err(|e| bad("defenders.params", e))?;
        self.attackers.params.validate().map_err(|e| bad("attackers.params", e))?;
        let n_att = self.attackers.initial_positions.len();
        self.attackers.swarm.validate(n_att).map_err(|e| bad("attackers.swarm", e))?;
        if self.defenders.initial_positions.len() < 4 {
            return Err(bad("defenders.initial_positions", "at least 4 defenders are needed"));
        }
        for (field, list) in
            [("defenders.initial_positions", &self.defenders.initial_positions), ("attackers.initial_positions", &self.attackers.initial_positions)]
        {
            for (i, p) in list.iter().enumerate() {
                if !p.iter().all(|x| x.is_finite()) {
                    return Err(bad(field, format!("entry {i} is not finite")));
                }
                if self.areas.in_protected(&Vec3::from(*p)) {
                    return Err(bad(field, format!("entry {i} starts inside the protected area")));
                }
            }
        }
        let f = &self.formation;
        positive("formation.swarm_radius", f.swarm_radius)?;
        positive("formation.max_swarm_radius", f.max_swarm_radius)?;
        positive("formation.max_edge", f.max_edge)?;
        if let Some(k) = f.planar_scale {
            positive("formation.planar_scale", k)?;
        }
        let s = &self.strategy;
        s.thresholds.validate().map_err(|e| bad("strategy.thresholds", e))?;
        if !(s.herd_speed_ratio > 0.0 && s.herd_speed_ratio < 1.0) {
            return Err(bad("strategy.herd_speed_ratio", format!("must lie in (0, 1), got {}", s.herd_speed_ratio)));
        }
        if !(s.soft_max_delta >= 2.0) {
            return Err(bad("strategy.soft_max_delta", format!("must be >= 2, got {}", s.soft_max_delta)));
        }
        if !(s.transient_time >= 0.0) {
            return Err(bad("strategy.transient_time", "must be >= 0"));
        }
        if let Some(c) = s.gathering_clearance {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(bad("strategy.gathering_clearance", "must be finite and >= 0"));
            }
        }
        if 2.0 * s.thresholds.b_d >= f.max_edge {
            return Err(bad("strategy.thresholds.b_d", "twice the tracking bound must stay below formation.max_edge"));
        }
        self.body.validate().map_err(|e| bad("body", e))?;
        self.tracking.validate().map_err(|e| bad("tracking", e))?;
        let i = &self.integration;
        positive("integration.dt", i.dt)?;
        positive("integration.time_cap", i.time_cap)?;
        Ok(())
    }

    /// Twenty defenders around the protected area, six attackers inbound.
    pub fn bundled() -> Self {
        let defenders = shell(20, 75.0);
        let leader = Vec3::new(420.0, 170.0, 110.0);
        let offsets = [
            [0.0, 0.0, 0.0],
            [6.0, 5.0, 0.0],
            [6.0, -5.0, 2.0],
            [10.0, 0.0, -5.0],
            [4.0, 2.0, 7.0],
            [9.0, -3.0, 6.0],
        ];
        let attackers = offsets.iter().map(|o| (leader + Vec3::from(*o)).into()).collect();
        Self {
            version: CONFIG_VERSION,
            seed: 7,
            areas: Areas {
                protected_center: [0.0, 0.0, 0.0],
                protected_radius: 50.0,
                safe_center: [150.0, 480.0, 200.0],
                safe_radius: 70.0,
            },
            defenders: DefenderConfig {
                params: AgentParams { radius: 1.0, max_accel: 25.0, drag_coeff: 0.05, sensing_radius: 60.0 },
                initial_positions: defenders.iter().map(|p| (*p).into()).collect(),
            },
            attackers: AttackerConfig {
                params: AgentParams { radius: 1.0, max_accel: 5.0, drag_coeff: 0.05, sensing_radius: 30.0 },
                swarm: AttackerSwarmParams {
                    connectivity_radius: 15.0,
                    max_connectivity_radius: 25.0,
                    leader_index: 0,
                    sensing_radius: 30.0,
                    gains: AttackerGains::default(),
                    impenetrable: false,
                },
                initial_positions: attackers,
            },
            formation: FormationConfig { swarm_radius: 20.0, max_swarm_radius: 25.0, max_edge: 40.0, planar_scale: None },
            strategy: StrategyConfig {
                thresholds: Thresholds { eps1: 8.0, eps2: 0.05, b_d: 2.0, gather_margin: 5.0, morph_time: 8.0 },
                herd_speed_ratio: 0.8,
                soft_max_delta: 20.0,
                transient_time: 3.0,
                gathering_clearance: None,
            },
            body: BodyGains::default(),
            tracking: TrackingGains::default(),
            integration: IntegrationConfig { dt: DEFAULT_DT, time_cap: 300.0, log_every: 10 },
        }
    }
}

/// Fibonacci shell of `n` points at `radius` around the origin.
fn shell(n: usize, radius: f64) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            Vec3::new(r * a.cos(), r * a.sin(), z) * radius
        })
        .collect()
}
