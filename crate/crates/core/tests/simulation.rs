use proptest::prelude::*;

use stringnet_core::herding::sim::{prepare, simulate_prepared, AgentKind, Prepared};
use stringnet_core::net::check_edge_limit;
use stringnet_core::{Metrics, Phase, ScenarioConfig, SimulationResult, SphericalPoint, Vec3};

fn run(cfg: &ScenarioConfig, prep: &Prepared) -> SimulationResult {
    simulate_prepared(cfg, prep).expect("simulation runs")
}

fn check_run_invariants(cfg: &ScenarioConfig, res: &SimulationResult) -> Result<(), String> {
    let m: &Metrics = &res.metrics;
    let mut last = Phase::Gathering.index();
    for row in &res.trajectory {
        if row.phase.index() < last {
            return Err(format!("phase went back to {} at t = {}", row.phase.name(), row.t));
        }
        last = row.phase.index();
    }
    let v_max = cfg.attackers.params.speed_bound();
    for row in res.trajectory.iter().filter(|r| r.kind == AgentKind::Attacker) {
        if row.velocity.norm() > v_max * (1.0 + 1e-9) {
            return Err(format!("attacker {} at {} m/s above {v_max}", row.agent_id, row.velocity.norm()));
        }
    }
    if m.edge_limit_violation_steps != 0 {
        return Err(format!("{} steps violate the edge limit", m.edge_limit_violation_steps));
    }
    if m.containment_violation_steps != 0 {
        return Err(format!("{} steps with an attacker outside the closed net", m.containment_violation_steps));
    }
    if let Some(c) = m.min_barrier_clearance {
        if c < cfg.attackers.params.radius {
            return Err(format!("an attacker came within {c} m of a barrier"));
        }
    }
    Ok(())
}

#[test]
fn bundled_run_is_deterministic_and_keeps_invariants() {
    let cfg = ScenarioConfig::bundled();
    let prep = prepare(&cfg).unwrap();
    let a = run(&cfg, &prep);
    let b = run(&cfg, &prep);
    assert_eq!(a.trajectory_csv(), b.trajectory_csv());
    assert_eq!(a.metrics, b.metrics);
    check_run_invariants(&cfg, &a).unwrap();
    assert!(a.metrics.herding_success);
    assert_eq!(a.trajectory.last().unwrap().phase, Phase::Done);
    assert!(a.metrics.containment_checked_steps > 0);
}

#[test]
fn every_net_of_the_family_meets_the_edge_limit() {
    let cfg = ScenarioConfig::bundled();
    let prep = prepare(&cfg).unwrap();
    let fam = &prep.family;
    for f in [&fam.spherical, &fam.hemispherical, &fam.planar] {
        f.mesh.check_topology().unwrap();
        let report = check_edge_limit(&f.mesh, &f.relative_positions);
        assert!(report.pass, "{:?} max edge {}", f.kind, report.max_edge);
        assert!(report.max_face_area <= report.face_area_bound);
    }
    assert_eq!(fam.spherical.mesh.euler_characteristic(), 2);
}

#[test]
fn logged_config_reproduces_the_run() {
    let mut cfg = ScenarioConfig::bundled();
    cfg.integration.time_cap = 15.0;
    let text = cfg.to_json();
    let back = ScenarioConfig::from_json(&text).unwrap();
    assert_eq!(back.to_json(), text);
    let a = stringnet_core::simulate(&cfg).unwrap();
    let b = stringnet_core::simulate(&back).unwrap();
    assert_eq!(a.trajectory_csv(), b.trajectory_csv());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn invariants_hold_from_other_directions(z in -0.8f64..0.8, phi in -3.1f64..3.1, r in 320.0f64..480.0) {
        let mut cfg = ScenarioConfig::bundled();
        cfg.integration.time_cap = 150.0;
        let prep = prepare(&cfg).unwrap();
        let starts = cfg.attacker_positions();
        let centroid = starts.iter().sum::<Vec3>() / starts.len() as f64;
        let center = cfg.areas.protected() + SphericalPoint::new(r, z.acos(), phi).to_cartesian();
        cfg.attackers.initial_positions = starts.iter().map(|p| (p - centroid + center).into()).collect();
        prop_assume!(cfg.validate().is_ok());
        let res = run(&cfg, &prep);
        prop_assert!(!res.metrics.breach);
        if let Err(e) = check_run_invariants(&cfg, &res) {
            prop_assert!(false, "{}", e);
        }
    }
}
