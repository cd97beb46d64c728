use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stringnet_core::ScenarioConfig;

fn stringnet(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stringnet"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn only_run_dir(out: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, cfg: &ScenarioConfig) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

#[test]
fn formation_reports_radius_and_validated_count() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stringnet(tmp.path(), &["formation", "--rho-ac", "30", "--max-edge", "30", "--b-d", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("rho_sn = 35.000"), "{text}");
    assert!(text.contains("brute force from 4 agrees"), "{text}");
    assert!(!text.contains("violated"), "{text}");

    let dir = only_run_dir(tmp.path());
    assert!(dir.file_name().unwrap().to_str().unwrap().ends_with("_seed7"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("formation.json")).unwrap()).unwrap();
    assert_eq!(summary["defender_count"], summary["brute_force_count"]);
    for kind in ["spherical", "hemispherical", "planar"] {
        let off = fs::read_to_string(dir.join(format!("{kind}.off"))).unwrap();
        let mut lines = off.lines();
        assert_eq!(lines.next(), Some("OFF"));
        let counts: Vec<usize> = lines.next().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(counts[0], summary["defender_count"].as_u64().unwrap() as usize);
        assert_eq!(off.lines().count(), 2 + counts[0] + counts[1]);
    }
}

#[test]
fn bundled_scenario_is_herded_and_logged_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/bundled.json");
    let o = stringnet(tmp.path(), &["--config", shipped.to_str().unwrap(), "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("herding succeeded"));
    let dir = only_run_dir(tmp.path());
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["herding_success"], true);
    assert_eq!(metrics["breach"], false);
    assert_eq!(fs::read_to_string(dir.join("config.json")).unwrap(), fs::read_to_string(&shipped).unwrap());
    let csv = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,agent_id,kind,x,y,z,vx,vy,vz,phase\n"));
    assert!(csv.lines().last().unwrap().ends_with(",done"));
}

#[test]
fn shipped_scenario_matches_library_default() {
    let shipped = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/bundled.json")).unwrap();
    assert_eq!(shipped, ScenarioConfig::bundled().to_json());
}

#[test]
fn same_seed_gives_identical_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::bundled();
    cfg.integration.time_cap = 20.0;
    let path = write_config(tmp.path(), &cfg);
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("out{k}"));
        let o = stringnet(&out, &["--config", path.to_str().unwrap(), "simulate"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(fs::read(only_run_dir(&out).join("trajectory.csv")).unwrap());
    }
    assert!(csvs[0].len() > 1000);
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn zero_attackers_exit_cleanly_with_vacuous_success() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::bundled();
    cfg.attackers.initial_positions.clear();
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("out");
    let o = stringnet(&out, &["--config", path.to_str().unwrap(), "--seed", "3", "simulate", "--log-every", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = only_run_dir(&out);
    assert!(dir.file_name().unwrap().to_str().unwrap().ends_with("_seed3"));
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["herding_success"], true);
    assert_eq!(metrics["attacker_count"], 0);
}

#[test]
fn defense_failure_still_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::bundled();
    cfg.integration.time_cap = 5.0;
    let path = write_config(tmp.path(), &cfg);
    let o = stringnet(&tmp.path().join("out"), &["--config", path.to_str().unwrap(), "simulate"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("herding failed"));
}

#[test]
fn unknown_field_is_rejected_with_path_and_field() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ScenarioConfig::bundled().to_json().replacen("\"seed\"", "\"sede\"", 1);
    let path = tmp.path().join("broken.json");
    fs::write(&path, text).unwrap();
    let o = stringnet(&tmp.path().join("out"), &["--config", path.to_str().unwrap(), "simulate"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("broken.json") && err.contains("sede"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_override_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stringnet(tmp.path(), &["--dt=-1", "simulate"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("integration.dt"));
}

#[test]
fn dominance_writes_boundary_and_answers_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stringnet(tmp.path(), &["dominance", "--n-theta", "8", "--n-phi", "8", "--query", "1000,0,0", "--query", "60,0,0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = only_run_dir(tmp.path());
    let csv = fs::read_to_string(dir.join("boundary.csv")).unwrap();
    assert!(csv.starts_with("theta,phi,r_min\n"));
    assert_eq!(csv.lines().count(), 1 + 64);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("dominance.json")).unwrap()).unwrap();
    assert_eq!(summary["queries"][0]["dominated"], true);
    assert_eq!(summary["queries"][1]["dominated"], false);
}

#[test]
fn sweep_writes_one_row_per_start() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stringnet(tmp.path(), &["sweep", "--n-theta", "1", "--n-phi", "2", "--radii", "350"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(only_run_dir(tmp.path()).join("success_map.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "theta,phi,radius,status,herding_success,breach,final_phase,sim_time,gather_margin_met");
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r.split(',').nth(3) == Some("ok")));
}
