use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use stringnet_core::dominance::dominance_boundary;
use stringnet_core::formation::{
    min_defender_count_from, precomputed_ratio_table, ratio_table_csv, DefenderCount, DEFAULT_COUNT_CAP,
};
use stringnet_core::herding::sim::{prepare, simulate_prepared, Prepared};
use stringnet_core::net::{check_edge_limit, EdgeLimitReport};
use stringnet_core::{Formation, FormationFamily, Metrics, ScenarioConfig, SphericalPoint, Vec3};

use crate::output::{run_dir, write, write_json};
use crate::Common;

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::from_json(&text).with_context(|| format!("config {}", path.display()))?
        }
        None => ScenarioConfig::bundled(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = common.dt {
        cfg.integration.dt = dt;
    }
    let origin = common.config.as_deref().map_or("bundled scenario".into(), |p| p.display().to_string());
    cfg.validate().with_context(|| format!("config {origin} after command-line overrides"))?;
    Ok(cfg)
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected x,y,z, got {} values", v.len()))
}

#[derive(Args, Debug)]
pub struct FormationArgs {
    /// Attacker swarm radius to enclose; defaults to the scenario value.
    #[arg(long)]
    pub rho_ac: Option<f64>,
    /// Longest admissible string barrier; defaults to the scenario value.
    #[arg(long)]
    pub max_edge: Option<f64>,
    /// Tracking error bound; defaults to the scenario value.
    #[arg(long)]
    pub b_d: Option<f64>,
    #[arg(long)]
    pub planar_scale: Option<f64>,
    /// Skip the exhaustive search from four defenders.
    #[arg(long)]
    pub no_brute_force: bool,
    /// Also write relative edge ratios for 4..=N defenders.
    #[arg(long, value_name = "N")]
    pub ratio_table: Option<usize>,
}

#[derive(Serialize)]
struct KindReport<'a> {
    kind: &'static str,
    file: &'static str,
    max_edge: f64,
    edge_limit: &'a EdgeLimitReport,
}

#[derive(Serialize)]
struct FormationSummary<'a> {
    rho_ac: f64,
    max_edge: f64,
    b_d: f64,
    seed: u64,
    rho_sn: f64,
    defender_count: usize,
    initial_guess: usize,
    iterations: usize,
    brute_force_count: Option<usize>,
    brute_force_iterations: Option<usize>,
    planar_scale: f64,
    hemisphere_max_edge: f64,
    kinds: Vec<KindReport<'a>>,
}

pub fn formation(common: &Common, args: &FormationArgs) -> Result<()> {
    let cfg = load_config(common)?;
    let rho_ac = args.rho_ac.unwrap_or(cfg.formation.swarm_radius);
    let r_sb = args.max_edge.unwrap_or(cfg.formation.max_edge);
    let b_d = args.b_d.unwrap_or(cfg.strategy.thresholds.b_d);
    let planar_scale = args.planar_scale.or(cfg.formation.planar_scale);
    let seed = cfg.seed;

    let probe = stringnet_core::formation::min_radius(rho_ac, r_sb, b_d);
    let start = stringnet_core::formation::initial_guess_count(r_sb, probe)?;
    let guided = min_defender_count_from(start, rho_ac, r_sb, b_d, seed, DEFAULT_COUNT_CAP)?;
    let brute: Option<DefenderCount> = if args.no_brute_force {
        None
    } else {
        let b = min_defender_count_from(4, rho_ac, r_sb, b_d, seed, DEFAULT_COUNT_CAP)?;
        if b.count != guided.count {
            log::warn!("guided search found {} defenders, exhaustive search {}", guided.count, b.count);
        }
        Some(b)
    };
    let family = FormationFamily::build(&guided.formation, r_sb, planar_scale)?;

    let dir = run_dir(&common.out, seed)?;
    let forms: [(&'static str, &'static str, &Formation); 3] = [
        ("spherical", "spherical.off", &family.spherical),
        ("hemispherical", "hemispherical.off", &family.hemispherical),
        ("planar", "planar.off", &family.planar),
    ];
    let reports: Vec<EdgeLimitReport> =
        forms.iter().map(|(_, _, f)| check_edge_limit(&f.mesh, &f.relative_positions)).collect();
    for (_, file, f) in &forms {
        write(&dir, file, &f.mesh.to_off(&f.relative_positions))?;
    }
    if let Some(n_max) = args.ratio_table {
        let table = precomputed_ratio_table(4, n_max.max(4), guided.rho_sn, seed)?;
        write(&dir, "ratio_table.csv", &ratio_table_csv(&table))?;
    }
    let summary = FormationSummary {
        rho_ac,
        max_edge: r_sb,
        b_d,
        seed,
        rho_sn: guided.rho_sn,
        defender_count: guided.count,
        initial_guess: guided.initial_guess,
        iterations: guided.iterations,
        brute_force_count: brute.as_ref().map(|b| b.count),
        brute_force_iterations: brute.as_ref().map(|b| b.iterations),
        planar_scale: family.k_pl,
        hemisphere_max_edge: family.hemisphere_max_edge,
        kinds: forms
            .iter()
            .zip(&reports)
            .map(|((kind, file, f), r)| KindReport { kind, file, max_edge: f.max_edge_length(), edge_limit: r })
            .collect(),
    };
    write_json(&dir, "formation.json", &summary)?;

    println!("rho_sn = {:.3}", guided.rho_sn);
    println!("N_d = {} (initial guess {}, {} iterations)", guided.count, guided.initial_guess, guided.iterations);
    match &brute {
        Some(b) if b.count == guided.count => println!("brute force from 4 agrees: N_d = {} in {} iterations", b.count, b.iterations),
        Some(b) => println!("brute force from 4 DISAGREES: N_d = {} in {} iterations", b.count, b.iterations),
        None => {}
    }
    println!("planar scale k_pl = {:.4}", family.k_pl);
    for ((kind, _, f), r) in forms.iter().zip(&reports) {
        let status = if r.pass { "holds" } else { "violated" };
        println!("{kind:>13}: R_sb^max = {:.3} (limit {:.3}), edge limit {status}", f.max_edge_length(), r.limit);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, default_value_t = 16)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 32)]
    pub n_phi: usize,
    /// Report whether an attacker start x,y,z lies in the defenders' dominance region.
    #[arg(long, value_parser = parse_point)]
    pub query: Vec<[f64; 3]>,
}

#[derive(Serialize)]
struct Query {
    point: [f64; 3],
    boundary_radius: f64,
    dominated: bool,
}

#[derive(Serialize)]
struct DominanceSummary {
    n_theta: usize,
    n_phi: usize,
    min_radius: f64,
    max_radius: f64,
    queries: Vec<Query>,
}

pub fn dominance(common: &Common, args: &GridArgs) -> Result<()> {
    let cfg = load_config(common)?;
    let prep = prepare(&cfg)?;
    let origin = cfg.areas.protected();
    let rel: Vec<Vec3> = cfg.defender_positions().iter().map(|d| d - origin).collect();
    let boundary = dominance_boundary(&rel, &prep.dominance, args.n_theta, args.n_phi)?;
    let queries = args
        .query
        .iter()
        .map(|p| {
            let q = Vec3::from(*p) - origin;
            let s = SphericalPoint::from_cartesian(&q);
            Query { point: *p, boundary_radius: boundary.radius_at(s.polar, s.azimuth), dominated: boundary.contains(&q) }
        })
        .collect();
    let summary = DominanceSummary {
        n_theta: args.n_theta,
        n_phi: args.n_phi,
        min_radius: boundary.radii.iter().copied().fold(f64::INFINITY, f64::min),
        max_radius: boundary.radii.iter().copied().fold(0.0, f64::max),
        queries,
    };

    let dir = run_dir(&common.out, cfg.seed)?;
    write(&dir, "config.json", &cfg.to_json())?;
    write(&dir, "boundary.csv", &boundary.to_csv())?;
    write_json(&dir, "dominance.json", &summary)?;
    println!(
        "boundary radius over {}x{} directions: {:.2} .. {:.2} m",
        args.n_theta, args.n_phi, summary.min_radius, summary.max_radius
    );
    for q in &summary.queries {
        let verdict = if q.dominated { "dominated" } else { "not dominated" };
        println!("{:?}: {verdict} (boundary {:.2} m)", q.point, q.boundary_radius);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Simulated time limit in seconds.
    #[arg(long)]
    pub time_cap: Option<f64>,
    /// Log every this many steps; 0 writes no trajectory rows.
    #[arg(long)]
    pub log_every: Option<usize>,
}

fn print_metrics(m: &Metrics) {
    let verdict = if m.herding_success { "herding succeeded" } else { "herding failed" };
    println!("{verdict}: final phase {} at {:.2} s after {} steps", m.final_phase.name(), m.sim_time, m.steps);
    for p in &m.phases {
        println!(
            "  {:<21} entered {:>7.2} s, steady tracking error {:.2e} m",
            p.phase.name(),
            p.entered_at,
            p.max_steady_tracking_error
        );
    }
    println!(
        "  breach {}, attackers in safe area {}/{}, contained {}/{} steps, edge-limit violations {}",
        m.breach,
        m.attackers_in_safe,
        m.attacker_count,
        m.containment_checked_steps - m.containment_violation_steps,
        m.containment_checked_steps,
        m.edge_limit_violation_steps
    );
}

fn write_meshes(dir: &Path, prep: &Prepared) -> Result<()> {
    let fam = &prep.family;
    for (file, f) in [("spherical.off", &fam.spherical), ("hemispherical.off", &fam.hemispherical), ("planar.off", &fam.planar)] {
        write(dir, file, &f.mesh.to_off(&f.relative_positions))?;
    }
    Ok(())
}

pub fn simulate(common: &Common, args: &SimulateArgs) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(cap) = args.time_cap {
        cfg.integration.time_cap = cap;
    }
    if let Some(k) = args.log_every {
        cfg.integration.log_every = k;
    }
    cfg.validate().context("command-line overrides")?;
    let prep = prepare(&cfg)?;
    let result = simulate_prepared(&cfg, &prep)?;

    let dir = run_dir(&common.out, cfg.seed)?;
    write(&dir, "config.json", &cfg.to_json())?;
    write(&dir, "trajectory.csv", &result.trajectory_csv())?;
    write_json(&dir, "metrics.json", &result.metrics)?;
    write_meshes(&dir, &prep)?;
    print_metrics(&result.metrics);
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Polar angles sampled at cell centers.
    #[arg(long, default_value_t = 3)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 6)]
    pub n_phi: usize,
    /// Distances of the swarm center from the protected center.
    #[arg(long, value_delimiter = ',', default_value = "250,350,450")]
    pub radii: Vec<f64>,
}

struct SweepRow {
    theta: f64,
    phi: f64,
    radius: f64,
    outcome: Result<Metrics, String>,
}

pub fn sweep(common: &Common, args: &SweepArgs) -> Result<()> {
    if args.n_theta == 0 || args.n_phi == 0 || args.radii.is_empty() {
        bail!("sweep grid is empty");
    }
    if let Some(r) = args.radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        bail!("--radii: {r} is not a positive distance");
    }
    let mut cfg = load_config(common)?;
    cfg.integration.log_every = 0;
    let prep = prepare(&cfg)?;
    let origin = cfg.areas.protected();
    let starts = cfg.attacker_positions();
    let centroid = if starts.is_empty() { Vec3::zeros() } else { starts.iter().sum::<Vec3>() / starts.len() as f64 };

    let mut grid = Vec::new();
    for i in 0..args.n_theta {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / args.n_theta as f64;
        for j in 0..args.n_phi {
            let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / args.n_phi as f64;
            for &radius in &args.radii {
                grid.push((theta, phi, radius));
            }
        }
    }
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(theta, phi, radius)| {
            let center = origin + SphericalPoint::new(radius, theta, phi).to_cartesian();
            let mut run = cfg.clone();
            run.attackers.initial_positions = starts.iter().map(|p| (p - centroid + center).into()).collect();
            let outcome = run
                .validate()
                .and_then(|()| simulate_prepared(&run, &prep))
                .map(|r| r.metrics)
                .map_err(|e| e.to_string());
            SweepRow { theta, phi, radius, outcome }
        })
        .collect();

    let mut csv = String::from("theta,phi,radius,status,herding_success,breach,final_phase,sim_time,gather_margin_met\n");
    let mut successes = 0;
    for r in &rows {
        match &r.outcome {
            Ok(m) => {
                successes += usize::from(m.herding_success);
                writeln!(
                    csv,
                    "{},{},{},ok,{},{},{},{},{}",
                    r.theta,
                    r.phi,
                    r.radius,
                    m.herding_success,
                    m.breach,
                    m.final_phase.name(),
                    m.sim_time,
                    m.gather_margin_met
                )?;
            }
            Err(e) => {
                log::warn!("start theta={} phi={} r={}: {e}", r.theta, r.phi, r.radius);
                writeln!(csv, "{},{},{},error,,,,,", r.theta, r.phi, r.radius)?;
            }
        }
    }
    let dir = run_dir(&common.out, cfg.seed)?;
    write(&dir, "config.json", &cfg.to_json())?;
    write(&dir, "success_map.csv", &csv)?;
    let errors = rows.iter().filter(|r| r.outcome.is_err()).count();
    println!("{successes}/{} starts herded, {errors} rejected", rows.len());
    println!("wrote {}", dir.display());
    Ok(())
}
