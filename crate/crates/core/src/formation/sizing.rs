//! Net radius and minimal defender count for a given attacker swarm size.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{solve_uniform_sphere, Formation};
use crate::error::{require, Error, Result};

/// Largest defender count Algorithm-1-style searches will try.
pub const DEFAULT_COUNT_CAP: usize = 500;

/// Smallest sphere radius that still encloses the swarm when every face is at the
/// edge limit, and leaves room for the tracking error.
pub fn min_radius(rho_ac: f64, r_sb: f64, b_d: f64) -> f64 {
    (rho_ac * rho_ac + r_sb * r_sb / 3.0).sqrt().max(rho_ac + b_d)
}

/// Fitted average relative edge length of an `n`-point uniform formation.
pub fn f_n(n: usize) -> Result<f64> {
    require(n >= 4, "n", || format!("fit is defined for n >= 4, got {n}"))?;
    Ok(f_n_unchecked(n as f64))
}

fn f_n_unchecked(n: f64) -> f64 {
    let c = (PI * n / (3.0 * n - 6.0)).cos();
    (2.0 * (1.0 - 2.0 * c) / (1.0 - c)).sqrt()
}

/// Smallest `n >= 4` with `f_n(n) <= r_sb / rho_sn`.
pub fn initial_guess_count(r_sb: f64, rho_sn: f64) -> Result<usize> {
    require(r_sb > 0.0 && rho_sn > 0.0, "r_sb", || "edge limit and radius must be > 0".into())?;
    let ratio = r_sb / rho_sn;
    if ratio >= f_n_unchecked(4.0) {
        return Ok(4);
    }
    let mut lo = 4usize; // f(lo) > ratio
    let mut hi = 8usize;
    while f_n_unchecked(hi as f64) > ratio {
        lo = hi;
        hi = hi.checked_mul(2).ok_or(Error::BudgetExhausted { cap: usize::MAX })?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f_n_unchecked(mid as f64) > ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone)]
pub struct DefenderCount {
    pub count: usize,
    pub formation: Formation,
    pub rho_sn: f64,
    pub initial_guess: usize,
    /// Number of defender counts evaluated before success.
    pub iterations: usize,
}

/// First count at or above `start` whose relative max edge is below `ratio`.
pub(crate) fn linear_search(
    start: usize,
    ratio: f64,
    cap: usize,
    mut r_rel: impl FnMut(usize) -> Result<f64>,
) -> Result<(usize, usize)> {
    let mut iterations = 0;
    for n in start.max(4)..=cap {
        iterations += 1;
        if r_rel(n)? < ratio {
            return Ok((n, iterations));
        }
    }
    Err(Error::BudgetExhausted { cap })
}

/// Minimum number of defenders whose uniform spherical formation meets the edge limit,
/// starting the enumeration at the fitted initial guess.
pub fn min_defender_count(rho_ac: f64, r_sb: f64, b_d: f64) -> Result<DefenderCount> {
    let rho_sn = min_radius(rho_ac, r_sb, b_d);
    let start = initial_guess_count(r_sb, rho_sn)?;
    min_defender_count_from(start, rho_ac, r_sb, b_d, 0, DEFAULT_COUNT_CAP)
}

/// Enumeration from an explicit starting count (4 gives the brute-force search).
pub fn min_defender_count_from(
    start: usize,
    rho_ac: f64,
    r_sb: f64,
    b_d: f64,
    seed: u64,
    cap: usize,
) -> Result<DefenderCount> {
    require(rho_ac > 0.0, "rho_ac", || "must be > 0".into())?;
    require(r_sb > 0.0, "r_sb", || "must be > 0".into())?;
    require(b_d > 0.0, "b_d", || "must be > 0".into())?;
    let rho_sn = min_radius(rho_ac, r_sb, b_d);
    let initial_guess = initial_guess_count(r_sb, rho_sn)?;
    let mut last = None;
    let (count, iterations) = linear_search(start, r_sb / rho_sn, cap, |n| {
        let f = solve_uniform_sphere(n, rho_sn, seed, 1e-8)?;
        let r = f.max_edge_length() / rho_sn;
        last = Some(f);
        Ok(r)
    })?;
    log::info!("defender count {count} found after {iterations} iterations (start {start})");
    let formation = last.expect("search evaluated at least one count");
    let formation = Formation { mesh: formation.mesh.with_max_edge(r_sb), ..formation };
    Ok(DefenderCount { count, formation, rho_sn, initial_guess, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub r_rel: f64,
    pub r_avg: f64,
}

/// Relative max and mean edge lengths for every count in `n_min..=n_max`.
pub fn precomputed_ratio_table(n_min: usize, n_max: usize, rho: f64, seed: u64) -> Result<Vec<RatioRow>> {
    require(n_min >= 4, "n_min", || format!("must be >= 4, got {n_min}"))?;
    require(rho > 0.0, "rho", || "must be > 0".into())?;
    (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let f = solve_uniform_sphere(n, rho, seed, 1e-8)?;
            Ok(RatioRow { n, r_rel: f.max_edge_length() / rho, r_avg: f.avg_edge_length() / rho })
        })
        .collect()
}

/// Linear search over a precomputed table; same answer as enumerating from the
/// table's first row.
pub fn search_ratio_table(table: &[RatioRow], r_sb: f64, rho_sn: f64) -> Option<usize> {
    table.iter().find(|row| row.r_rel * rho_sn < r_sb).map(|row| row.n)
}

pub fn ratio_table_csv(table: &[RatioRow]) -> String {
    let mut s = String::from("n,r_rel,r_avg\n");
    for r in table {
        writeln!(s, "{},{},{}", r.n, r.r_rel, r.r_avg).unwrap();
    }
    s
}
