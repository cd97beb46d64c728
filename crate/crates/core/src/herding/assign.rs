//! Minimum-cost defender-to-goal assignment.

use crate::dynamics::Vec3;

/// Hungarian algorithm on a square cost matrix; returns `col[row]`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

/// Goal index for every defender, minimizing the total squared travel distance.
pub fn assign_goals(defenders: &[Vec3], goals: &[Vec3]) -> Vec<usize> {
    assert_eq!(defenders.len(), goals.len(), "assignment needs equal counts");
    let cost: Vec<Vec<f64>> =
        defenders.iter().map(|d| goals.iter().map(|g| (d - g).norm_squared()).collect()).collect();
    hungarian(&cost)
}

pub fn assignment_cost(defenders: &[Vec3], goals: &[Vec3], assignment: &[usize]) -> f64 {
    defenders.iter().zip(assignment).map(|(d, &g)| (d - goals[g]).norm_squared()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn identity_when_at_goals() {
        let pts: Vec<Vec3> = (0..7).map(|k| Vec3::new(k as f64, (k * k) as f64, 0.0)).collect();
        assert_eq!(assign_goals(&pts, &pts), (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn uncrossed_pairing() {
        let d = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0)];
        let g = [Vec3::new(11.0, 1.0, 0.0), Vec3::new(-1.0, 1.0, 0.0)];
        assert_eq!(assign_goals(&d, &g), vec![1, 0]);
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let perms = permutations(6);
        assert_eq!(perms.len(), 720);
        for _ in 0..20 {
            let mut pt = || Vec3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
            let d: Vec<Vec3> = (0..6).map(|_| pt()).collect();
            let g: Vec<Vec3> = (0..6).map(|_| pt()).collect();
            let best = perms.iter().map(|p| assignment_cost(&d, &g, p)).fold(f64::INFINITY, f64::min);
            let got = assignment_cost(&d, &g, &assign_goals(&d, &g));
            assert!((got - best).abs() <= 1e-9 * best.max(1.0));
        }
    }

    #[test]
    fn empty_input() {
        assert!(assign_goals(&[], &[]).is_empty());
    }

    proptest! {
        #[test]
        fn result_is_a_bijection(seed in 0u64..1000, n in 1usize..25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
            let g: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
            let mut a = assign_goals(&d, &g);
            a.sort_unstable();
            prop_assert_eq!(a, (0..n).collect::<Vec<_>>());
        }
    }
}
