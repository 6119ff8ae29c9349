mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use role_engine::assignment::hungarian::hungarian;
use role_engine::assignment::{gra_solve, nn_assign, QualificationMatrix};
use role_engine::Point2;

use common::*;

#[test]
fn gra_equals_brute_force_for_every_square_size_up_to_six() {
    for n in 1..=6 {
        for seed in 0..60 {
            let (inf_p, levels) = match seed % 3 {
                0 => (0.0, None),
                1 => (0.25, None),
                _ => (0.1, Some(3)),
            };
            let q = matrix(n, n, seed * 31 + n as u64, inf_p, levels);
            let qm = QualificationMatrix::from_costs(n, n, q.clone()).unwrap();
            match (gra_solve(&qm), brute_force(&q, n, n)) {
                (Ok(a), Some((cost, pairs))) => {
                    assert_eq!(a.total_cost, cost, "n {n} seed {seed}");
                    assert_eq!(a.pairs, pairs, "n {n} seed {seed}: tie-break");
                }
                (Err(_), None) => {}
                (got, want) => panic!("n {n} seed {seed}: {got:?} vs {want:?}"),
            }
        }
    }
}

proptest! {
    #[test]
    fn gra_is_optimal_on_rectangular_instances(m in 1usize..=6, extra in 0usize..=2, seed in any::<u64>()) {
        let n = m.saturating_sub(extra).max(1);
        let q = matrix(m, n, seed, 0.15, None);
        let qm = QualificationMatrix::from_costs(m, n, q.clone()).unwrap();
        match (gra_solve(&qm), brute_force(&q, m, n)) {
            (Ok(a), Some((cost, _))) => {
                prop_assert_eq!(a.total_cost, cost);
                prop_assert_eq!(a.pairs.len(), n);
                let mut roles: Vec<usize> = a.pairs.iter().map(|p| p.1).collect();
                roles.sort();
                roles.dedup();
                prop_assert_eq!(roles.len(), n);
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
    }

    #[test]
    fn gra_never_loses_to_nearest_neighbour(seed in any::<u64>(), m in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = |rng: &mut ChaCha8Rng| -> Vec<Point2> {
            (0..m).map(|_| Point2::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0))).collect()
        };
        let (agents, roles) = (pts(&mut rng), pts(&mut rng));
        let q: Vec<f64> = agents.iter().flat_map(|a| roles.iter().map(move |r| (a - r).norm_squared())).collect();
        let qm = QualificationMatrix::from_costs(m, m, q).unwrap();
        let gra = gra_solve(&qm).unwrap();
        let nn = nn_assign(&agents, &roles).unwrap();
        prop_assert!(gra.total_cost <= nn.cost_under(&qm));
    }
}

/// Exact minimum by dynamic programming over role subsets.
fn subset_dp(q: &[f64], n: usize) -> f64 {
    let mut best = vec![f64::INFINITY; 1 << n];
    best[0] = 0.0;
    for mask in 0usize..(1 << n) {
        let a = mask.count_ones() as usize;
        if a >= n || best[mask].is_infinite() {
            continue;
        }
        for r in 0..n {
            if mask & (1 << r) == 0 {
                let next = mask | (1 << r);
                best[next] = best[next].min(best[mask] + q[a * n + r]);
            }
        }
    }
    best[(1 << n) - 1]
}

#[test]
fn large_instances_match_subset_dp() {
    for (n, seed) in [(11, 1), (12, 2), (12, 3), (14, 4)] {
        let q = matrix(n, n, seed, 0.1, None);
        let want = subset_dp(&q, n);
        let a = gra_solve(&QualificationMatrix::from_costs(n, n, q).unwrap()).unwrap();
        assert!((a.total_cost - want).abs() <= 1e-9 * want.max(1.0), "n {n}: {} vs {want}", a.total_cost);
    }
}

#[test]
fn hungarian_matches_brute_force_on_finite_matrices() {
    for seed in 0..200 {
        let (m, n) = (1 + seed as usize % 6, 1 + (seed as usize / 6) % 6);
        let (rows, cols) = (m.min(n), m.max(n));
        let q = matrix(rows, cols, seed, 0.0, None);
        let cols_of = hungarian(&q, rows, cols);
        let cost: f64 = cols_of.iter().enumerate().map(|(i, &j)| q[i * cols + j]).sum();
        // Brute force is agent-major, so transpose to put the short side second.
        let t: Vec<f64> = (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).map(|(i, j)| q[i * cols + j]).collect();
        let (want, _) = brute_force(&t, cols, rows).unwrap();
        assert!((cost - want).abs() < 1e-9, "seed {seed}: {cost} vs {want}");
    }
}
