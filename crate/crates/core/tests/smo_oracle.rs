#[path = "common/qp_oracle.rs"]
mod qp_oracle;

use landmark_emotion::learners::{solve_binary, DEFAULT_TOLERANCE};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, f64) {
    let n = rng.random_range(4..=6);
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    // both classes must appear
    y[0] = 1.0;
    y[1] = -1.0;
    let gamma = rng.random_range(0.1..2.0);
    let c = [0.1, 1.0, 10.0][rng.random_range(0..3)];
    (qp_oracle::rbf_matrix(&xs, gamma), y, c)
}

#[test]
fn objective_matches_brute_force_on_small_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..40 {
        let (k, y, c) = random_problem(&mut rng);
        let sol = solve_binary(&k, &y, c, DEFAULT_TOLERANCE);
        let oracle = qp_oracle::solve(&k, &y, c);
        assert!(sol.converged, "case {case}");
        // the oracle itself must be optimal
        assert!(qp_oracle::kkt_violation(&k, &y, c, &oracle.alpha) < 1e-8, "case {case}");
        assert!(
            (sol.objective - oracle.objective).abs() <= 1e-4,
            "case {case}: smo {} oracle {}",
            sol.objective,
            oracle.objective
        );
        assert!(qp_oracle::kkt_violation(&k, &y, c, &sol.alpha) <= 1e-3, "case {case}");
    }
}

#[test]
fn reported_objective_is_the_dual_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (k, y, c) = random_problem(&mut rng);
    let n = y.len();
    let sol = solve_binary(&k, &y, c, DEFAULT_TOLERANCE);
    let q = nalgebra::DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[i * n + j]);
    assert!((qp_oracle::objective(&q, &sol.alpha) - sol.objective).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_are_feasible_and_kkt(seed in any::<u64>(), n in 4usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let c = rng.random_range(0.05..20.0);
        let k = qp_oracle::rbf_matrix(&xs, 1.0);
        let sol = solve_binary(&k, &y, c, DEFAULT_TOLERANCE);
        prop_assert!(sol.converged);
        prop_assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        prop_assert!(balance.abs() < 1e-9);
        prop_assert!(qp_oracle::kkt_violation(&k, &y, c, &sol.alpha) <= DEFAULT_TOLERANCE + 1e-12);
    }
}
