mod common;

use gcsc::lyapriccati::{self, solve_are, solve_lyapunov};
use gcsc::matlib::{self, Matrix, Vector};
use gcsc::sim;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(common::config(100))]

    #[test]
    fn are_matches_newton_kleinman(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.random_range(1..=8);
        let (a, b, q, r) = common::riccati_instance(&mut rng, n);
        let sol = solve_are(&a, &b, &q, &r).unwrap();
        prop_assert!(sol.residual <= 1e-8 * (1.0 + sol.p.norm()), "residual {:e}", sol.residual);
        prop_assert!(sol.margin < 0.0);
        let oracle = common::newton_kleinman(&a, &b, &q, &r);
        let diff = (&sol.p - &oracle).norm();
        prop_assert!(diff <= 1e-9 * (1.0 + oracle.norm()), "diff {:e}", diff);
        prop_assert!(matlib::asymmetry(&sol.p) <= 1e-12 * (1.0 + sol.p.norm()));
        prop_assert!(matlib::min_eig(&sol.p).unwrap() > 0.0);
    }

    #[test]
    fn are_solution_grows_with_state_weight(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.random_range(1..=6);
        let (a, b, q, r) = common::riccati_instance(&mut rng, n);
        let extra = common::spd(&mut rng, n) * 0.3;
        let p1 = solve_are(&a, &b, &q, &r).unwrap().p;
        let p2 = solve_are(&a, &b, &(&q + extra), &r).unwrap().p;
        prop_assert!(matlib::min_eig(&(p2 - p1)).unwrap() >= -1e-9);
    }
}

proptest! {
    #![proptest_config(common::config(50))]

    #[test]
    fn lyapunov_matches_quadrature(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.random_range(1..=6);
        let gap = rng.random_range(0.2..2.0);
        let a = common::stable(&mut rng, n, gap);
        let w = common::spd(&mut rng, n);
        let y = solve_lyapunov(&a, &w).unwrap();
        prop_assert!(lyapriccati::lyapunov_residual(&a, &y, &w) <= 1e-10 * (1.0 + y.norm()));
        prop_assert!((&y - common::lyapunov_oracle(&a, &w)).norm() <= 1e-10 * (1.0 + y.norm()));
        let x0 = common::vector(&mut rng, n);
        let exact = matlib::quad_form(&y, &x0);
        let f = Matrix::zeros(0, n);
        let h = sim::stable_step(&a, 1e-2).unwrap();
        let traj = sim::simulate_to_tail(&a, &f, &x0, 1.0, h).unwrap();
        let quad = sim::quadrature_cost(&traj, &w).unwrap();
        prop_assert!((quad - exact).abs() <= 1e-2 * exact, "{} vs {}", quad, exact);
    }

    #[test]
    fn lyapunov_is_monotone_in_weight(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.random_range(1..=6);
        let a = common::stable(&mut rng, n, 0.5);
        let w1 = common::spd(&mut rng, n);
        let w2 = &w1 + common::spd(&mut rng, n);
        let y1 = solve_lyapunov(&a, &w1).unwrap();
        let y2 = solve_lyapunov(&a, &w2).unwrap();
        prop_assert!(matlib::min_eig(&(y2 - y1)).unwrap() > 0.0);
    }
}

#[test]
fn lyapunov_rejects_unstable() {
    let a = Matrix::identity(2, 2);
    assert!(solve_lyapunov(&a, &Matrix::identity(2, 2)).is_err());
}

#[test]
fn are_rejects_unstabilizable() {
    let a = Matrix::identity(2, 2);
    let b = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
    let q = Matrix::identity(2, 2);
    let r = Matrix::identity(1, 1);
    assert!(solve_are(&a, &b, &q, &r).is_err());
}

#[test]
fn scalar_are_closed_form() {
    // a = 1, b = 1, q = 1, r = 1: p = 1 + √2
    let one = Matrix::identity(1, 1);
    let p = solve_are(&one, &one, &one, &one).unwrap().p[(0, 0)];
    assert!((p - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    let x0 = Vector::from_element(1, 2.0);
    assert!((matlib::quad_form(&Matrix::from_element(1, 1, p), &x0) - 4.0 * p).abs() < 1e-12);
}
