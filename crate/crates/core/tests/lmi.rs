mod common;

use gcsc::lmi::{self, AffineMatrixMap, FeasibilityStatus, LmiSystem, Sense, SolverOptions};
use gcsc::matlib::Matrix;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(common::config(50))]

    #[test]
    fn planted_instances_reach_planted_slack(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (system, z_star, slack) = common::planted_lmi(&mut rng);
        prop_assert!(system.margin(&z_star).unwrap() >= slack - 1e-9);
        let rep = lmi::solve_feasibility(&system, 0.9 * slack, &SolverOptions::default());
        prop_assert!(rep.is_feasible());
        prop_assert!(rep.margin >= 0.9 * slack, "{} < 0.9·{}", rep.margin, slack);
        prop_assert!((system.margin(&rep.z).unwrap() - rep.margin).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pairs_report_analytic_optimum(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (system, optimum) = common::infeasible_pair(&mut rng);
        let rep = lmi::solve_feasibility(&system, lmi::DEFAULT_TARGET, &SolverOptions::default());
        prop_assert_eq!(rep.status, FeasibilityStatus::MarginShortfall);
        prop_assert!((rep.margin - optimum).abs() <= 1e-4, "{} vs {}", rep.margin, optimum);
    }

    #[test]
    fn margin_is_concave(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (system, _, _) = common::planted_lmi(&mut rng);
        let k = system.k();
        let z1: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let z2: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t = rng.random_range(0.0..1.0);
        let zt: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let lhs = system.margin(&zt).unwrap();
        let rhs = t * system.margin(&z1).unwrap() + (1.0 - t) * system.margin(&z2).unwrap();
        prop_assert!(lhs >= rhs - 1e-9);
    }

    #[test]
    fn sym_coordinates_round_trip(n in 1usize..8, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::symmetric(&mut rng, n);
        let z = lmi::sym_to_coords(&m);
        prop_assert_eq!(z.len(), lmi::sym_dim(n));
        prop_assert!((lmi::sym_from_coords(n, &z) - m).norm() < 1e-15);
    }
}

#[test]
fn solver_is_deterministic() {
    let mut rng = common::rng(11);
    let (system, _, slack) = common::planted_lmi(&mut rng);
    let a = lmi::solve_feasibility(&system, 0.9 * slack, &SolverOptions::default());
    let b = lmi::solve_feasibility(&system, 0.9 * slack, &SolverOptions::default());
    assert_eq!(a.z, b.z);
    assert_eq!(a.margin, b.margin);
}

#[test]
fn certificate_lists_every_constraint() {
    let map = |label: &str, sense, c: f64| {
        AffineMatrixMap::from_affine(label, sense, 1, move |z: &[f64]| Matrix::identity(2, 2) * (z[0] - c)).unwrap()
    };
    let system = LmiSystem::new(1, vec![map("lo", Sense::RequirePosDef, 1.0), map("hi", Sense::RequireNegDef, 3.0)]).unwrap();
    let rep = lmi::solve_feasibility(&system, 0.5, &SolverOptions::default());
    assert!(rep.is_feasible());
    let cert = lmi::LmiCertificate::new(&system, &rep.z).unwrap();
    assert_eq!(cert.slacks.len(), 2);
    let v: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
    assert_eq!(v["slacks"][0]["label"], "lo");
}
