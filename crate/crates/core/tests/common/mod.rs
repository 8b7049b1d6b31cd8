//! Random instance generators and independent oracles shared by the test targets.
#![allow(dead_code)]

use gcsc::lmi::{AffineMatrixMap, LmiSystem, Sense};
use gcsc::matlib::{CMatrix, Matrix, Vector};
use gcsc::model::{GameDefinition, Player};
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Property-test configuration with a fixed runner seed, so every run draws
/// the same instances.
pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m = uniform(rng, n, n);
    (&m + m.transpose()) * 0.5
}

/// `I + G'G` scaled into a well-conditioned positive definite matrix.
pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = uniform(rng, n, n);
    Matrix::identity(n, n) + g.transpose() * g * 0.5
}

/// Full-row-rank `p×n` with `p ≤ n`.
pub fn full_row_rank(rng: &mut ChaCha8Rng, p: usize, n: usize) -> Matrix {
    loop {
        let c = uniform(rng, p, n);
        let s = c.clone().svd(false, false).singular_values;
        if s.min() > 0.2 {
            return c;
        }
    }
}

/// Shifts a random matrix so its spectral abscissa is `−gap`.
pub fn stable(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> Matrix {
    let a = uniform(rng, n, n);
    let abscissa = gcsc::matlib::hurwitz_margin(&a).expect("eigenvalues converge");
    a - Matrix::identity(n, n) * (abscissa + gap)
}

/// `min_λ σ_min([A − λI, B])` over the eigenvalues of `A`: how far the pair is
/// from losing controllability.
pub fn pbh_distance(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.nrows();
    let ac = gcsc::matlib::to_complex(a);
    let bc = gcsc::matlib::to_complex(b);
    gcsc::matlib::eigenvalues(a)
        .expect("eigenvalues converge")
        .iter()
        .map(|&l| {
            let mut m = CMatrix::zeros(n, n + b.ncols());
            m.view_mut((0, 0), (n, n)).copy_from(&(&ac - CMatrix::identity(n, n) * l));
            m.view_mut((0, n), (n, b.ncols())).copy_from(&bc);
            m.svd(false, false).singular_values.min()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random `(A, B, Q, R)` with `m ≤ min(n, 4)` and `(A, B)` at PBH distance at
/// least 0.2 from uncontrollability, so the Riccati solution is well conditioned.
pub fn riccati_instance(rng: &mut ChaCha8Rng, n: usize) -> (Matrix, Matrix, Matrix, Matrix) {
    loop {
        let m = rng.random_range(1..=n.min(4));
        let a = uniform(rng, n, n);
        let b = full_row_rank(rng, m, n).transpose();
        let c = uniform(rng, n, n);
        let q = c.transpose() * c * 0.5 + Matrix::identity(n, n) * 0.1;
        let r = spd(rng, m);
        if pbh_distance(&a, &b) >= 0.2 {
            return (a, b, q, r);
        }
    }
}

/// Kronecker solve of `A'Y + YA + W = 0`.
pub fn lyapunov_oracle(a: &Matrix, w: &Matrix) -> Matrix {
    let n = a.nrows();
    let i = Matrix::identity(n, n);
    let op = i.kronecker(&a.transpose()) + a.transpose().kronecker(&i);
    let rhs = Vector::from_iterator(n * n, w.iter().map(|v| -v));
    let y = op.lu().solve(&rhs).expect("stable A gives a nonsingular operator");
    let y = Matrix::from_column_slice(n, n, y.as_slice());
    (&y + y.transpose()) * 0.5
}

/// Stabilizing ARE solution by Newton–Kleinman iteration from a Bass seed.
pub fn newton_kleinman(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Matrix {
    let n = a.nrows();
    let r_inv = r.clone().try_inverse().expect("R invertible");
    // Bass: −(A + βI) is Hurwitz, and W ≻ 0 solving (A+βI)W + W(A+βI)' = 2BB'
    // makes A − BB'W⁻¹ Hurwitz with Lyapunov matrix W⁻¹. A shift just past the
    // point where every eigenvalue of A + βI has positive real part keeps W
    // well conditioned for weakly controllable pairs.
    let lowest = gcsc::matlib::eigenvalues(a)
        .expect("eigenvalues converge")
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    let beta = (-lowest).max(0.0) + 0.5;
    let shifted = -(a + Matrix::identity(n, n) * beta);
    let w = lyapunov_oracle(&shifted.transpose(), &(b * b.transpose() * 2.0));
    let mut k = b.transpose() * w.try_inverse().expect("controllable pair");
    let mut p_prev: Option<Matrix> = None;
    for _ in 0..200 {
        let a_k = a - b * &k;
        let p = lyapunov_oracle(&a_k, &(q + k.transpose() * r * &k));
        k = &r_inv * b.transpose() * &p;
        if let Some(prev) = &p_prev {
            if (&p - prev).norm() <= 1e-13 * (1.0 + p.norm()) {
                return p;
            }
        }
        p_prev = Some(p);
    }
    p_prev.expect("at least one iteration")
}

/// Random game: 2–3 players, `n ≤ 5`, arbitrary full-row-rank outputs.
pub fn game(rng: &mut ChaCha8Rng, full_information: bool) -> GameDefinition {
    loop {
        let n = rng.random_range(2..=5);
        let players_n = rng.random_range(2..=3);
        let a = uniform(rng, n, n);
        let players = (0..players_n)
            .map(|_| {
                let m = rng.random_range(1..=2);
                let p = if full_information { n } else { rng.random_range(1..=n) };
                let c = if full_information {
                    Matrix::identity(n, n)
                } else {
                    full_row_rank(rng, p, n)
                };
                Player {
                    b: uniform(rng, n, m),
                    c,
                    q: spd(rng, p),
                    r: spd(rng, m),
                }
            })
            .collect();
        if let Ok(g) = GameDefinition::new(a, players) {
            return g;
        }
    }
}

/// LMI system strictly feasible at a planted point with margin `slack`.
pub fn planted_lmi(rng: &mut ChaCha8Rng) -> (LmiSystem, Vec<f64>, f64) {
    let k = rng.random_range(1..=40);
    let z_star: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let slack = rng.random_range(0.05..1.0);
    let maps_n = rng.random_range(1..=3);
    let maps = (0..maps_n)
        .map(|idx| {
            let d = rng.random_range(1..=10);
            let basis: Vec<Matrix> = (0..k).map(|_| symmetric(rng, d)).collect();
            let sense = if rng.random_bool(0.5) {
                Sense::RequirePosDef
            } else {
                Sense::RequireNegDef
            };
            let sign = if sense == Sense::RequirePosDef { 1.0 } else { -1.0 };
            // M(z*) = sign·(slack·I + S), S ⪰ 0 random
            let g = uniform(rng, d, d) * 0.3;
            let target = (Matrix::identity(d, d) * slack + g.transpose() * g) * sign;
            let mut m0 = target;
            for (zj, mj) in z_star.iter().zip(&basis) {
                m0 -= mj * *zj;
            }
            AffineMatrixMap::new(format!("m{idx}"), sense, m0, basis).unwrap()
        })
        .collect();
    (LmiSystem::new(k, maps).unwrap(), z_star, slack)
}

/// Two rotated constraints `v'z ≥ a` and `v'z ≤ b` with `a > b`; the best
/// achievable margin is `(b − a)/2`.
pub fn infeasible_pair(rng: &mut ChaCha8Rng) -> (LmiSystem, f64) {
    let k = rng.random_range(1..=8);
    let mut v = vector(rng, k);
    v /= v.norm();
    let b = rng.random_range(-1.0..1.0);
    let a = b + rng.random_range(0.05..1.0);
    let block = |rng: &mut ChaCha8Rng, sign: f64, offset: f64| {
        let d = rng.random_range(1..=5);
        let q = uniform(rng, d, d).qr().q();
        // eigenvalues sign·v'z − offset + extra_i with extra_0 = 0
        let extras: Vec<f64> = (0..d).map(|i| if i == 0 { 0.0 } else { rng.random_range(0.5..2.0) }).collect();
        let m0 = &q * Matrix::from_diagonal(&Vector::from_iterator(d, extras.iter().map(|e| e - offset))) * q.transpose();
        let basis = (0..k)
            .map(|j| Matrix::identity(d, d) * (sign * v[j]))
            .collect::<Vec<_>>();
        (m0, basis)
    };
    let (m1, b1) = block(rng, 1.0, a);
    let (m2, b2) = block(rng, -1.0, -b);
    let sym = |m: Matrix| (&m + m.transpose()) * 0.5;
    let maps = vec![
        AffineMatrixMap::new("lower", Sense::RequirePosDef, sym(m1), b1.into_iter().map(sym).collect()).unwrap(),
        AffineMatrixMap::new("upper", Sense::RequirePosDef, sym(m2), b2.into_iter().map(sym).collect()).unwrap(),
    ];
    (LmiSystem::new(k, maps).unwrap(), (b - a) / 2.0)
}
