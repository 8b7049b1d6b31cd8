//! Lyapunov and Riccati solvers and closed-loop cost oracles.

use nalgebra::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::matlib::{self, MatError, Matrix, Vector};
use crate::model::{self, GameDefinition, ModelError, StructuredGain, WeightVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("closed loop is not Hurwitz (max real part {margin:e})")]
    NotHurwitz { margin: f64 },
    #[error("Lyapunov system is singular or ill-conditioned")]
    SingularSystem,
    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn lyap_residual(a: &Matrix, y: &Matrix, w: &Matrix) -> Matrix {
    a.transpose() * y + y * a + w
}

/// Solves `A'Y + YA + W = 0` for Hurwitz `A` by Kronecker vectorization.
pub fn solve_lyapunov(a_cl: &Matrix, w: &Matrix) -> Result<Matrix, SolveError> {
    let n = a_cl.nrows();
    if a_cl.ncols() != n || w.shape() != (n, n) {
        return Err(SolveError::Dimension(format!(
            "A is {}x{}, W is {}x{}",
            a_cl.nrows(),
            a_cl.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let margin = matlib::hurwitz_margin(a_cl)?;
    if margin >= -matlib::HURWITZ_TOL {
        return Err(SolveError::NotHurwitz { margin });
    }
    let eye = Matrix::identity(n, n);
    let at = a_cl.transpose();
    // column-major vec: vec(A'Y) = (I ⊗ A') vec Y, vec(YA) = (A' ⊗ I) vec Y
    let k = matlib::kron(&eye, &at) + matlib::kron(&at, &eye);
    let lu = k.lu();
    let solve = |rhs: &Matrix| -> Result<Matrix, SolveError> {
        let v = Vector::from_column_slice(rhs.as_slice());
        let y = lu.solve(&(-v)).ok_or(SolveError::SingularSystem)?;
        Ok(Matrix::from_column_slice(n, n, y.as_slice()))
    };
    let mut y = matlib::symmetrize(&solve(w)?);
    // iterative refinement against rounding in the n²×n² solve
    for _ in 0..3 {
        let r = lyap_residual(a_cl, &y, w);
        if r.norm() <= 1e-12 * (1.0 + y.norm()) {
            break;
        }
        let dy = solve(&r)?;
        y = matlib::symmetrize(&(y + dy));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::SingularSystem);
    }
    Ok(y)
}

/// Residual `‖A'Y + YA + W‖_F`.
pub fn lyapunov_residual(a_cl: &Matrix, y: &Matrix, w: &Matrix) -> f64 {
    lyap_residual(a_cl, y, w).norm()
}

/// `x0' Y x0` with `Y` the Lyapunov solution for `(A_cl, W)`.
pub fn quadratic_cost(a_cl: &Matrix, w: &Matrix, x0: &Vector) -> Result<f64, SolveError> {
    Ok(matlib::quad_form(&solve_lyapunov(a_cl, w)?, x0))
}

/// Per-player, weighted and team costs of a closed loop.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CostBreakdown {
    pub per_player: Vec<f64>,
    pub weighted: f64,
    pub team: f64,
    /// `J_α` recomputed from a single Lyapunov solve with `Q_α + F'R_αF`.
    pub weighted_direct: f64,
}

impl CostBreakdown {
    /// Relative disagreement between the aggregated and direct `J_α`.
    pub fn cross_check_error(&self) -> f64 {
        (self.weighted - self.weighted_direct).abs() / self.weighted.abs().max(f64::MIN_POSITIVE)
    }
}

/// Closed-loop matrix `A + BF`.
pub fn closed_loop(game: &GameDefinition, f: &Matrix) -> Matrix {
    game.a() + game.b() * f
}

/// Player `i`'s closed-loop integrand weight `C_i'Q_iC_i + (G_iF)'R_i(G_iF)`.
pub fn player_weight(game: &GameDefinition, f: &Matrix, i: usize) -> Matrix {
    let p = &game.players()[i];
    let fi = game.gain_rows(f, i);
    matlib::symmetrize(&(p.c.transpose() * &p.q * &p.c + fi.transpose() * &p.r * fi))
}

/// Costs for an arbitrary joint gain (not necessarily structured),
/// multiplied by `scale`.
pub fn evaluate_costs_matrix(
    f: &Matrix,
    game: &GameDefinition,
    alpha: &WeightVector,
    x0: &Vector,
    scale: f64,
) -> Result<CostBreakdown, SolveError> {
    if f.shape() != (game.m(), game.n()) {
        return Err(SolveError::Dimension(format!(
            "gain is {}x{}, expected {}x{}",
            f.nrows(),
            f.ncols(),
            game.m(),
            game.n()
        )));
    }
    if x0.len() != game.n() || alpha.len() != game.num_players() {
        return Err(SolveError::Dimension("x0 or alpha length".into()));
    }
    let a_cl = closed_loop(game, f);
    let per_player = (0..game.num_players())
        .map(|i| Ok(scale * quadratic_cost(&a_cl, &player_weight(game, f, i), x0)?))
        .collect::<Result<Vec<_>, SolveError>>()?;
    let weighted = per_player
        .iter()
        .zip(alpha.as_slice())
        .map(|(j, a)| a * j)
        .sum();
    let agg = model::aggregate(game, alpha)?;
    let w = matlib::symmetrize(&(agg.q + f.transpose() * agg.r * f));
    let weighted_direct = scale * quadratic_cost(&a_cl, &w, x0)?;
    Ok(CostBreakdown {
        team: per_player.iter().sum(),
        per_player,
        weighted,
        weighted_direct,
    })
}

/// Costs `J_i = x0'Y_ix0`, `J_α` and `J_GC = ΣJ_i` of a structured gain.
pub fn evaluate_costs(
    gain: &StructuredGain,
    game: &GameDefinition,
    alpha: &WeightVector,
    x0: &Vector,
) -> Result<CostBreakdown, SolveError> {
    evaluate_costs_matrix(gain.matrix(), game, alpha, x0, 1.0)
}

/// Stabilizing Riccati solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub p: Matrix,
    /// `‖A'P + PA + Q − PBR⁻¹B'P‖_F`
    pub residual: f64,
    /// Max real part of `A − BR⁻¹B'P`.
    pub margin: f64,
}

fn are_residual(a: &Matrix, s: &Matrix, q: &Matrix, p: &Matrix) -> f64 {
    (a.transpose() * p + p * a + q - p * s * p).norm()
}

/// Stabilizing solution of `A'P + PA + Q − PBR⁻¹B'P = 0`.
///
/// Stable invariant subspace of the Hamiltonian via an ordered complex Schur
/// form, followed by one Newton–Kleinman step.
pub fn solve_are(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<RiccatiSolution, SolveError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(SolveError::Dimension("Riccati data".into()));
    }
    let r_chol = matlib::symmetrize(r)
        .cholesky()
        .ok_or_else(|| SolveError::NoStabilizingSolution("R is not positive definite".into()))?;
    let r_inv = r_chol.inverse();
    let s = matlib::symmetrize(&(b * &r_inv * b.transpose()));
    let q = matlib::symmetrize(q);

    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let scale = 1.0 + h.norm();
    let (u, _, count) = matlib::ordered_complex_schur(&h, |z: Complex<f64>| z.re < -1e-12 * scale)?;
    if count != n {
        return Err(SolveError::NoStabilizingSolution(format!(
            "stable subspace has dimension {count}, expected {n}"
        )));
    }
    let u1 = u.view((0, 0), (n, n)).into_owned();
    let u2 = u.view((n, 0), (n, n)).into_owned();
    // X U1 = U2  <=>  U1ᵀ Xᵀ = U2ᵀ
    let xt = u1
        .transpose()
        .lu()
        .solve(&u2.transpose())
        .ok_or_else(|| SolveError::NoStabilizingSolution("singular X-block".into()))?;
    let x = xt.transpose().map(|z| z.re);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NoStabilizingSolution("singular X-block".into()));
    }
    let mut p = matlib::symmetrize(&x);
    let mut residual = are_residual(a, &s, &q, &p);

    // one Newton–Kleinman refinement
    let a_k = a - &s * &p;
    if matlib::is_hurwitz(&a_k)? {
        let w = matlib::symmetrize(&(&q + &p * &s * &p));
        if let Ok(p_next) = solve_lyapunov(&a_k, &w) {
            let r_next = are_residual(a, &s, &q, &p_next);
            if r_next <= residual {
                p = p_next;
                residual = r_next;
            }
        }
    }
    let margin = matlib::hurwitz_margin(&(a - &s * &p))?;
    if margin >= -matlib::HURWITZ_TOL {
        return Err(SolveError::NoStabilizingSolution(format!(
            "closed loop margin {margin:e}"
        )));
    }
    Ok(RiccatiSolution { p, residual, margin })
}

/// Stabilizing solution of the team equation with `(Q̃, R̄, B̃)`.
pub fn team_riccati(game: &GameDefinition) -> Result<RiccatiSolution, SolveError> {
    let t = model::team_matrices(game);
    solve_are(game.a(), &t.b, &t.q, &t.r)
}

/// `J_OPT = x0'Px0` for the team equation.
pub fn optimal_team_cost(game: &GameDefinition, x0: &Vector) -> Result<f64, SolveError> {
    if x0.len() != game.n() {
        return Err(SolveError::Dimension("x0 length".into()));
    }
    Ok(matlib::quad_form(&team_riccati(game)?.p, x0))
}

/// Weighted Riccati solution `P_α` and the state-feedback gain `−R_α⁻¹B'P_α`.
pub fn weighted_optimal(
    game: &GameDefinition,
    alpha: &WeightVector,
) -> Result<(RiccatiSolution, Matrix), SolveError> {
    let agg = model::aggregate(game, alpha)?;
    let sol = solve_are(game.a(), &agg.b, &agg.q, &agg.r)?;
    let f = lqr_gain(&agg.b, &agg.r, &sol.p)?;
    Ok((sol, f))
}

/// `−R⁻¹B'P`.
pub fn lqr_gain(b: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix, SolveError> {
    let chol = matlib::symmetrize(r)
        .cholesky()
        .ok_or_else(|| SolveError::Dimension("R is not positive definite".into()))?;
    Ok(-chol.solve(&(b.transpose() * p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{m, two_player};

    #[test]
    fn lyapunov_small_cases() {
        let y = solve_lyapunov(&m(&[&[-1.0]]), &m(&[&[2.0]])).unwrap();
        assert!((y[(0, 0)] - 1.0).abs() < 1e-14);
        let y = solve_lyapunov(&m(&[&[-1.0, 0.0], &[0.0, -2.0]]), &Matrix::identity(2, 2)).unwrap();
        assert!((y - m(&[&[0.5, 0.0], &[0.0, 0.25]])).norm() < 1e-14);
        assert!(matches!(
            solve_lyapunov(&m(&[&[0.0, 1.0], &[0.0, 0.0]]), &Matrix::identity(2, 2)),
            Err(SolveError::NotHurwitz { .. })
        ));
    }

    #[test]
    fn scalar_riccati() {
        let one = m(&[&[1.0]]);
        let s = solve_are(&m(&[&[0.0]]), &one, &one, &one).unwrap();
        assert!((s.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((s.margin + 1.0).abs() < 1e-12);
        let s = solve_are(&one, &one, &m(&[&[0.0]]), &one).unwrap();
        assert!((s.p[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((s.margin + 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_lqr_gain() {
        // a = 1, b = 2, q = 3, r = 4: p = r(a + sqrt(a² + b²q/r))/b²
        let s = solve_are(&m(&[&[1.0]]), &m(&[&[2.0]]), &m(&[&[3.0]]), &m(&[&[4.0]])).unwrap();
        let p = 4.0 * (1.0 + (1.0f64 + 3.0).sqrt()) / 4.0;
        assert!((s.p[(0, 0)] - p).abs() < 1e-12);
        let k = lqr_gain(&m(&[&[2.0]]), &m(&[&[4.0]]), &s.p).unwrap();
        assert!((k[(0, 0)] + p * 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_player_costs_and_optimum() {
        let g = two_player();
        let gain = model::assemble_gain(vec![m(&[&[-0.9818]]), m(&[&[-0.6643]])], &g).unwrap();
        let alpha = WeightVector::new(vec![0.9048, 0.0952]).unwrap();
        let x0 = Vector::from_vec(vec![1.0, 1.2]);
        let c = evaluate_costs(&gain, &g, &alpha, &x0).unwrap();
        assert!(c.cross_check_error() < 1e-9);
        let zero = evaluate_costs(&gain, &g, &alpha, &Vector::zeros(2)).unwrap();
        assert_eq!(zero.team, 0.0);
        let sol = team_riccati(&g).unwrap();
        assert!(sol.residual < 1e-8 * (1.0 + sol.p.norm()));
    }
}
