//! Games, weights, problems and structured gains.
//!
//! A [`GameDefinition`] is validated once at construction: cost weights,
//! output-matrix ranks and stabilizability of `(A, [B_1 … B_N])`. Everything
//! downstream assumes those hold.

mod graph;
pub mod io;

pub use graph::{build_from_graph, AgentSpec, DirectedGraph, InputCoupling, StateLayout};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matlib::{self, MatError, Matrix, Vector};

/// Structural residual above which a gain is not treated as structured.
pub const STRUCTURE_TOL: f64 = 1e-6;
/// Default strictness for the LMI conditions.
pub const DEFAULT_EPSILON: f64 = 1e-6;

const SYM_TOL: f64 = 1e-9;
const PD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("gain is not structured (residual {residual:e})")]
    NotStructured { residual: f64 },
    #[error("player index {index} out of range for {players} players")]
    PlayerIndex { index: usize, players: usize },
    #[error(transparent)]
    Mat(#[from] MatError),
}

pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        path: path.into(),
        reason: reason.into(),
    }
}

/// One player's data: `B_i` (n×m_i), `C_i` (s_i×n), `Q_i` (s_i×s_i), `R_i` (m_i×m_i).
#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub b: Matrix,
    pub c: Matrix,
    pub q: Matrix,
    pub r: Matrix,
}

/// Shared drift plus per-player input, output and cost matrices.
#[derive(Debug, Clone)]
pub struct GameDefinition {
    a: Matrix,
    players: Vec<Player>,
    b: Matrix,
    offsets: Vec<usize>,
    projectors: Vec<Matrix>,
    pinvs: Vec<Matrix>,
}

fn check_symmetric(m: &Matrix, path: &str) -> Result<(), ModelError> {
    let scale = 1.0 + m.amax();
    if matlib::asymmetry(m) > SYM_TOL * scale {
        return Err(invalid(path, "matrix is not symmetric"));
    }
    Ok(())
}

fn check_shape(m: &Matrix, rows: usize, cols: usize, path: &str) -> Result<(), ModelError> {
    if m.shape() != (rows, cols) {
        return Err(invalid(
            path,
            format!(
                "expected {rows}x{cols}, got {}x{}",
                m.nrows(),
                m.ncols()
            ),
        ));
    }
    matlib::check_finite(m).map_err(|e| invalid(path, e.to_string()))
}

impl GameDefinition {
    pub fn new(a: Matrix, players: Vec<Player>) -> Result<Self, ModelError> {
        let n = a.nrows();
        if n == 0 {
            return Err(invalid("A", "state dimension must be positive"));
        }
        check_shape(&a, n, n, "A")?;
        if players.is_empty() {
            return Err(invalid("players", "at least one player is required"));
        }
        let mut offsets = vec![0];
        let mut projectors = Vec::with_capacity(players.len());
        let mut pinvs = Vec::with_capacity(players.len());
        for (i, p) in players.iter().enumerate() {
            let at = |f: &str| format!("players[{i}].{f}");
            let mi = p.b.ncols();
            let si = p.c.nrows();
            if mi == 0 {
                return Err(invalid(at("B"), "player needs at least one input"));
            }
            if si == 0 {
                return Err(invalid(at("C"), "player needs at least one output"));
            }
            check_shape(&p.b, n, mi, &at("B"))?;
            check_shape(&p.c, si, n, &at("C"))?;
            check_shape(&p.q, si, si, &at("Q"))?;
            check_shape(&p.r, mi, mi, &at("R"))?;
            if si > n || matlib::rank(&p.c) != si {
                return Err(invalid(at("C"), "output matrix must have full row rank"));
            }
            check_symmetric(&p.q, &at("Q"))?;
            let qmin = matlib::min_eig(&p.q)?;
            if qmin < -matlib::PSD_TOL * (1.0 + p.q.amax()) {
                return Err(invalid(
                    at("Q"),
                    format!("must be positive semidefinite (min eigenvalue {qmin:e})"),
                ));
            }
            check_symmetric(&p.r, &at("R"))?;
            let rmin = matlib::min_eig(&p.r)?;
            if rmin <= PD_TOL {
                return Err(invalid(
                    at("R"),
                    format!("must be positive definite (min eigenvalue {rmin:e})"),
                ));
            }
            projectors.push(
                matlib::rowspace_complement_projector(&p.c)
                    .map_err(|e| invalid(at("C"), e.to_string()))?,
            );
            pinvs.push(matlib::right_pseudo_inverse(&p.c)?);
            offsets.push(offsets[i] + mi);
        }
        let m = *offsets.last().unwrap();
        let mut b = Matrix::zeros(n, m);
        for (i, p) in players.iter().enumerate() {
            b.view_mut((0, offsets[i]), (n, p.b.ncols())).copy_from(&p.b);
        }
        if !is_stabilizable(&a, &b)? {
            return Err(invalid(
                "players[*].B",
                "(A, [B_1 ... B_N]) is not stabilizable",
            ));
        }
        Ok(Self {
            a,
            players,
            b,
            offsets,
            projectors,
            pinvs,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, i: usize) -> Result<&Player, ModelError> {
        self.players.get(i).ok_or(ModelError::PlayerIndex {
            index: i,
            players: self.players.len(),
        })
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Total input dimension `m = Σ m_i`.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Stacked input matrix `[B_1 … B_N]`.
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Row offset of player `i`'s input block inside the joint input.
    pub fn input_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn input_dim(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// `I - C_i'(C_iC_i')⁻¹C_i`.
    pub fn kernel_projector(&self, i: usize) -> &Matrix {
        &self.projectors[i]
    }

    /// `C_i'(C_iC_i')⁻¹`.
    pub fn output_pinv(&self, i: usize) -> &Matrix {
        &self.pinvs[i]
    }

    /// Same game with every output matrix replaced by `I_n` and `Q_i` lifted
    /// to `C_i'Q_iC_i`, i.e. the full-information variant.
    pub fn full_information(&self) -> Result<Self, ModelError> {
        let n = self.n();
        let players = self
            .players
            .iter()
            .map(|p| Player {
                b: p.b.clone(),
                c: Matrix::identity(n, n),
                q: matlib::symmetrize(&(p.c.transpose() * &p.q * &p.c)),
                r: p.r.clone(),
            })
            .collect();
        Self::new(self.a.clone(), players)
    }

    /// Row block `G_i F` of a joint gain.
    pub fn gain_rows(&self, f: &Matrix, i: usize) -> Matrix {
        f.rows(self.offsets[i], self.input_dim(i)).into_owned()
    }
}

/// PBH test at every eigenvalue with real part `≥ -HURWITZ_TOL`.
pub fn is_stabilizable(a: &Matrix, b: &Matrix) -> Result<bool, MatError> {
    let n = a.nrows();
    for lam in matlib::eigenvalues(a)? {
        if lam.re < -matlib::HURWITZ_TOL {
            continue;
        }
        // Real embedding of the complex matrix [A - λI, B].
        let m = b.ncols();
        let mut re = Matrix::zeros(n, n + m);
        re.view_mut((0, 0), (n, n)).copy_from(a);
        for k in 0..n {
            re[(k, k)] -= lam.re;
        }
        re.view_mut((0, n), (n, m)).copy_from(b);
        let mut im = Matrix::zeros(n, n + m);
        for k in 0..n {
            im[(k, k)] = -lam.im;
        }
        let mut big = Matrix::zeros(2 * n, 2 * (n + m));
        big.view_mut((0, 0), (n, n + m)).copy_from(&re);
        big.view_mut((0, n + m), (n, n + m)).copy_from(&(-&im));
        big.view_mut((n, 0), (n, n + m)).copy_from(&im);
        big.view_mut((n, n + m), (n, n + m)).copy_from(&re);
        if matlib::rank(&big) < 2 * n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Weight vector in the open simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self, ModelError> {
        if alpha.is_empty() {
            return Err(invalid("alpha", "weight vector is empty"));
        }
        for (i, &a) in alpha.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(invalid(format!("alpha[{i}]"), format!("{a} is not in (0, 1)")));
            }
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(invalid("alpha", format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(alpha))
    }

    pub fn uniform(n: usize) -> Result<Self, ModelError> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().all(|a| (a - u).abs() <= 1e-12)
    }
}

/// Interior points of the weight simplex on a regular grid of spacing `step`.
///
/// For two players this is `α_1 ∈ {step, 2·step, …, 1 − step}`.
pub fn simplex_grid(players: usize, step: f64) -> Result<Vec<WeightVector>, ModelError> {
    if !(step > 0.0 && step < 1.0) {
        return Err(invalid("grid", format!("step {step} must lie in (0, 1)")));
    }
    let ticks = (1.0 / step).round() as usize;
    if ((ticks as f64) * step - 1.0).abs() > 1e-9 {
        return Err(invalid("grid", format!("1/{step} is not an integer")));
    }
    if players < 2 || ticks < players {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut counts = vec![1usize; players - 1];
    loop {
        let used: usize = counts.iter().sum();
        if used < ticks {
            let mut alpha: Vec<f64> = counts.iter().map(|&c| c as f64 / ticks as f64).collect();
            let rest = 1.0 - alpha.iter().sum::<f64>();
            alpha.push(rest);
            out.push(WeightVector::new(alpha)?);
        }
        // odometer over compositions with every part ≥ 1
        let mut k = players - 2;
        loop {
            counts[k] += 1;
            if counts.iter().sum::<usize>() < ticks {
                break;
            }
            counts[k] = 1;
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Certify the cost for the single stored initial condition.
    #[default]
    Point,
    /// Certify the cost for every initial condition with `‖x0‖ ≤ r`.
    Ball,
}

/// A game together with the guaranteed-cost data `(α, δ, r, x0, mode, ε)`.
#[derive(Debug, Clone)]
pub struct GcscProblem {
    pub game: GameDefinition,
    pub alpha: WeightVector,
    pub delta: f64,
    pub radius: f64,
    pub x0: Option<Vector>,
    pub mode: Mode,
    pub epsilon: f64,
}

impl GcscProblem {
    pub fn new(
        game: GameDefinition,
        alpha: WeightVector,
        delta: f64,
        radius: f64,
        x0: Option<Vector>,
        mode: Mode,
        epsilon: f64,
    ) -> Result<Self, ModelError> {
        if alpha.len() != game.num_players() {
            return Err(invalid(
                "alpha",
                format!(
                    "{} weights for {} players",
                    alpha.len(),
                    game.num_players()
                ),
            ));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta", "must be positive"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "must be positive"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be positive"));
        }
        if let Some(x) = &x0 {
            if x.len() != game.n() {
                return Err(invalid(
                    "x0",
                    format!("expected {} entries, got {}", game.n(), x.len()),
                ));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(invalid("x0", "non-finite entry"));
            }
            if x.norm() > radius * (1.0 + 1e-12) {
                return Err(invalid("x0", format!("‖x0‖ = {} exceeds radius {radius}", x.norm())));
            }
        }
        if mode == Mode::Point && x0.is_none() {
            return Err(invalid("x0", "point mode requires an initial condition"));
        }
        Ok(Self {
            game,
            alpha,
            delta,
            radius,
            x0,
            mode,
            epsilon,
        })
    }

    /// Point-mode problem with `r = ‖x0‖` and the default strictness.
    pub fn point(
        game: GameDefinition,
        alpha: WeightVector,
        delta: f64,
        x0: Vector,
    ) -> Result<Self, ModelError> {
        let r = x0.norm().max(f64::MIN_POSITIVE);
        Self::new(game, alpha, delta, r, Some(x0), Mode::Point, DEFAULT_EPSILON)
    }

    /// Same data with a different threshold.
    pub fn with_delta(&self, delta: f64) -> Result<Self, ModelError> {
        Self::new(
            self.game.clone(),
            self.alpha.clone(),
            delta,
            self.radius,
            self.x0.clone(),
            self.mode,
            self.epsilon,
        )
    }

    pub fn with_alpha(&self, alpha: WeightVector) -> Result<Self, ModelError> {
        Self::new(
            self.game.clone(),
            alpha,
            self.delta,
            self.radius,
            self.x0.clone(),
            self.mode,
            self.epsilon,
        )
    }

    /// Slack required on the cost-bound constraint: `ε·max(1, δ)`.
    pub fn bound_slack(&self) -> f64 {
        self.epsilon * self.delta.max(1.0)
    }
}

/// Per-player output-feedback blocks `F_i` and the joint gain whose row
/// block `i` is `F_i C_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGain {
    blocks: Vec<Matrix>,
    full: Matrix,
}

impl StructuredGain {
    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    /// Joint state-feedback matrix `F` (m×n).
    pub fn matrix(&self) -> &Matrix {
        &self.full
    }
}

/// Weighted aggregates `(Q_α, R_α, B)` or the unweighted team aggregates.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub q: Matrix,
    pub r: Matrix,
    pub b: Matrix,
}

fn aggregate_with(game: &GameDefinition, weights: &[f64]) -> Result<Aggregate, ModelError> {
    let n = game.n();
    let mut q = Matrix::zeros(n, n);
    let mut r_blocks = Vec::with_capacity(game.num_players());
    for (p, &w) in game.players().iter().zip(weights) {
        q += p.c.transpose() * (&p.q * w) * &p.c;
        r_blocks.push(&p.r * w);
    }
    Ok(Aggregate {
        q: matlib::symmetrize(&q),
        r: matlib::direct_sum(&r_blocks)?,
        b: game.b().clone(),
    })
}

/// `Q_α = Σ C_i'(α_iQ_i)C_i`, `R_α = ⊕ α_iR_i`, `B = [B_1 … B_N]`.
pub fn aggregate(game: &GameDefinition, alpha: &WeightVector) -> Result<Aggregate, ModelError> {
    if alpha.len() != game.num_players() {
        return Err(invalid(
            "alpha",
            format!("{} weights for {} players", alpha.len(), game.num_players()),
        ));
    }
    aggregate_with(game, alpha.as_slice())
}

/// Unweighted team aggregates `(Q̃, R̄, B̃)`.
pub fn team_matrices(game: &GameDefinition) -> Aggregate {
    aggregate_with(game, &vec![1.0; game.num_players()]).expect("blocks are square")
}

/// Block selector `G_i` (m_i × m).
pub fn selector(game: &GameDefinition, i: usize) -> Result<Matrix, ModelError> {
    game.player(i)?;
    let mi = game.input_dim(i);
    let mut g = Matrix::zeros(mi, game.m());
    g.view_mut((0, game.input_offset(i)), (mi, mi))
        .fill_with_identity();
    Ok(g)
}

/// `max_i ‖G_i F (I − C_i'(C_iC_i')⁻¹C_i)‖_F`; zero iff `F` is structured.
pub fn structural_residual(f: &Matrix, game: &GameDefinition) -> f64 {
    (0..game.num_players())
        .map(|i| (game.gain_rows(f, i) * game.kernel_projector(i)).norm())
        .fold(0.0, f64::max)
}

/// Joint gain from per-player blocks: row block `i` is `F_i C_i`.
pub fn assemble_gain(blocks: Vec<Matrix>, game: &GameDefinition) -> Result<StructuredGain, ModelError> {
    if blocks.len() != game.num_players() {
        return Err(invalid(
            "blocks",
            format!("{} blocks for {} players", blocks.len(), game.num_players()),
        ));
    }
    let mut full = Matrix::zeros(game.m(), game.n());
    for (i, (f, p)) in blocks.iter().zip(game.players()).enumerate() {
        let (mi, si) = (game.input_dim(i), p.c.nrows());
        check_shape(f, mi, si, &format!("blocks[{i}]"))?;
        full.view_mut((game.input_offset(i), 0), (mi, game.n()))
            .copy_from(&(f * &p.c));
    }
    Ok(StructuredGain { blocks, full })
}

/// Recovers `F_i = G_i F C_i'(C_iC_i')⁻¹` from a structured joint gain.
pub fn extract_blocks(f: &Matrix, game: &GameDefinition) -> Result<Vec<Matrix>, ModelError> {
    if f.shape() != (game.m(), game.n()) {
        return Err(invalid(
            "F",
            format!("expected {}x{}, got {}x{}", game.m(), game.n(), f.nrows(), f.ncols()),
        ));
    }
    let residual = structural_residual(f, game);
    if residual > STRUCTURE_TOL {
        return Err(ModelError::NotStructured { residual });
    }
    Ok((0..game.num_players())
        .map(|i| game.gain_rows(f, i) * game.output_pinv(i))
        .collect())
}

/// Wraps an already-structured joint gain, projecting out rounding in the
/// forbidden directions.
pub fn structured_from_matrix(f: &Matrix, game: &GameDefinition) -> Result<StructuredGain, ModelError> {
    assemble_gain(extract_blocks(f, game)?, game)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn aggregate_two_player() {
        let g = two_player();
        let alpha = WeightVector::new(vec![0.9048, 0.0952]).unwrap();
        let agg = aggregate(&g, &alpha).unwrap();
        assert!((agg.q.clone() - m(&[&[0.9048, 0.0], &[0.0, 0.476]])).norm() < 1e-12);
        assert!((agg.r.clone() - m(&[&[0.9048, 0.0], &[0.0, 0.238]])).norm() < 1e-12);
        assert_eq!(agg.b, Matrix::identity(2, 2));
    }

    #[test]
    fn aggregate_zero_costs_and_identical_players() {
        let a = m(&[&[-1.0, 0.0], &[0.0, -1.0]]);
        let p = Player {
            b: m(&[&[1.0], &[1.0]]),
            c: m(&[&[1.0, 1.0]]),
            q: m(&[&[0.0]]),
            r: m(&[&[1.0]]),
        };
        let g = GameDefinition::new(a.clone(), vec![p.clone(), p.clone()]).unwrap();
        let agg = aggregate(&g, &WeightVector::uniform(2).unwrap()).unwrap();
        assert_eq!(agg.q, Matrix::zeros(2, 2));

        let p = Player { q: m(&[&[3.0]]), ..p };
        let g = GameDefinition::new(a, vec![p.clone(), p.clone()]).unwrap();
        let agg = aggregate(&g, &WeightVector::uniform(2).unwrap()).unwrap();
        let single = p.c.transpose() * &p.q * &p.c;
        assert!((agg.q - &single).norm() < 1e-12);
        let team = team_matrices(&g);
        assert!((team.q - single * 2.0).norm() < 1e-12);
    }

    #[test]
    fn team_matrices_two_player() {
        let t = team_matrices(&two_player());
        assert_eq!(t.q, m(&[&[1.0, 0.0], &[0.0, 5.0]]));
        assert_eq!(t.r, m(&[&[1.0, 0.0], &[0.0, 2.5]]));
        assert_eq!(t.b, Matrix::identity(2, 2));
    }

    #[test]
    fn selectors_partition_identity() {
        let g = two_player();
        assert_eq!(selector(&g, 0).unwrap(), m(&[&[1.0, 0.0]]));
        let sum = (0..2)
            .map(|i| {
                let s = selector(&g, i).unwrap();
                s.transpose() * s
            })
            .fold(Matrix::zeros(2, 2), |acc, x| acc + x);
        assert_eq!(sum, Matrix::identity(2, 2));
        assert!(matches!(selector(&g, 2), Err(ModelError::PlayerIndex { .. })));
    }

    #[test]
    fn structural_residual_detects_forbidden_entry() {
        let g = two_player();
        assert_eq!(structural_residual(&m(&[&[-1.0, 0.0], &[0.0, -2.0]]), &g), 0.0);
        let bad = m(&[&[-1.0, 0.3], &[0.0, -2.0]]);
        assert!((structural_residual(&bad, &g) - 0.3).abs() < 1e-15);
        let full = g.full_information().unwrap();
        assert!(structural_residual(&bad, &full) < 1e-15);
    }

    #[test]
    fn assemble_and_extract() {
        let g = two_player();
        let gain = assemble_gain(vec![m(&[&[-0.9818]]), m(&[&[-0.6643]])], &g).unwrap();
        assert_eq!(gain.matrix(), &m(&[&[-0.9818, 0.0], &[0.0, -0.6643]]));
        let back = extract_blocks(gain.matrix(), &g).unwrap();
        assert_eq!(back, gain.blocks());
        let zero = assemble_gain(vec![m(&[&[0.0]]), m(&[&[0.0]])], &g).unwrap();
        assert_eq!(zero.matrix(), &Matrix::zeros(2, 2));
        assert!(matches!(
            extract_blocks(&m(&[&[1.0, 1.0], &[0.0, 1.0]]), &g),
            Err(ModelError::NotStructured { .. })
        ));
        assert!(assemble_gain(vec![m(&[&[1.0, 2.0]]), m(&[&[0.0]])], &g).is_err());
    }

    #[test]
    fn extract_with_full_information_is_row_selection() {
        let g = two_player().full_information().unwrap();
        let f = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let blocks = extract_blocks(&f, &g).unwrap();
        assert!((&blocks[0] - m(&[&[1.0, 2.0]])).norm() < 1e-14);
        assert!((&blocks[1] - m(&[&[3.0, 4.0]])).norm() < 1e-14);
    }

    #[test]
    fn validation_errors_carry_paths() {
        let g = two_player();
        let mut players = g.players().to_vec();
        players[1].q = m(&[&[-1.0]]);
        let err = GameDefinition::new(g.a().clone(), players).unwrap_err();
        assert!(err.to_string().starts_with("players[1].Q"), "{err}");

        let mut players = g.players().to_vec();
        players[0].r = m(&[&[0.0]]);
        let err = GameDefinition::new(g.a().clone(), players).unwrap_err();
        assert!(err.to_string().starts_with("players[0].R"), "{err}");

        // Double integrator with an input that cannot reach the position.
        let a = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let p = Player {
            b: m(&[&[1.0], &[0.0]]),
            c: m(&[&[1.0, 0.0]]),
            q: m(&[&[1.0]]),
            r: m(&[&[1.0]]),
        };
        assert!(GameDefinition::new(a, vec![p]).is_err());
    }

    #[test]
    fn weights_validate_open_simplex() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![1.0]).is_err());
        assert!(WeightVector::new(vec![0.0, 1.0]).is_err());
        assert!(WeightVector::new(vec![0.3, 0.6]).is_err());
    }

    #[test]
    fn simplex_grid_two_and_three_players() {
        let g = simplex_grid(2, 0.01).unwrap();
        assert_eq!(g.len(), 99);
        assert!((g[0].as_slice()[0] - 0.01).abs() < 1e-15);
        let g3 = simplex_grid(3, 0.25).unwrap();
        // compositions of 4 into 3 positive parts
        assert_eq!(g3.len(), 3);
        assert_eq!(simplex_grid(2, 0.5).unwrap().len(), 1);
    }

    #[test]
    fn aggregate_is_linear_in_weights() {
        let g = two_player();
        let a = WeightVector::new(vec![0.2, 0.8]).unwrap();
        let b = WeightVector::new(vec![0.7, 0.3]).unwrap();
        let lam = 0.35;
        let mix = WeightVector::new(vec![lam * 0.2 + (1.0 - lam) * 0.7, lam * 0.8 + (1.0 - lam) * 0.3])
            .unwrap();
        let (qa, qb, qm) = (
            aggregate(&g, &a).unwrap(),
            aggregate(&g, &b).unwrap(),
            aggregate(&g, &mix).unwrap(),
        );
        assert!((qm.q - (qa.q * lam + qb.q * (1.0 - lam))).norm() < 1e-14);
        assert!((qm.r - (qa.r * lam + qb.r * (1.0 - lam))).norm() < 1e-14);
    }

    #[test]
    fn problem_validation() {
        let g = two_player();
        let alpha = WeightVector::uniform(2).unwrap();
        let x0 = Vector::from_vec(vec![1.0, 1.2]);
        assert!(GcscProblem::point(g.clone(), alpha.clone(), 1.75, x0.clone()).is_ok());
        assert!(GcscProblem::point(g.clone(), alpha.clone(), 0.0, x0.clone()).is_err());
        assert!(
            GcscProblem::new(g.clone(), alpha.clone(), 1.0, 1.0, Some(x0), Mode::Point, 1e-6).is_err()
        );
        assert!(GcscProblem::new(g, alpha, 1.0, 1.0, None, Mode::Point, 1e-6).is_err());
    }
}
