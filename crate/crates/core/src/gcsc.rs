//! Guaranteed cost structured control: verification, two-stage synthesis,
//! threshold search, weight scans and performance ratios.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lmi::{
    self, AffineMatrixMap, FeasibilityReport, LmiCertificate, LmiError, LmiSystem, Sense,
    SolverOptions,
};
use crate::lyapriccati::{self, CostBreakdown, SolveError};
use crate::matlib::{self, MatError, Matrix, Vector};
use crate::model::{
    self, GameDefinition, GcscProblem, Mode, ModelError, StructuredGain, WeightVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GcscError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Lmi(#[from] LmiError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}

/// Why a gain was not certified.
#[derive(Debug, Error, Clone, PartialEq, Serialize)]
#[serde(tag = "reason")]
pub enum Rejection {
    #[error("closed loop is not Hurwitz (max real part {margin:e})")]
    NotStabilizing { margin: f64 },
    #[error("no certificate found: best LMI margin {margin:e} below {target:e} (inconclusive)")]
    MarginShortfall { margin: f64, target: f64 },
    #[error("certificate found but the cost oracle gives J_alpha = {j_alpha} >= delta = {delta}")]
    OracleMismatch { j_alpha: f64, delta: f64 },
    #[error("{message}")]
    Invalid { message: String },
}

impl From<GcscError> for Rejection {
    fn from(e: GcscError) -> Self {
        Rejection::Invalid {
            message: e.to_string(),
        }
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    matlib::to_rows(m)
}

fn serialize_matrix<S: serde::Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    rows(m).serialize(s)
}

/// Positive definite `P` satisfying the verification inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    #[serde(rename = "P", serialize_with = "serialize_matrix")]
    pub p: Matrix,
    pub lmi_margin: f64,
    pub epsilon: f64,
    pub mode: Mode,
    /// `x0'Px0` in point mode, `λ_max(P)` in ball mode.
    pub bound_value: f64,
    /// `δ` in point mode, `δ/r²` in ball mode.
    pub bound_limit: f64,
    pub slacks: Vec<lmi::ConstraintSlack>,
    /// `J_α` of the certified gain from the Lyapunov oracle.
    pub j_alpha: Option<f64>,
    pub closed_loop_margin: f64,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

fn sym_dim(n: usize) -> usize {
    lmi::sym_dim(n)
}

fn add_identity(m: &mut Matrix, c: f64) {
    for i in 0..m.nrows() {
        m[(i, i)] += c;
    }
}

/// LMI system in the symmetric variable `P` certifying a fixed gain.
pub fn verification_system(f: &Matrix, problem: &GcscProblem) -> Result<LmiSystem, GcscError> {
    let game = &problem.game;
    let n = game.n();
    let k = sym_dim(n);
    let agg = model::aggregate(game, &problem.alpha)?;
    let a_cl = lyapriccati::closed_loop(game, f);
    let w = matlib::symmetrize(&(&agg.q + f.transpose() * &agg.r * f));
    let shift = problem.bound_slack() - problem.epsilon;
    let mut maps = vec![
        AffineMatrixMap::from_affine("lyapunov", Sense::RequireNegDef, k, |z| {
            let p = lmi::sym_from_coords(n, z);
            a_cl.transpose() * &p + &p * &a_cl + &w
        })?,
        AffineMatrixMap::from_affine("positivity", Sense::RequirePosDef, k, |z| {
            lmi::sym_from_coords(n, z)
        })?,
    ];
    match problem.mode {
        Mode::Point => {
            let x0 = problem.x0.clone().expect("point mode carries x0");
            let delta = problem.delta;
            maps.push(AffineMatrixMap::from_affine("bound", Sense::RequirePosDef, k, |z| {
                let p = lmi::sym_from_coords(n, z);
                Matrix::from_element(1, 1, delta - matlib::quad_form(&p, &x0) - shift)
            })?);
        }
        Mode::Ball => {
            let lim = problem.delta / (problem.radius * problem.radius);
            maps.push(AffineMatrixMap::from_affine("bound", Sense::RequirePosDef, k, |z| {
                let mut m = -lmi::sym_from_coords(n, z);
                add_identity(&mut m, lim - shift);
                m
            })?);
        }
    }
    Ok(LmiSystem::new(k, maps)?)
}

/// Lyapunov-built candidate `P = Y_W + γ Z_I` balancing the Lyapunov slack
/// `γ` against the bound slack.
fn verification_candidate(
    a_cl: &Matrix,
    w: &Matrix,
    problem: &GcscProblem,
) -> Result<Matrix, GcscError> {
    let n = a_cl.nrows();
    let y = lyapriccati::solve_lyapunov(a_cl, w)?;
    let z1 = lyapriccati::solve_lyapunov(a_cl, &Matrix::identity(n, n))?;
    let shift = problem.bound_slack() - problem.epsilon;
    let (room, rate) = match problem.mode {
        Mode::Point => {
            let x0 = problem.x0.as_ref().expect("point mode carries x0");
            (
                problem.delta - matlib::quad_form(&y, x0) - shift,
                matlib::quad_form(&z1, x0),
            )
        }
        Mode::Ball => (
            problem.delta / (problem.radius * problem.radius) - matlib::max_eig(&y)? - shift,
            matlib::max_eig(&z1)?,
        ),
    };
    let gamma = (room / (1.0 + rate)).max(0.0);
    Ok(matlib::symmetrize(&(y + z1 * gamma)))
}

/// Checks the verification inequalities for a structured gain and
/// cross-checks the certified bound with the Lyapunov cost oracle.
pub fn verify(gain: &StructuredGain, problem: &GcscProblem) -> Result<Certificate, Rejection> {
    verify_with(gain, problem, &SolverOptions::default())
}

pub fn verify_with(
    gain: &StructuredGain,
    problem: &GcscProblem,
    options: &SolverOptions,
) -> Result<Certificate, Rejection> {
    let game = &problem.game;
    let f = gain.matrix();
    if f.shape() != (game.m(), game.n()) {
        return Err(Rejection::Invalid {
            message: "gain does not match the game".into(),
        });
    }
    let a_cl = lyapriccati::closed_loop(game, f);
    let cl_margin = matlib::hurwitz_margin(&a_cl).map_err(GcscError::from)?;
    if cl_margin >= -matlib::HURWITZ_TOL {
        return Err(Rejection::NotStabilizing { margin: cl_margin });
    }
    let system = verification_system(f, problem)?;
    let eps = problem.epsilon;
    let agg = model::aggregate(game, &problem.alpha).map_err(GcscError::from)?;
    let w = matlib::symmetrize(&(&agg.q + f.transpose() * &agg.r * f));
    let start = lmi::sym_to_coords(&verification_candidate(&a_cl, &w, problem)?);
    let mut z = start.clone();
    if system.margin(&z).map_err(GcscError::from)? < eps {
        let rep = lmi::solve_feasibility_from(&system, eps, &start, options)
            .map_err(GcscError::from)?;
        if !rep.is_feasible() {
            return Err(Rejection::MarginShortfall {
                margin: rep.margin,
                target: eps,
            });
        }
        z = rep.z;
    }
    let cert = LmiCertificate::new(&system, &z).map_err(GcscError::from)?;
    let p = lmi::sym_from_coords(game.n(), &z);
    let (bound_value, bound_limit) = match problem.mode {
        Mode::Point => (
            matlib::quad_form(&p, problem.x0.as_ref().expect("point mode carries x0")),
            problem.delta,
        ),
        Mode::Ball => (
            matlib::max_eig(&p).map_err(GcscError::from)?,
            problem.delta / (problem.radius * problem.radius),
        ),
    };
    let j_alpha = match &problem.x0 {
        Some(x0) => {
            let costs = lyapriccati::evaluate_costs(gain, game, &problem.alpha, x0)
                .map_err(GcscError::from)?;
            if costs.weighted >= problem.delta {
                return Err(Rejection::OracleMismatch {
                    j_alpha: costs.weighted,
                    delta: problem.delta,
                });
            }
            Some(costs.weighted)
        }
        None => None,
    };
    Ok(Certificate {
        p,
        lmi_margin: cert.margin,
        epsilon: eps,
        mode: problem.mode,
        bound_value,
        bound_limit,
        slacks: cert.slacks,
        j_alpha,
        closed_loop_margin: cl_margin,
    })
}

/// Smallest slack of `problem`'s verification inequalities at the
/// certificate's `P`; a value `≥ ε` means the certificate carries over.
pub fn recheck(cert: &Certificate, f: &Matrix, problem: &GcscProblem) -> Result<f64, GcscError> {
    let system = verification_system(f, problem)?;
    Ok(system.margin(&lmi::sym_to_coords(&cert.p))?)
}

/// Orthonormal basis of `ker [B' 0 I_m]`, of dimension `2n`.
pub fn null_basis_nb(game: &GameDefinition) -> Matrix {
    let (n, m) = (game.n(), game.m());
    let mut k = Matrix::zeros(m, 2 * n + m);
    k.view_mut((0, 0), (m, n)).copy_from(&game.b().transpose());
    k.view_mut((0, 2 * n), (m, m)).fill_with_identity();
    matlib::orthonormal_null_basis(&k)
}

/// `Ω(Y)` with blocks sized `n, n, m`.
fn omega(y: &Matrix, a: &Matrix, sqrt_q: &Matrix, r_inv: &Matrix) -> Matrix {
    let n = a.nrows();
    let m = r_inv.nrows();
    let mut o = Matrix::zeros(2 * n + m, 2 * n + m);
    o.view_mut((0, 0), (n, n))
        .copy_from(&(y * a.transpose() + a * y));
    let qy = sqrt_q * y;
    o.view_mut((n, 0), (n, n)).copy_from(&qy);
    o.view_mut((0, n), (n, n)).copy_from(&qy.transpose());
    o.view_mut((n, n), (n, n)).fill_with_identity();
    o.view_mut((n, n), (n, n)).neg_mut();
    o.view_mut((2 * n, 2 * n), (m, m)).copy_from(&(-r_inv));
    o
}

/// Stage-one LMI system in the symmetric variable `Y`.
pub fn stage1_system(problem: &GcscProblem) -> Result<LmiSystem, GcscError> {
    let game = &problem.game;
    let n = game.n();
    let k = sym_dim(n);
    let agg = model::aggregate(game, &problem.alpha)?;
    let sqrt_q = matlib::sym_sqrt_psd(&agg.q)?;
    let r_inv = matlib::symmetrize(
        &agg.r
            .clone()
            .cholesky()
            .ok_or(MatError::NotPsd { min_eig: 0.0 })?
            .inverse(),
    );
    let nb = null_basis_nb(game);
    let a = game.a().clone();
    let mut maps = vec![AffineMatrixMap::from_affine("Y", Sense::RequirePosDef, k, |z| {
        lmi::sym_from_coords(n, z)
    })?];
    match problem.mode {
        Mode::Point => {
            let x0 = problem.x0.clone().expect("point mode carries x0");
            let delta = problem.delta;
            maps.push(AffineMatrixMap::from_affine("bound", Sense::RequirePosDef, k, |z| {
                let mut b = Matrix::zeros(n + 1, n + 1);
                b[(0, 0)] = delta;
                for i in 0..n {
                    b[(0, i + 1)] = x0[i];
                    b[(i + 1, 0)] = x0[i];
                }
                b.view_mut((1, 1), (n, n))
                    .copy_from(&lmi::sym_from_coords(n, z));
                b
            })?);
        }
        Mode::Ball => {
            let c = problem.radius * problem.radius / problem.delta;
            maps.push(AffineMatrixMap::from_affine("bound", Sense::RequirePosDef, k, |z| {
                let mut y = lmi::sym_from_coords(n, z);
                add_identity(&mut y, -c);
                y
            })?);
        }
    }
    maps.push(AffineMatrixMap::from_affine(
        "projected",
        Sense::RequireNegDef,
        k,
        |z| {
            let y = lmi::sym_from_coords(n, z);
            nb.transpose() * omega(&y, &a, &sqrt_q, &r_inv) * &nb
        },
    )?);
    Ok(LmiSystem::new(k, maps)?)
}

/// Stage-one solve from `Y = 0`.
pub fn stage1_solve(
    problem: &GcscProblem,
    options: &SolverOptions,
) -> Result<(Matrix, FeasibilityReport), GcscError> {
    let system = stage1_system(problem)?;
    let rep = lmi::solve_feasibility(&system, problem.epsilon, options);
    Ok((lmi::sym_from_coords(problem.game.n(), &rep.z), rep))
}

/// Number of entries in the per-player blocks `F_i`.
fn block_dim(game: &GameDefinition) -> usize {
    game.players()
        .iter()
        .map(|p| p.b.ncols() * p.c.nrows())
        .sum()
}

fn blocks_from_coords(game: &GameDefinition, z: &[f64]) -> Vec<Matrix> {
    let mut k = 0;
    game.players()
        .iter()
        .map(|p| {
            let (mi, si) = (p.b.ncols(), p.c.nrows());
            let b = Matrix::from_row_slice(mi, si, &z[k..k + mi * si]);
            k += mi * si;
            b
        })
        .collect()
}

fn coords_from_blocks(blocks: &[Matrix]) -> Vec<f64> {
    blocks
        .iter()
        .flat_map(|b| {
            (0..b.nrows())
                .flat_map(move |i| (0..b.ncols()).map(move |j| b[(i, j)]))
        })
        .collect()
}

/// Stage-two LMI system in the gain blocks at a fixed `P`.
pub fn stage2_system(problem: &GcscProblem, p: &Matrix) -> Result<LmiSystem, GcscError> {
    let game = &problem.game;
    let (n, m) = (game.n(), game.m());
    let k = block_dim(game);
    let agg = model::aggregate(game, &problem.alpha)?;
    let sqrt_q = matlib::sym_sqrt_psd(&agg.q)?;
    let sqrt_r = matlib::sym_sqrt_psd(&agg.r)?;
    let map = AffineMatrixMap::from_affine("closed-loop", Sense::RequireNegDef, k, |z| {
        let blocks = blocks_from_coords(game, z);
        let f = model::assemble_gain(blocks, game)
            .expect("block shapes follow the game")
            .matrix()
            .clone();
        let a_cl = game.a() + game.b() * &f;
        let rf = &sqrt_r * &f;
        let mut t = Matrix::zeros(2 * n + m, 2 * n + m);
        t.view_mut((0, 0), (n, n))
            .copy_from(&(a_cl.transpose() * p + p * &a_cl));
        t.view_mut((n, 0), (n, n)).copy_from(&sqrt_q);
        t.view_mut((0, n), (n, n)).copy_from(&sqrt_q);
        t.view_mut((n, n), (n, n)).fill_with_identity();
        t.view_mut((n, n), (n, n)).neg_mut();
        t.view_mut((2 * n, 0), (m, n)).copy_from(&rf);
        t.view_mut((0, 2 * n), (n, m)).copy_from(&rf.transpose());
        t.view_mut((2 * n, 2 * n), (m, m)).fill_with_identity();
        t.view_mut((2 * n, 2 * n), (m, m)).neg_mut();
        t
    })?;
    Ok(LmiSystem::new(k, vec![map])?)
}

/// Structural projection of `−R_α⁻¹B'P`, used as the stage-two start.
fn projected_lqr_blocks(problem: &GcscProblem, p: &Matrix) -> Result<Vec<Matrix>, GcscError> {
    let game = &problem.game;
    let agg = model::aggregate(game, &problem.alpha)?;
    let f = lyapriccati::lqr_gain(&agg.b, &agg.r, p)?;
    Ok((0..game.num_players())
        .map(|i| game.gain_rows(&f, i) * game.output_pinv(i))
        .collect())
}

/// Stage-two solve at `P`, started from the structural projection of the
/// unconstrained gain `−R_α⁻¹B'P`.
pub fn stage2_solve(
    problem: &GcscProblem,
    p: &Matrix,
    options: &SolverOptions,
) -> Result<(StructuredGain, FeasibilityReport), GcscError> {
    let system = stage2_system(problem, p)?;
    let start = coords_from_blocks(&projected_lqr_blocks(problem, p)?);
    let rep = lmi::solve_feasibility_from(&system, problem.epsilon, &start, options)?;
    let gain = model::assemble_gain(blocks_from_coords(&problem.game, &rep.z), &problem.game)?;
    Ok((gain, rep))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    Stage1,
    Stage2,
    Verify,
}

/// One stage-one point tried in stage two.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateAttempt {
    pub name: String,
    pub stage1_margin: f64,
    pub stage2_margin: Option<f64>,
    pub stage2_iterations: Option<usize>,
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisDiagnostics {
    pub stage1_margin: f64,
    pub stage1_iterations: usize,
    pub candidates: Vec<CandidateAttempt>,
    pub chosen: Option<String>,
    pub stage2_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisResult {
    #[serde(serialize_with = "serialize_gain")]
    pub gain: StructuredGain,
    pub certificate: Certificate,
    #[serde(rename = "P_alpha", serialize_with = "serialize_matrix")]
    pub p_alpha: Matrix,
    pub diagnostics: SynthesisDiagnostics,
    pub costs: Option<CostBreakdown>,
    pub j_alpha: Option<f64>,
}

fn serialize_gain<S: serde::Serializer>(g: &StructuredGain, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("gain", 2)?;
    st.serialize_field(
        "blocks",
        &g.blocks().iter().map(rows).collect::<Vec<_>>(),
    )?;
    st.serialize_field("F", &rows(g.matrix()))?;
    st.end()
}

impl SynthesisResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[derive(Debug, Error, Clone, Serialize)]
#[error("synthesis fell short at {stage:?} (inconclusive)")]
pub struct Shortfall {
    pub stage: Stage,
    pub diagnostics: SynthesisDiagnostics,
    pub rejection: Option<Rejection>,
}

#[derive(Debug, Error, Clone)]
pub enum SynthesisError {
    #[error(transparent)]
    Shortfall(#[from] Box<Shortfall>),
    #[error(transparent)]
    Invalid(#[from] GcscError),
}

/// Stage-one points tried in order: the solver's first strictly feasible
/// point, the analytic center of the stage-one set, and its maximum-margin
/// point.
///
/// The center is taken for the bound and projected constraints only; both
/// bound forms already imply `Y ≻ 0`, and a barrier term for it pulls the
/// center toward small `Y`.
fn stage1_candidates(
    system: &LmiSystem,
    first: &FeasibilityReport,
) -> Result<Vec<(String, Vec<f64>)>, GcscError> {
    let mut out = vec![("first-feasible".to_string(), first.z.clone())];
    let essential = LmiSystem::new(
        system.k(),
        system
            .maps()
            .iter()
            .filter(|m| m.label() != "Y")
            .cloned()
            .collect(),
    )?
    .with_box_radius(system.box_radius());
    let center = lmi::analytic_center(&essential, &first.z, 200)?;
    out.push(("analytic-center".to_string(), center));
    let best = lmi::maximize_margin(system, &first.z)?;
    out.push(("max-margin".to_string(), best.z));
    Ok(out)
}

/// Two-stage synthesis followed by verification of the resulting gain.
pub fn synthesize(problem: &GcscProblem) -> Result<SynthesisResult, SynthesisError> {
    synthesize_with(problem, &SolverOptions::default())
}

pub fn synthesize_with(
    problem: &GcscProblem,
    options: &SolverOptions,
) -> Result<SynthesisResult, SynthesisError> {
    let n = problem.game.n();
    let eps = problem.epsilon;
    let system = stage1_system(problem)?;
    let first = lmi::solve_feasibility(&system, eps, options);
    let mut diag = SynthesisDiagnostics {
        stage1_margin: first.margin,
        stage1_iterations: first.iterations,
        candidates: Vec::new(),
        chosen: None,
        stage2_margin: None,
    };
    if !first.is_feasible() {
        return Err(Box::new(Shortfall {
            stage: Stage::Stage1,
            diagnostics: diag,
            rejection: None,
        })
        .into());
    }
    let mut last_rejection = None;
    let mut reached_verify = false;
    for (name, z) in stage1_candidates(&system, &first)? {
        let stage1_margin = system.margin(&z).map_err(GcscError::from)?;
        let mut attempt = CandidateAttempt {
            name: name.clone(),
            stage1_margin,
            stage2_margin: None,
            stage2_iterations: None,
            verified: false,
        };
        if stage1_margin < eps {
            diag.candidates.push(attempt);
            continue;
        }
        let y = lmi::sym_from_coords(n, &z);
        let Some(p) = y.clone().cholesky().map(|c| matlib::symmetrize(&c.inverse())) else {
            diag.candidates.push(attempt);
            continue;
        };
        let (gain, rep) = stage2_solve(problem, &p, options)?;
        attempt.stage2_margin = Some(rep.margin);
        attempt.stage2_iterations = Some(rep.iterations);
        if !rep.is_feasible() {
            diag.candidates.push(attempt);
            continue;
        }
        reached_verify = true;
        match verify_with(&gain, problem, options) {
            Ok(certificate) => {
                attempt.verified = true;
                diag.candidates.push(attempt);
                diag.chosen = Some(name);
                diag.stage2_margin = Some(rep.margin);
                let costs = match &problem.x0 {
                    Some(x0) => Some(
                        lyapriccati::evaluate_costs(&gain, &problem.game, &problem.alpha, x0)
                            .map_err(GcscError::from)?,
                    ),
                    None => None,
                };
                return Ok(SynthesisResult {
                    j_alpha: costs.as_ref().map(|c| c.weighted),
                    costs,
                    gain,
                    certificate,
                    p_alpha: p,
                    diagnostics: diag,
                });
            }
            Err(r) => {
                last_rejection = Some(r);
                diag.candidates.push(attempt);
            }
        }
    }
    Err(Box::new(Shortfall {
        stage: if reached_verify { Stage::Verify } else { Stage::Stage2 },
        diagnostics: diag,
        rejection: last_rejection,
    })
    .into())
}

/// Outcome of one threshold in a search.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaAttempt {
    pub delta: f64,
    pub feasible: bool,
    pub stage: Option<Stage>,
    pub diagnostics: Option<SynthesisDiagnostics>,
}

#[derive(Debug, Error, Clone)]
pub enum DeltaSearchError {
    #[error("synthesis fell short at every threshold (inconclusive)")]
    AllShortfall { attempts: Vec<DeltaAttempt> },
    #[error("threshold grid must be non-empty and ascending")]
    BadGrid,
    #[error(transparent)]
    Invalid(#[from] GcscError),
}

#[derive(Debug, Clone)]
pub struct DeltaSearchResult {
    pub delta: f64,
    pub result: SynthesisResult,
    pub attempts: Vec<DeltaAttempt>,
}

/// First threshold in an ascending grid at which synthesis succeeds.
pub fn min_delta_search(
    problem: &GcscProblem,
    deltas: &[f64],
) -> Result<DeltaSearchResult, DeltaSearchError> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DeltaSearchError::BadGrid);
    }
    let mut attempts = Vec::new();
    for &delta in deltas {
        let p = problem.with_delta(delta).map_err(GcscError::from)?;
        match synthesize(&p) {
            Ok(result) => {
                attempts.push(DeltaAttempt {
                    delta,
                    feasible: true,
                    stage: None,
                    diagnostics: Some(result.diagnostics.clone()),
                });
                return Ok(DeltaSearchResult {
                    delta,
                    result,
                    attempts,
                });
            }
            Err(SynthesisError::Shortfall(s)) => attempts.push(DeltaAttempt {
                delta,
                feasible: false,
                stage: Some(s.stage),
                diagnostics: Some(s.diagnostics),
            }),
            Err(SynthesisError::Invalid(e)) => return Err(e.into()),
        }
    }
    Err(DeltaSearchError::AllShortfall { attempts })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightScanRow {
    pub alpha: WeightVector,
    pub feasible: bool,
    pub j_alpha: Option<f64>,
    pub stage: Option<Stage>,
    pub error: Option<String>,
    #[serde(skip)]
    pub result: Option<Box<SynthesisResult>>,
}

/// Runs synthesis for each weight vector; the feasible rows form an inner
/// approximation of the admissible weight set. Row order follows `grid`.
pub fn admissible_weight_scan(problem: &GcscProblem, grid: &[WeightVector]) -> Vec<WeightScanRow> {
    grid.par_iter()
        .map(|alpha| {
            let row = |feasible, j_alpha, stage, error, result| WeightScanRow {
                alpha: alpha.clone(),
                feasible,
                j_alpha,
                stage,
                error,
                result,
            };
            let p = match problem.with_alpha(alpha.clone()) {
                Ok(p) => p,
                Err(e) => return row(false, None, None, Some(e.to_string()), None),
            };
            match synthesize(&p) {
                Ok(r) => row(true, r.j_alpha, None, None, Some(Box::new(r))),
                Err(SynthesisError::Shortfall(s)) => row(false, None, Some(s.stage), None, None),
                Err(SynthesisError::Invalid(e)) => row(false, None, None, Some(e.to_string()), None),
            }
        })
        .collect()
}

/// Team-cost ratios for a gain.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub j_alpha: f64,
    pub j_gc: f64,
    pub j_opt: f64,
    pub eta2: f64,
    pub j_po: Option<f64>,
    pub eta1: Option<f64>,
    /// `Nδ/J_OPT`, reported for uniform weights.
    pub team_bound: Option<f64>,
    /// Whether `J_α < δ ⇒ η2 < Nδ/J_OPT` held (uniform weights only).
    pub team_bound_holds: Option<bool>,
}

pub fn metrics(
    gain: &StructuredGain,
    game: &GameDefinition,
    x0: &Vector,
    delta: f64,
    alpha: &WeightVector,
    j_po: Option<f64>,
) -> Result<MetricsReport, GcscError> {
    metrics_matrix(gain.matrix(), game, x0, delta, alpha, j_po)
}

/// As [`metrics`] for an arbitrary joint gain.
pub fn metrics_matrix(
    f: &Matrix,
    game: &GameDefinition,
    x0: &Vector,
    delta: f64,
    alpha: &WeightVector,
    j_po: Option<f64>,
) -> Result<MetricsReport, GcscError> {
    let costs = lyapriccati::evaluate_costs_matrix(f, game, alpha, x0, 1.0)?;
    let j_opt = lyapriccati::optimal_team_cost(game, x0)?;
    let eta2 = costs.team / j_opt;
    let (team_bound, team_bound_holds) = if alpha.is_uniform() {
        let bound = game.num_players() as f64 * delta / j_opt;
        let holds = costs.weighted >= delta || eta2 < bound;
        (Some(bound), Some(holds))
    } else {
        (None, None)
    };
    Ok(MetricsReport {
        j_alpha: costs.weighted,
        j_gc: costs.team,
        j_opt,
        eta2,
        j_po,
        eta1: j_po.map(|j| j / j_opt),
        team_bound,
        team_bound_holds,
    })
}
