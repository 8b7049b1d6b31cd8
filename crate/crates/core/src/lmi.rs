//! Affine symmetric matrix inequalities in a real decision vector and a
//! strict-feasibility solver.
//!
//! A constraint `σ·(M_0 + Σ z_j M_j) ≻ 0` has slack `λ_min(σ·M(z))`; the
//! margin of a system is the smallest slack. The solver first runs projected
//! supergradient ascent on the margin and, if that stalls below the target,
//! switches to a log-barrier Newton method on `(z, t)` maximizing `t`.

use serde::Serialize;
use thiserror::Error;

use crate::matlib::{self, Matrix};

pub const DEFAULT_BOX_RADIUS: f64 = 1e6;
pub const DEFAULT_TARGET: f64 = 1e-6;
const SYM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmiError {
    #[error("map '{label}': {reason}")]
    BadMap { label: String, reason: String },
    #[error("decision vector has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("system has no constraints")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    RequireNegDef,
    RequirePosDef,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::RequirePosDef => 1.0,
            Sense::RequireNegDef => -1.0,
        }
    }
}

/// `M(z) = M_0 + Σ z_j M_j` with a required definiteness.
#[derive(Debug, Clone)]
pub struct AffineMatrixMap {
    label: String,
    sense: Sense,
    m0: Matrix,
    basis: Vec<Matrix>,
}

impl AffineMatrixMap {
    pub fn new(
        label: impl Into<String>,
        sense: Sense,
        m0: Matrix,
        basis: Vec<Matrix>,
    ) -> Result<Self, LmiError> {
        let label = label.into();
        let bad = |reason: String| LmiError::BadMap {
            label: label.clone(),
            reason,
        };
        let d = m0.nrows();
        if m0.ncols() != d {
            return Err(bad("constant block is not square".into()));
        }
        for (j, mj) in std::iter::once(&m0).chain(basis.iter()).enumerate() {
            if mj.shape() != (d, d) {
                return Err(bad(format!("block {j} is not {d}x{d}")));
            }
            if matlib::asymmetry(mj) > SYM_TOL * (1.0 + mj.amax()) {
                return Err(bad(format!("block {j} is not symmetric")));
            }
            if mj.iter().any(|v| !v.is_finite()) {
                return Err(bad(format!("block {j} has non-finite entries")));
            }
        }
        Ok(Self {
            label,
            sense,
            m0,
            basis,
        })
    }

    /// Builds the map from an affine matrix function of `k` coordinates:
    /// `M_0 = f(0)`, `M_j = f(e_j) − f(0)`. Blocks are symmetrized.
    pub fn from_affine(
        label: impl Into<String>,
        sense: Sense,
        k: usize,
        f: impl Fn(&[f64]) -> Matrix,
    ) -> Result<Self, LmiError> {
        let mut z = vec![0.0; k];
        let m0 = matlib::symmetrize(&f(&z));
        let mut basis = Vec::with_capacity(k);
        for j in 0..k {
            z[j] = 1.0;
            basis.push(matlib::symmetrize(&(f(&z) - &m0)));
            z[j] = 0.0;
        }
        Self::new(label, sense, m0, basis)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn dim(&self) -> usize {
        self.m0.nrows()
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn constant(&self) -> &Matrix {
        &self.m0
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    /// `M_0 + Σ z_j M_j`, symmetrized.
    pub fn evaluate(&self, z: &[f64]) -> Result<Matrix, LmiError> {
        if z.len() != self.k() {
            return Err(LmiError::Dimension {
                got: z.len(),
                expected: self.k(),
            });
        }
        Ok(self.eval_unchecked(z))
    }

    fn eval_unchecked(&self, z: &[f64]) -> Matrix {
        let mut m = self.m0.clone();
        for (zj, mj) in z.iter().zip(&self.basis) {
            if *zj != 0.0 {
                m += mj * *zj;
            }
        }
        matlib::symmetrize(&m)
    }

    /// `σ·M(z)`, which must be positive definite.
    fn signed(&self, z: &[f64]) -> Matrix {
        self.eval_unchecked(z) * self.sense.sign()
    }

    /// `λ_min(σ·M(z))`.
    pub fn slack(&self, z: &[f64]) -> Result<f64, LmiError> {
        let m = self.evaluate(z)? * self.sense.sign();
        Ok(min_eig_pair(&m).0)
    }
}

fn min_eig_pair(m: &Matrix) -> (f64, Vec<f64>) {
    let e = matlib::sym_eig(m).expect("symmetric eigendecomposition");
    (
        e.eigenvalues[0],
        e.eigenvectors.column(0).iter().copied().collect(),
    )
}

/// Maps sharing one decision vector, with a bounding ball `‖z‖ ≤ R_box`.
#[derive(Debug, Clone)]
pub struct LmiSystem {
    k: usize,
    maps: Vec<AffineMatrixMap>,
    box_radius: f64,
}

impl LmiSystem {
    pub fn new(k: usize, maps: Vec<AffineMatrixMap>) -> Result<Self, LmiError> {
        if maps.is_empty() {
            return Err(LmiError::Empty);
        }
        for m in &maps {
            if m.k() != k {
                return Err(LmiError::BadMap {
                    label: m.label.clone(),
                    reason: format!("{} coordinates, system has {k}", m.k()),
                });
            }
        }
        Ok(Self {
            k,
            maps,
            box_radius: DEFAULT_BOX_RADIUS,
        })
    }

    pub fn with_box_radius(mut self, r: f64) -> Self {
        self.box_radius = r;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn maps(&self) -> &[AffineMatrixMap] {
        &self.maps
    }

    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    fn check(&self, z: &[f64]) -> Result<(), LmiError> {
        if z.len() != self.k {
            return Err(LmiError::Dimension {
                got: z.len(),
                expected: self.k,
            });
        }
        Ok(())
    }

    /// Per-map slacks `λ_min(σ_l M_l(z))`.
    pub fn slacks(&self, z: &[f64]) -> Result<Vec<f64>, LmiError> {
        self.check(z)?;
        Ok(self
            .maps
            .iter()
            .map(|m| min_eig_pair(&m.signed(z)).0)
            .collect())
    }

    /// Minimum slack over all maps.
    pub fn margin(&self, z: &[f64]) -> Result<f64, LmiError> {
        Ok(self
            .slacks(z)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }

    /// Margin and a supergradient at `z`.
    fn margin_supergradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let mut best = (f64::INFINITY, 0usize, Vec::new());
        for (l, m) in self.maps.iter().enumerate() {
            let (lam, v) = min_eig_pair(&m.signed(z));
            if lam < best.0 {
                best = (lam, l, v);
            }
        }
        let (lam, l, v) = best;
        let map = &self.maps[l];
        let sigma = map.sense.sign();
        let g = map
            .basis
            .iter()
            .map(|mj| {
                let mut acc = 0.0;
                for (r, vr) in v.iter().enumerate() {
                    for (c, vc) in v.iter().enumerate() {
                        acc += vr * mj[(r, c)] * vc;
                    }
                }
                sigma * acc
            })
            .collect();
        (lam, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeasibilityStatus {
    StrictlyFeasible,
    MarginShortfall,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    pub z: Vec<f64>,
    pub margin: f64,
    pub iterations: usize,
    /// Supergradient iterations spent before any barrier phase.
    pub ascent_iterations: usize,
    pub slacks: Vec<f64>,
    pub at_box_boundary: bool,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::StrictlyFeasible
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Supergradient iteration cap.
    pub max_iterations: usize,
    /// Supergradient iterations without improvement before switching to the
    /// barrier phase. `None` runs the supergradient phase to the cap.
    pub stall_window: Option<usize>,
    /// Run the barrier phase when the supergradient phase falls short.
    pub barrier_fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            stall_window: Some(2_000),
            barrier_fallback: true,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn project(z: &mut [f64], r: f64) {
    let n = norm(z);
    if n > r {
        let s = r / n;
        z.iter_mut().for_each(|x| *x *= s);
    }
}

fn report(
    system: &LmiSystem,
    z: Vec<f64>,
    target: f64,
    iterations: usize,
    ascent_iterations: usize,
) -> FeasibilityReport {
    let slacks = system.slacks(&z).expect("dimension checked");
    let margin = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    let status = if margin >= target {
        FeasibilityStatus::StrictlyFeasible
    } else {
        FeasibilityStatus::MarginShortfall
    };
    FeasibilityReport {
        status,
        at_box_boundary: norm(&z) >= system.box_radius * (1.0 - 1e-9),
        z,
        margin,
        iterations,
        ascent_iterations,
        slacks,
    }
}

/// Searches for `z` with `margin(z) ≥ target`, starting from `z = 0`.
pub fn solve_feasibility(
    system: &LmiSystem,
    target: f64,
    options: &SolverOptions,
) -> FeasibilityReport {
    solve_feasibility_from(system, target, &vec![0.0; system.k], options)
        .expect("zero start has the right length")
}

/// As [`solve_feasibility`] from a given starting point.
pub fn solve_feasibility_from(
    system: &LmiSystem,
    target: f64,
    z0: &[f64],
    options: &SolverOptions,
) -> Result<FeasibilityReport, LmiError> {
    system.check(z0)?;
    let r = system.box_radius;
    let mut z = z0.to_vec();
    project(&mut z, r);
    let (mut best_f, mut best_z) = (f64::NEG_INFINITY, z.clone());
    let mut since_improve = 0usize;
    let mut extra = 1.0f64;
    let mut iterations = 0usize;
    while iterations < options.max_iterations {
        let (f, g) = system.margin_supergradient(&z);
        iterations += 1;
        if f > best_f {
            if f > best_f + 1e-12 * (1.0 + best_f.abs()) {
                since_improve = 0;
            }
            best_f = f;
            best_z.clone_from(&z);
        } else {
            since_improve += 1;
        }
        if best_f >= target {
            break;
        }
        if let Some(w) = options.stall_window {
            if since_improve >= w {
                break;
            }
        }
        if since_improve > 0 && since_improve.is_multiple_of(200) {
            extra *= 0.5;
        }
        let gn2: f64 = g.iter().map(|x| x * x).sum();
        if gn2 == 0.0 {
            break;
        }
        // Polyak step toward a level just above the target
        let level = target.max(best_f) + extra * (1.0 + best_f.abs()) * 1e-2;
        let mut step = (level - f) / gn2;
        let max_len = 10.0 * (1.0 + norm(&z));
        if step * gn2.sqrt() > max_len {
            step = max_len / gn2.sqrt();
        }
        for (zj, gj) in z.iter_mut().zip(&g) {
            *zj += step * gj;
        }
        project(&mut z, r);
    }
    let ascent = iterations;
    if best_f < target && options.barrier_fallback {
        let (z_b, it_b) = barrier_maximize(system, &best_z, Some(target));
        iterations += it_b;
        let f_b = system.margin(&z_b)?;
        if f_b > best_f {
            best_z = z_b;
        }
    }
    Ok(report(system, best_z, target, iterations, ascent))
}

/// Maximizes the margin with the barrier method from a starting point,
/// ignoring any target.
pub fn maximize_margin(system: &LmiSystem, z0: &[f64]) -> Result<FeasibilityReport, LmiError> {
    system.check(z0)?;
    let (z, it) = barrier_maximize(system, z0, None);
    let start = system.margin(z0)?;
    let z = if system.margin(&z)? >= start { z } else { z0.to_vec() };
    Ok(report(system, z, f64::NEG_INFINITY, it, 0))
}

/// Sum of `−log det` over the constraints (with the margin shift `t`) and the
/// box term, with gradient and Hessian in `(z, t)`. `None` outside the domain.
struct BarrierEval {
    value: f64,
    grad: Vec<f64>,
    hess: Matrix,
}

fn barrier_eval(
    system: &LmiSystem,
    z: &[f64],
    t: Option<f64>,
    box_weight: f64,
) -> Option<BarrierEval> {
    let k = system.k;
    let dim = k + usize::from(t.is_some());
    let mut value = 0.0;
    let mut grad = vec![0.0; dim];
    let mut hess = Matrix::zeros(dim, dim);
    for map in &system.maps {
        let sigma = map.sense.sign();
        let mut s = map.signed(z);
        if let Some(t) = t {
            for i in 0..s.nrows() {
                s[(i, i)] -= t;
            }
        }
        let chol = s.clone().cholesky()?;
        let logdet: f64 = chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>() * 2.0;
        if !logdet.is_finite() {
            return None;
        }
        value -= logdet;
        let sinv = chol.inverse();
        // W_j = S⁻¹ A_j with A_j = σ M_j, and A_t = −I
        let mut ws: Vec<Matrix> = map.basis.iter().map(|mj| &sinv * mj * sigma).collect();
        if t.is_some() {
            ws.push(-&sinv);
        }
        for a in 0..dim {
            grad[a] -= ws[a].trace();
            for b in a..dim {
                // tr(W_a W_b)
                let wa = &ws[a];
                let wb = &ws[b];
                let mut tr = 0.0;
                for i in 0..wa.nrows() {
                    for j in 0..wa.ncols() {
                        tr += wa[(i, j)] * wb[(j, i)];
                    }
                }
                hess[(a, b)] += tr;
                if a != b {
                    hess[(b, a)] += tr;
                }
            }
        }
    }
    if box_weight > 0.0 {
        let r2 = system.box_radius * system.box_radius;
        let zz: f64 = z.iter().map(|x| x * x).sum();
        let s = r2 - zz;
        if s <= 0.0 {
            return None;
        }
        value -= box_weight * s.ln();
        for a in 0..k {
            grad[a] += box_weight * 2.0 * z[a] / s;
            hess[(a, a)] += box_weight * 2.0 / s;
            for b in 0..k {
                hess[(a, b)] += box_weight * 4.0 * z[a] * z[b] / (s * s);
            }
        }
    }
    Some(BarrierEval { value, grad, hess })
}

fn newton_direction(hess: &Matrix, grad: &[f64]) -> Option<Vec<f64>> {
    let n = grad.len();
    let g = Matrix::from_column_slice(n, 1, grad);
    let scale = hess.diagonal().amax().max(1e-300);
    let mut h = hess.clone();
    for reg in [0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
        if reg > 0.0 {
            h = hess.clone();
            for i in 0..n {
                h[(i, i)] += reg * scale;
            }
        }
        if let Some(c) = h.clone().cholesky() {
            let d = c.solve(&(-&g));
            if d.iter().all(|x| x.is_finite()) {
                return Some(d.iter().copied().collect());
            }
        }
    }
    None
}

/// Barrier path following for `max t s.t. σ_l M_l(z) ⪰ tI`, `‖z‖ < R`.
/// Stops early once the margin reaches `stop_at`.
fn barrier_maximize(system: &LmiSystem, z0: &[f64], stop_at: Option<f64>) -> (Vec<f64>, usize) {
    let k = system.k;
    let r = system.box_radius;
    let mut z = z0.to_vec();
    let nz = norm(&z);
    if nz >= 0.999 * r {
        z.iter_mut().for_each(|x| *x *= 0.999 * r / nz);
    }
    let m0 = system.margin(&z).expect("dimension checked");
    let total_dim: usize = system.maps.iter().map(|m| m.dim()).sum();
    let mut t = m0 - (0.1 * m0.abs() + 1e-3);
    let mut tau = (total_dim as f64 + 1.0) / (0.1 * m0.abs() + 1e-3).max(1e-12);
    tau = tau.clamp(1e-6, 1e12);
    let mut best = (m0, z.clone());
    let mut iterations = 0;
    for _outer in 0..60 {
        // centering: minimize −τ t + barrier
        for _ in 0..100 {
            let Some(ev) = barrier_eval(system, &z, Some(t), 1.0) else {
                break;
            };
            let mut grad = ev.grad.clone();
            grad[k] -= tau;
            let Some(d) = newton_direction(&ev.hess, &grad) else {
                break;
            };
            iterations += 1;
            let dec: f64 = -grad.iter().zip(&d).map(|(g, d)| g * d).sum::<f64>();
            if dec / 2.0 < 1e-10 {
                break;
            }
            let f0 = ev.value - tau * t;
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let zn: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + step * b).collect();
                let tn = t + step * d[k];
                if let Some(e) = barrier_eval_value(system, &zn, tn) {
                    if e - tau * tn <= f0 - 0.25 * step * dec {
                        z = zn;
                        t = tn;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let m = system.margin(&z).expect("dimension checked");
        if m > best.0 {
            best = (m, z.clone());
        }
        if let Some(target) = stop_at {
            if best.0 >= target {
                break;
            }
        }
        if (total_dim as f64 + 1.0) / tau < 1e-10 * (1.0 + best.0.abs()) {
            break;
        }
        tau *= 8.0;
    }
    (best.1, iterations)
}

fn barrier_eval_value(system: &LmiSystem, z: &[f64], t: f64) -> Option<f64> {
    let r2 = system.box_radius * system.box_radius;
    let s = r2 - z.iter().map(|x| x * x).sum::<f64>();
    if s <= 0.0 {
        return None;
    }
    let mut value = -s.ln();
    for map in &system.maps {
        let mut m = map.signed(z);
        for i in 0..m.nrows() {
            m[(i, i)] -= t;
        }
        let chol = m.cholesky()?;
        value -= 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    }
    value.is_finite().then_some(value)
}

fn center_value(system: &LmiSystem, z: &[f64]) -> Option<f64> {
    barrier_eval(system, z, None, 1.0).map(|e| e.value)
}

/// Damped Newton steps on `−Σ log det(σ_l M_l(z)) − log(R² − ‖z‖²)`.
/// Stops before any step that would lower the margin, so the returned
/// point's margin is at least the input's.
pub fn refine_analytic(system: &LmiSystem, z_feasible: &[f64], steps: usize) -> Result<Vec<f64>, LmiError> {
    system.check(z_feasible)?;
    let mut z = z_feasible.to_vec();
    let mut m = system.margin(&z)?;
    if m <= 0.0 {
        return Ok(z);
    }
    for _ in 0..steps {
        let Some(next) = newton_center_step(system, &z) else {
            break;
        };
        let mn = system.margin(&next)?;
        if mn < m {
            break;
        }
        let moved = norm(&next.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
        z = next;
        m = mn;
        if moved <= 1e-12 * (1.0 + norm(&z)) {
            break;
        }
    }
    Ok(z)
}

/// Analytic center of the strictly feasible set, without the margin
/// safeguard of [`refine_analytic`].
pub fn analytic_center(system: &LmiSystem, z_feasible: &[f64], steps: usize) -> Result<Vec<f64>, LmiError> {
    system.check(z_feasible)?;
    let mut z = z_feasible.to_vec();
    if system.margin(&z)? <= 0.0 {
        return Ok(z);
    }
    for _ in 0..steps {
        let Some(next) = newton_center_step(system, &z) else {
            break;
        };
        let moved = norm(&next.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
        z = next;
        if moved <= 1e-12 * (1.0 + norm(&z)) {
            break;
        }
    }
    Ok(z)
}

fn newton_center_step(system: &LmiSystem, z: &[f64]) -> Option<Vec<f64>> {
    let ev = barrier_eval(system, z, None, 1.0)?;
    let d = newton_direction(&ev.hess, &ev.grad)?;
    let dec: f64 = -ev.grad.iter().zip(&d).map(|(g, d)| g * d).sum::<f64>();
    if dec.is_nan() || dec <= 1e-20 {
        return None;
    }
    // damped step 1/(1+λ), then backtrack on the barrier value
    let mut step = 1.0 / (1.0 + dec.sqrt());
    for _ in 0..60 {
        let zn: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + step * b).collect();
        if let Some(v) = center_value(system, &zn) {
            if v <= ev.value - 0.25 * step * dec {
                return Some(zn);
            }
        }
        step *= 0.5;
    }
    None
}

/// Coordinates of a symmetric n×n variable: upper triangle, row by row.
/// Off-diagonal coordinates multiply `E_ij + E_ji`.
pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

pub fn sym_from_coords(n: usize, z: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = z[k];
            m[(j, i)] = z[k];
            k += 1;
        }
    }
    m
}

pub fn sym_to_coords(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut z = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        for j in i..n {
            z.push(0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    z
}

/// Serializable evidence of a feasibility solve.
#[derive(Debug, Clone, Serialize)]
pub struct LmiCertificate {
    pub z: Vec<f64>,
    pub margin: f64,
    pub slacks: Vec<ConstraintSlack>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintSlack {
    pub label: String,
    pub slack: f64,
}

impl LmiCertificate {
    pub fn new(system: &LmiSystem, z: &[f64]) -> Result<Self, LmiError> {
        let slacks = system.slacks(z)?;
        Ok(Self {
            z: z.to_vec(),
            margin: slacks.iter().copied().fold(f64::INFINITY, f64::min),
            slacks: system
                .maps
                .iter()
                .zip(slacks)
                .map(|(m, s)| ConstraintSlack {
                    label: m.label.clone(),
                    slack: s,
                })
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}
