//! Dense real linear-algebra kernels shared by the rest of the crate.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. Everything here is a pure function
//! of its inputs; nonsymmetric eigenproblems go through a complex Schur form
//! and only real summaries (margins, real subspaces) leave this module.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMatrix = DMatrix<Complex<f64>>;

/// A matrix is Hurwitz iff [`hurwitz_margin`] is below `-HURWITZ_TOL`.
pub const HURWITZ_TOL: f64 = 1e-9;
/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalues below this (in absolute value) are clamped to zero by [`sym_sqrt_psd`].
pub const PSD_CLAMP: f64 = 1e-12;
/// Most negative eigenvalue still accepted as PSD.
pub const PSD_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 10_000;
/// Orthogonal similarities tried when the QR iteration stalls.
const SCHUR_RETRIES: u64 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix has {rows} rows of unequal length")]
    Ragged { rows: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix does not have full row rank (condition estimate {cond:e})")]
    RankDeficient { cond: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
}

/// Builds a matrix from row-major nested rows, rejecting ragged or non-finite input.
///
/// An empty slice yields a 0x0 matrix; `cols` is needed to express 0xN shapes.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix, MatError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(MatError::Ragged { rows: rows.len() });
    }
    let m = Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    check_finite(&m)?;
    Ok(m)
}

/// Row-major nested representation, the inverse of [`from_rows`].
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn check_finite(m: &Matrix) -> Result<(), MatError> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(MatError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn require_square(m: &Matrix) -> Result<usize, MatError> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(MatError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub fn frob(m: &Matrix) -> f64 {
    m.norm()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Max absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &Matrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Block-diagonal assembly of square blocks. Off-diagonal blocks are exact zeros.
pub fn direct_sum(blocks: &[Matrix]) -> Result<Matrix, MatError> {
    let mut total = 0;
    for b in blocks {
        total += require_square(b)?;
    }
    let mut out = Matrix::zeros(total, total);
    let mut at = 0;
    for b in blocks {
        let d = b.nrows();
        out.view_mut((at, at), (d, d)).copy_from(b);
        at += d;
    }
    Ok(out)
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vector,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: Matrix,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn recompose(&self) -> Matrix {
        let v = &self.eigenvectors;
        v * Matrix::from_diagonal(&self.eigenvalues) * v.transpose()
    }
}

/// Symmetric eigendecomposition. The input is symmetrized first, so tiny
/// rounding asymmetries are tolerated.
pub fn sym_eig(m: &Matrix) -> Result<SymEig, MatError> {
    let n = require_square(m)?;
    if n == 0 {
        return Ok(SymEig {
            eigenvalues: Vector::zeros(0),
            eigenvectors: Matrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(MatError::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = Vector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

pub fn min_eig(m: &Matrix) -> Result<f64, MatError> {
    Ok(sym_eig(m)?.min())
}

pub fn max_eig(m: &Matrix) -> Result<f64, MatError> {
    Ok(sym_eig(m)?.max())
}

/// Symmetric PSD square root `S` with `S·S = M`.
pub fn sym_sqrt_psd(m: &Matrix) -> Result<Matrix, MatError> {
    let eig = sym_eig(m)?;
    let lo = eig.min();
    if lo < -PSD_TOL {
        return Err(MatError::NotPsd { min_eig: lo });
    }
    let roots = eig
        .eigenvalues
        .map(|l| if l < PSD_CLAMP { 0.0 } else { l.sqrt() });
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * Matrix::from_diagonal(&roots) * v.transpose())))
}

fn singular_values_and_v(m: &Matrix) -> (Vec<f64>, Matrix) {
    // Pad wide inputs with zero rows so the SVD returns a full right basis.
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = Matrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let mut svd = SVD::new(padded, false, true);
    svd.sort_by_singular_values();
    let v = svd.v_t.expect("v_t requested").transpose();
    (svd.singular_values.iter().copied().collect(), v)
}

/// Numerical rank with threshold `RANK_TOL · σ_max`.
pub fn rank(m: &Matrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let (sv, _) = singular_values_and_v(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Orthonormal basis (as columns) of the kernel of `m`.
///
/// Column count is `cols(m) - rank(m)`; a full-column-rank input gives an
/// `n x 0` matrix.
pub fn orthonormal_null_basis(m: &Matrix) -> Matrix {
    let c = m.ncols();
    if c == 0 {
        return Matrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return Matrix::identity(c, c);
    }
    let (sv, v) = singular_values_and_v(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let r = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
    };
    v.columns(r, c - r).into_owned()
}

/// Orthogonal projector onto `ker(C)`, i.e. `I - C'(CC')⁻¹C`.
pub fn rowspace_complement_projector(c: &Matrix) -> Result<Matrix, MatError> {
    let n = c.ncols();
    if c.nrows() == 0 {
        return Ok(Matrix::identity(n, n));
    }
    let gram = c * c.transpose();
    let eig = sym_eig(&gram)?;
    let (lo, hi) = (eig.min(), eig.max());
    let cond = if lo <= 0.0 { f64::INFINITY } else { hi / lo };
    if cond > 1e12 {
        return Err(MatError::RankDeficient { cond });
    }
    let gram_inv = gram
        .cholesky()
        .ok_or(MatError::RankDeficient { cond })?
        .inverse();
    let p = Matrix::identity(n, n) - c.transpose() * gram_inv * c;
    Ok(symmetrize(&p))
}

/// Right pseudo-inverse `C'(CC')⁻¹` of a full-row-rank matrix.
pub fn right_pseudo_inverse(c: &Matrix) -> Result<Matrix, MatError> {
    let gram = c * c.transpose();
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(MatError::RankDeficient { cond: f64::INFINITY })?;
    Ok(c.transpose() * chol.inverse())
}

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>, MatError> {
    let n = require_square(m)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = complex_schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Deterministic pseudo-random orthogonal matrix.
fn scrambler(n: usize, attempt: u64) -> Matrix {
    let mut state = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(attempt + 1);
    let g = Matrix::from_fn(n, n, |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    g.qr().q()
}

/// Complex Schur form `M = Q T Qᴴ`.
///
/// The unshifted-exception QR iteration can stall on matrices with paired
/// spectra (Hamiltonians in particular); an orthogonal similarity breaks the
/// structure without changing the spectrum.
fn complex_schur(m: &Matrix) -> Result<(CMatrix, CMatrix), MatError> {
    if let Some(s) = Schur::try_new(to_complex(m), f64::EPSILON, SCHUR_MAX_ITER) {
        return Ok(s.unpack());
    }
    let n = m.nrows();
    for attempt in 0..SCHUR_RETRIES {
        let v = scrambler(n, attempt);
        let rotated = v.transpose() * m * &v;
        if let Some(s) = Schur::try_new(to_complex(&rotated), f64::EPSILON, SCHUR_MAX_ITER) {
            let (q, t) = s.unpack();
            return Ok((to_complex(&v) * q, t));
        }
    }
    Err(MatError::EigenFailure)
}

/// Largest real part over the spectrum. Hurwitz iff the result is `< -HURWITZ_TOL`.
pub fn hurwitz_margin(m: &Matrix) -> Result<f64, MatError> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn is_hurwitz(m: &Matrix) -> Result<bool, MatError> {
    Ok(hurwitz_margin(m)? < -HURWITZ_TOL)
}

/// Spectral radius `max |λ|`.
pub fn spectral_radius(m: &Matrix) -> Result<f64, MatError> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

pub fn to_complex(m: &Matrix) -> CMatrix {
    m.map(|x| Complex::new(x, 0.0))
}

/// Complex Schur form `M = Q T Qᴴ` with the eigenvalues selected by `leading`
/// moved to the top-left of `T`. Returns `(Q, T, count)` where `count` is the
/// number of selected eigenvalues.
pub fn ordered_complex_schur(
    m: &Matrix,
    leading: impl Fn(Complex<f64>) -> bool,
) -> Result<(CMatrix, CMatrix, usize), MatError> {
    let n = require_square(m)?;
    let (mut q, mut t) = complex_schur(m)?;
    // The complex Schur factor is upper triangular; clear rounding below the diagonal.
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = Complex::new(0.0, 0.0);
        }
    }
    let mut next = 0;
    for j in 0..n {
        if leading(t[(j, j)]) {
            let mut k = j;
            while k > next {
                swap_adjacent(&mut q, &mut t, k - 1);
                k -= 1;
            }
            next += 1;
        }
    }
    Ok((q, t, next))
}

/// Exchanges the diagonal entries `k` and `k+1` of an upper-triangular `t`,
/// updating the unitary factor `q` so that `q t qᴴ` is unchanged.
fn swap_adjacent(q: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let t12 = t[(k, k + 1)];
    // First column of the rotation is an eigenvector of the 2x2 block for t22.
    let v1 = t12;
    let v2 = t22 - t11;
    let norm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if norm == 0.0 {
        return;
    }
    let (a, b) = (v1 / norm, v2 / norm);
    // Z = [[a, -conj(b)], [b, conj(a)]]
    let z = [[a, -b.conj()], [b, a.conj()]];
    // t <- Zᴴ t on rows k, k+1
    for j in 0..n {
        let (x, y) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = z[0][0].conj() * x + z[1][0].conj() * y;
        t[(k + 1, j)] = z[0][1].conj() * x + z[1][1].conj() * y;
    }
    // t <- t Z and q <- q Z on columns k, k+1
    for mat in [&mut *t, &mut *q] {
        for i in 0..mat.nrows() {
            let (x, y) = (mat[(i, k)], mat[(i, k + 1)]);
            mat[(i, k)] = x * z[0][0] + y * z[1][0];
            mat[(i, k + 1)] = x * z[0][1] + y * z[1][1];
        }
    }
    t[(k + 1, k)] = Complex::new(0.0, 0.0);
}

/// `x' M x`.
pub fn quad_form(m: &Matrix, x: &Vector) -> f64 {
    (x.transpose() * m * x)[(0, 0)]
}
