//! Dense linear-algebra helpers shared by the analysis modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Rank decisions use
//! the singular-value cutoff `max(rows, cols) * eps * sigma_max`, which is
//! reported back to callers through [`RankInfo`].

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const ITER_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

fn check_square(m: &Matrix) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    Ok(())
}

/// Eigenvalues of a general real square matrix, via a real Schur form.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>, LinalgError> {
    check_square(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, ITER_CAP)
        .ok_or(LinalgError::NoConvergence("real Schur decomposition"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a symmetric matrix in ascending order. Only the lower
/// triangle is read.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>, LinalgError> {
    check_square(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, ITER_CAP)
        .ok_or(LinalgError::NoConvergence("symmetric eigensolver"))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

fn svd(m: &Matrix, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, LinalgError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    SVD::try_new(m.clone(), vectors, vectors, f64::EPSILON, ITER_CAP)
        .ok_or(LinalgError::NoConvergence("singular value decomposition"))
}

/// Largest singular value (0 for an empty matrix).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match svd(m, false) {
        Ok(d) => d.singular_values.iter().copied().fold(0.0, f64::max),
        Err(_) => f64::NAN,
    }
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

/// Positive definiteness of the symmetric part via Cholesky.
pub fn is_positive_definite(m: &Matrix) -> bool {
    m.is_square() && m.iter().all(|v| v.is_finite()) && symmetrize(m).cholesky().is_some()
}

/// Numerical rank together with the cutoff that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
}

pub fn rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

pub fn numerical_rank(m: &Matrix) -> Result<RankInfo, LinalgError> {
    if m.is_empty() {
        return Ok(RankInfo {
            rank: 0,
            threshold: 0.0,
            singular_values: Vec::new(),
        });
    }
    let d = svd(m, false)?;
    let singular_values: Vec<f64> = d.singular_values.iter().copied().collect();
    let sigma_max = singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = rank_threshold(m.nrows(), m.ncols(), sigma_max);
    let rank = singular_values.iter().filter(|s| **s > threshold).count();
    Ok(RankInfo {
        rank,
        threshold,
        singular_values,
    })
}

/// Minimum-norm least-squares solution of `a * x = b`.
pub fn min_norm_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if a.nrows() != b.nrows() {
        return Err(LinalgError::Dimension(format!(
            "lhs has {} rows, rhs has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.is_empty() {
        return Ok(Matrix::zeros(a.ncols(), b.ncols()));
    }
    // Always decompose the tall orientation: a = U S V' or a' = U S V'.
    let wide = a.nrows() < a.ncols();
    let d = if wide { svd(&a.transpose(), true)? } else { svd(a, true)? };
    let sigma_max = d.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = rank_threshold(a.nrows(), a.ncols(), sigma_max);
    let u = d.u.as_ref().expect("left singular vectors requested");
    let v = d.v_t.as_ref().expect("right singular vectors requested").transpose();
    let (left, right) = if wide { (&v, u) } else { (u, &v) };
    let mut coeffs = left.transpose() * b;
    for (i, s) in d.singular_values.iter().enumerate() {
        let scale = if *s > threshold { 1.0 / s } else { 0.0 };
        coeffs.row_mut(i).scale_mut(scale);
    }
    Ok(right * coeffs)
}

pub fn pseudo_inverse(a: &Matrix) -> Result<Matrix, LinalgError> {
    min_norm_solve(a, &Matrix::identity(a.nrows(), a.nrows()))
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn null_space(a: &Matrix) -> Result<Matrix, LinalgError> {
    let cols = a.ncols();
    if cols == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if a.nrows() == 0 {
        return Ok(Matrix::identity(cols, cols));
    }
    // Pad with zero rows so the SVD yields a full set of right singular vectors.
    let rows = a.nrows().max(cols);
    let mut padded = Matrix::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let d = svd(&padded, true)?;
    let sigma_max = d.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = rank_threshold(a.nrows(), cols, sigma_max);
    let v_t = d.v_t.as_ref().expect("right singular vectors requested");
    let kept: Vec<Vector> = d
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= threshold)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if kept.is_empty() {
        return Ok(Matrix::zeros(cols, 0));
    }
    Ok(Matrix::from_columns(&kept))
}

/// Orthogonal projector onto the orthogonal complement of `im(a)`.
pub fn left_null_projector(a: &Matrix) -> Result<Matrix, LinalgError> {
    let pinv = pseudo_inverse(a)?;
    Ok(Matrix::identity(a.nrows(), a.nrows()) - a * pinv)
}

pub fn ones(len: usize) -> Vector {
    Vector::from_element(len, 1.0)
}
