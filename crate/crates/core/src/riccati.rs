//! Model-based synchronizing gains from a scaled discrete Riccati equation.
//!
//! With `gamma = lambda_min / lambda_max` the equation is
//!
//! ```text
//! P - A'PA + gamma A'PB (B'PB + R)^{-1} B'PA - Q = 0
//! ```
//!
//! and a positive definite solution yields the gain
//! `K = -(1/lambda_max) (B'PB + R)^{-1} B'PA`, which makes `A + lambda B K`
//! Schur for every `lambda` in `[lambda_min, lambda_max]`.
//!
//! The solver is plain value iteration on the Riccati map starting at `Q`.
//! The map is monotone for `gamma <= 1`, so iterates increase towards the
//! smallest solution or diverge when none exists.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::network::LtiModel;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Iterates with a larger Frobenius norm are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiccatiError {
    #[error("{name} must be symmetric positive definite")]
    NotPositiveDefinite { name: &'static str },
    #[error("gamma must lie in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("lambda_max must be positive, got {0}")]
    InvalidLambdaMax(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e}, ||P||_F {last_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_norm: f64,
        norm_history: Vec<f64>,
    },
    #[error("iterate {iteration} lost positive definiteness")]
    IndefiniteIterate { iteration: usize },
    #[error("B'PB + R is singular")]
    Singular,
}

/// Data of the scaled Riccati equation; weights are validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiProblem {
    model: LtiModel,
    q: Matrix,
    r: Matrix,
    gamma: f64,
}

impl RiccatiProblem {
    pub fn new(model: LtiModel, q: Matrix, r: Matrix, gamma: f64) -> Result<Self, RiccatiError> {
        let (n, m) = (model.state_dim(), model.input_dim());
        if q.shape() != (n, n) || r.shape() != (m, m) {
            return Err(RiccatiError::Dimension(format!(
                "Q must be {n}x{n} and R {m}x{m}, got {:?} and {:?}",
                q.shape(),
                r.shape()
            )));
        }
        if !linalg::is_symmetric(&q, 1e-12 * q.amax().max(1.0)) || !linalg::is_positive_definite(&q) {
            return Err(RiccatiError::NotPositiveDefinite { name: "Q" });
        }
        if !linalg::is_symmetric(&r, 1e-12 * r.amax().max(1.0)) || !linalg::is_positive_definite(&r) {
            return Err(RiccatiError::NotPositiveDefinite { name: "R" });
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(RiccatiError::InvalidGamma(gamma));
        }
        Ok(Self { model, q, r, gamma })
    }

    pub fn model(&self) -> &LtiModel {
        &self.model
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Q + A'PA - gamma A'PB (B'PB + R)^{-1} B'PA`.
    fn map(&self, p: &Matrix) -> Result<Matrix, RiccatiError> {
        let (a, b) = (self.model.a(), self.model.b());
        let pa = p * a;
        let bt_pa = b.transpose() * &pa;
        let s = b.transpose() * p * b + &self.r;
        let solved = linalg::symmetrize(&s)
            .cholesky()
            .ok_or(RiccatiError::Singular)?
            .solve(&bt_pa);
        Ok(&self.q + a.transpose() * &pa - bt_pa.transpose() * solved * self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiSolution {
    #[serde(with = "crate::io::rows")]
    pub p: Matrix,
    pub residual: f64,
    pub iterations: usize,
}

/// Frobenius norm of the equation's left-hand side at `p`.
pub fn riccati_residual(problem: &RiccatiProblem, p: &Matrix) -> Result<f64, RiccatiError> {
    let n = problem.model.state_dim();
    if p.shape() != (n, n) {
        return Err(RiccatiError::Dimension(format!(
            "P must be {n}x{n}, got {:?}",
            p.shape()
        )));
    }
    Ok((p - problem.map(p)?).norm())
}

pub fn solve_modified_dare(
    problem: &RiccatiProblem,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution, RiccatiError> {
    let mut p = problem.q.clone();
    let mut norm_history = vec![p.norm()];
    let mut residual = f64::INFINITY;
    for iteration in 0..=max_iter {
        let next = problem.map(&p)?;
        residual = (&p - &next).norm();
        if residual <= tol {
            return Ok(RiccatiSolution {
                p,
                residual,
                iterations: iteration,
            });
        }
        if iteration == max_iter {
            break;
        }
        p = linalg::symmetrize(&next);
        let norm = p.norm();
        norm_history.push(norm);
        if !(norm <= DIVERGENCE_NORM) {
            return Err(RiccatiError::NonConvergence {
                iterations: iteration + 1,
                residual,
                last_norm: norm,
                norm_history,
            });
        }
        if p.clone().cholesky().is_none() {
            return Err(RiccatiError::IndefiniteIterate {
                iteration: iteration + 1,
            });
        }
    }
    Err(RiccatiError::NonConvergence {
        iterations: max_iter,
        residual,
        last_norm: p.norm(),
        norm_history,
    })
}

/// `K = -(1/lambda_max) (B'PB + R)^{-1} B'PA`.
pub fn riccati_gain(
    model: &LtiModel,
    p: &Matrix,
    r: &Matrix,
    lambda_max: f64,
) -> Result<Matrix, RiccatiError> {
    let (n, m) = (model.state_dim(), model.input_dim());
    if p.shape() != (n, n) || r.shape() != (m, m) {
        return Err(RiccatiError::Dimension(format!(
            "P must be {n}x{n} and R {m}x{m}, got {:?} and {:?}",
            p.shape(),
            r.shape()
        )));
    }
    if !(lambda_max > 0.0) {
        return Err(RiccatiError::InvalidLambdaMax(lambda_max));
    }
    let (a, b) = (model.a(), model.b());
    let s = b.transpose() * p * b + r;
    let bt_pa = b.transpose() * p * a;
    let lu = s.lu();
    let solved = lu.solve(&bt_pa).ok_or(RiccatiError::Singular)?;
    Ok(solved * (-1.0 / lambda_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    fn scalar_problem(a: f64, gamma: f64) -> RiccatiProblem {
        let model = LtiModel::new(scalar(a), scalar(1.0)).unwrap();
        RiccatiProblem::new(model, scalar(1.0), scalar(1.0), gamma).unwrap()
    }

    const GOLDEN: f64 = 1.618_033_988_749_895;

    #[test]
    fn zero_dynamics_fixed_at_q() {
        let sol = solve_modified_dare(&scalar_problem(0.0, 1.0), 1e-12, 10).unwrap();
        assert_eq!(sol.p, scalar(1.0));
        assert_eq!(sol.iterations, 0);
        assert_eq!(riccati_residual(&scalar_problem(0.0, 1.0), &scalar(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn integrator_converges_to_golden_ratio() {
        let problem = scalar_problem(1.0, 1.0);
        let sol = solve_modified_dare(&problem, 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(sol.p[(0, 0)], GOLDEN, epsilon = 1e-10);
        assert!(riccati_residual(&problem, &scalar(GOLDEN)).unwrap() < 1e-12);
    }

    #[test]
    fn residual_at_q_is_one_half() {
        // 1 - 1 + 1/2 - 1
        let r = riccati_residual(&scalar_problem(1.0, 1.0), &scalar(1.0)).unwrap();
        assert_relative_eq!(r, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn scalar_gain() {
        let model = LtiModel::new(scalar(1.0), scalar(1.0)).unwrap();
        let k = riccati_gain(&model, &scalar(GOLDEN), &scalar(1.0), 1.0).unwrap();
        assert_relative_eq!(k[(0, 0)], -GOLDEN / (GOLDEN + 1.0), epsilon = 1e-15);
        assert_relative_eq!(1.0 + k[(0, 0)], 0.381_966_011_250_105_1, epsilon = 1e-12);
    }

    #[test]
    fn zero_state_matrix_gives_zero_gain() {
        let model = LtiModel::new(Matrix::zeros(2, 2), Matrix::identity(2, 1)).unwrap();
        let k = riccati_gain(&model, &Matrix::identity(2, 2), &scalar(3.0), 2.0).unwrap();
        assert_eq!(k, Matrix::zeros(1, 2));
    }

    #[test]
    fn uncontrollable_unstable_mode_diverges() {
        let model = LtiModel::new(scalar(2.0), scalar(0.0)).unwrap();
        let problem = RiccatiProblem::new(model, scalar(1.0), scalar(1.0), 1.0).unwrap();
        match solve_modified_dare(&problem, 1e-10, 10_000) {
            Err(RiccatiError::NonConvergence { norm_history, .. }) => {
                assert!(norm_history.windows(2).all(|w| w[1] >= w[0]));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let err = solve_modified_dare(&scalar_problem(1.0, 1.0), 1e-14, 2).unwrap_err();
        assert!(matches!(err, RiccatiError::NonConvergence { iterations: 2, .. }));
    }

    #[test]
    fn problem_validation() {
        let model = LtiModel::new(scalar(1.0), scalar(1.0)).unwrap();
        assert_eq!(
            RiccatiProblem::new(model.clone(), scalar(-1.0), scalar(1.0), 0.5),
            Err(RiccatiError::NotPositiveDefinite { name: "Q" })
        );
        assert_eq!(
            RiccatiProblem::new(model.clone(), scalar(1.0), scalar(0.0), 0.5),
            Err(RiccatiError::NotPositiveDefinite { name: "R" })
        );
        assert_eq!(
            RiccatiProblem::new(model.clone(), scalar(1.0), scalar(1.0), 0.0),
            Err(RiccatiError::InvalidGamma(0.0))
        );
        assert_eq!(
            RiccatiProblem::new(model.clone(), scalar(1.0), scalar(1.0), 1.5),
            Err(RiccatiError::InvalidGamma(1.5))
        );
        let asym = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        let model2 = LtiModel::new(Matrix::identity(2, 2), Matrix::identity(2, 1)).unwrap();
        assert!(RiccatiProblem::new(model2, asym, scalar(1.0), 1.0).is_err());
        assert_eq!(
            riccati_gain(&model, &scalar(1.0), &scalar(1.0), 0.0),
            Err(RiccatiError::InvalidLambdaMax(0.0))
        );
    }
}
