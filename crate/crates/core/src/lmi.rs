//! Dense barrier method for small linear matrix inequalities.
//!
//! Solves
//!
//! ```text
//! maximize t  subject to  F_k(y) - t I >= 0  for every block k,  ||y|| <= radius
//! ```
//!
//! where each `F_k(y) = F_k0 + sum_j y_j F_kj` is symmetric and affine in `y`.
//! The optimal `t` is the best achievable minimum eigenvalue; a strictly
//! positive value certifies that `F_k(y) > 0` is feasible. The ball keeps the
//! feasible set bounded so the problem always has a finite optimum.
//!
//! Each centering step is a damped Newton iteration on
//! `-s t - sum_k log det(F_k(y) - t I) - log(radius^2 - ||y||^2)`,
//! with `s` increased geometrically until the duality-gap bound
//! `nu / s` drops below the requested tolerance.

use thiserror::Error;

use crate::linalg::{self, Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmiError {
    #[error("block {block} is not square or its coefficients differ in shape")]
    Shape { block: usize },
    #[error("blocks disagree on the number of variables")]
    VariableCount,
    #[error("no constraint blocks given")]
    NoBlocks,
    #[error("newton system became singular or non-finite")]
    Numerical,
    #[error("step limit of {0} newton iterations reached")]
    StepLimit(usize),
}

/// `F(y) = constant + sum_j y_j coefficients[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrix {
    constant: Matrix,
    coefficients: Vec<Matrix>,
}

impl AffineMatrix {
    pub fn new(constant: Matrix, coefficients: Vec<Matrix>) -> Self {
        Self {
            constant,
            coefficients,
        }
    }

    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn variables(&self) -> usize {
        self.coefficients.len()
    }

    pub fn eval(&self, y: &Vector) -> Matrix {
        self.coefficients
            .iter()
            .zip(y.iter())
            .fold(self.constant.clone(), |acc, (c, v)| acc + c * *v)
    }

    fn check(&self, block: usize) -> Result<(), LmiError> {
        let shape = self.constant.shape();
        if shape.0 != shape.1 || self.coefficients.iter().any(|c| c.shape() != shape) {
            return Err(LmiError::Shape { block });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginOptions {
    /// Bound on `||y||`.
    pub radius: f64,
    /// Stop once the duality-gap bound on `t` falls below this.
    pub gap_tol: f64,
    /// Total Newton iterations allowed across all centering steps.
    pub max_newton_steps: usize,
}

impl Default for MarginOptions {
    fn default() -> Self {
        Self {
            radius: 1e4,
            gap_tol: 1e-10,
            max_newton_steps: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginSolution {
    pub y: Vector,
    /// Attained `min_k lambda_min(F_k(y))`.
    pub margin: f64,
    pub newton_steps: usize,
}

struct Problem<'a> {
    blocks: &'a [AffineMatrix],
    dim: usize,
    radius_sq: f64,
}

impl Problem<'_> {
    /// Inverses of every shifted block, or `None` outside the domain.
    fn slack(&self, y: &Vector, t: f64) -> Option<Vec<Matrix>> {
        if self.radius_sq - y.norm_squared() <= 0.0 {
            return None;
        }
        self.blocks
            .iter()
            .map(|b| {
                let g = b.eval(y) - Matrix::identity(b.size(), b.size()) * t;
                let chol = linalg::symmetrize(&g).cholesky()?;
                Some(chol.inverse())
            })
            .collect()
    }

    fn value(&self, y: &Vector, t: f64, s: f64) -> Option<f64> {
        let ball = self.radius_sq - y.norm_squared();
        if ball <= 0.0 {
            return None;
        }
        let mut f = -s * t - ball.ln();
        for b in self.blocks {
            let g = b.eval(y) - Matrix::identity(b.size(), b.size()) * t;
            let chol = linalg::symmetrize(&g).cholesky()?;
            let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
            f -= log_det;
        }
        Some(f)
    }

    /// Gradient and Hessian in the stacked variable `(y, t)`.
    fn derivatives(&self, y: &Vector, s: f64, inverses: &[Matrix]) -> (Vector, Matrix) {
        let d = self.dim;
        let mut grad = Vector::zeros(d + 1);
        let mut hess = Matrix::zeros(d + 1, d + 1);
        for (block, g_inv) in self.blocks.iter().zip(inverses) {
            // Z_j = G^{-1} dG/dx_j with dG/dt = -I.
            let mut z: Vec<Matrix> = block.coefficients.iter().map(|c| g_inv * c).collect();
            z.push(-g_inv.clone());
            for a in 0..=d {
                grad[a] -= z[a].trace();
                let za_t = z[a].transpose();
                for b in a..=d {
                    let v = za_t.dot(&z[b]);
                    hess[(a, b)] += v;
                    if a != b {
                        hess[(b, a)] += v;
                    }
                }
            }
        }
        let ball = self.radius_sq - y.norm_squared();
        for j in 0..d {
            grad[j] += 2.0 * y[j] / ball;
            hess[(j, j)] += 2.0 / ball;
            for i in 0..d {
                hess[(i, j)] += 4.0 * y[i] * y[j] / (ball * ball);
            }
        }
        grad[d] -= s;
        (grad, hess)
    }
}

/// Maximizes the common minimum eigenvalue of the affine blocks.
pub fn maximize_margin(
    blocks: &[AffineMatrix],
    options: &MarginOptions,
) -> Result<MarginSolution, LmiError> {
    let first = blocks.first().ok_or(LmiError::NoBlocks)?;
    let dim = first.variables();
    for (i, b) in blocks.iter().enumerate() {
        b.check(i)?;
        if b.variables() != dim {
            return Err(LmiError::VariableCount);
        }
    }
    let problem = Problem {
        blocks,
        dim,
        radius_sq: options.radius * options.radius,
    };
    let nu = blocks.iter().map(AffineMatrix::size).sum::<usize>() as f64 + 1.0;

    let mut y = Vector::zeros(dim);
    let start = blocks
        .iter()
        .map(|b| {
            linalg::symmetric_eigenvalues(&linalg::symmetrize(&b.constant))
                .map(|e| e.first().copied().unwrap_or(0.0))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| LmiError::Numerical)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut t = start - 1.0;

    let mut s = 1.0;
    let mut steps = 0;
    loop {
        // centering
        for _ in 0..200 {
            let inverses = problem.slack(&y, t).ok_or(LmiError::Numerical)?;
            let (grad, hess) = problem.derivatives(&y, s, &inverses);
            let step = match hess.clone().cholesky() {
                Some(chol) => chol.solve(&(-&grad)),
                None => hess.lu().solve(&(-&grad)).ok_or(LmiError::Numerical)?,
            };
            if step.iter().any(|v| !v.is_finite()) {
                return Err(LmiError::Numerical);
            }
            let decrement = -grad.dot(&step);
            steps += 1;
            if steps > options.max_newton_steps {
                return Err(LmiError::StepLimit(options.max_newton_steps));
            }
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let current = problem.value(&y, t, s).ok_or(LmiError::Numerical)?;
            let dy = step.rows(0, dim).into_owned();
            let dt = step[dim];
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let y_new = &y + &dy * alpha;
                let t_new = t + dt * alpha;
                if let Some(v) = problem.value(&y_new, t_new, s) {
                    if v <= current - 0.25 * alpha * decrement {
                        y = y_new;
                        t = t_new;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if nu / s < options.gap_tol {
            break;
        }
        s *= 10.0;
    }

    let margin = blocks
        .iter()
        .map(|b| {
            linalg::symmetric_eigenvalues(&linalg::symmetrize(&b.eval(&y)))
                .map(|e| e.first().copied().unwrap_or(f64::INFINITY))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| LmiError::Numerical)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(MarginSolution {
        y,
        margin,
        newton_steps: steps,
    })
}
