//! Data-driven synchronizing gains.
//!
//! Data are informative for synchronizability when one gain `K` makes
//! `A + lambda_i B K` Schur for every consistent `(A, B)` and every
//! `lambda_i` in `sigma(C) \ {mu}`. This holds iff `X-` has full row rank
//! and there are right inverses `G_i` of `X-` with `X+ G_i` Schur and
//! `U- (lambda_i G_j - lambda_j G_i) = 0`. Any consistent system then
//! satisfies `A + lambda_i B K = X+ G_i` with `K = U- G_1 / lambda_1`.
//!
//! [`verify_certificate`] checks a candidate `K` against these conditions,
//! taking `G_i` as the minimum-norm solution of `[X-; U-] G_i = [I; lambda_i K]`.
//! [`synthesize_gain`] finds a gain by solving the convex problem
//!
//! ```text
//! P > 0,  X- F_i = P,  U- F_i = lambda_i L,
//! [[P, X+ F_i], [(X+ F_i)', P]] > 0
//! ```
//!
//! over the enforced eigenvalues, and reads off `K = L P^{-1}`. Enforcing the
//! smallest and largest eigenvalue suffices: the block condition is convex in
//! `X+ F_i`, which is affine in `lambda`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataMatrices;
use crate::linalg::{self, LinalgError, Matrix, RankInfo};
use crate::lmi::{self, AffineMatrix, LmiError, MarginOptions};
use crate::network::SCHUR_MARGIN;
use crate::topology::SpectrumSummary;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InformativityError {
    #[error("X- has rank {rank} < n = {required}; the data are not informative")]
    RankDeficient { rank: usize, required: usize },
    #[error("[I; {lambda} K] is not in the image of [X-; U-] (residual {residual:.3e} > {allowed:.3e})")]
    EquationInfeasible {
        lambda: f64,
        residual: f64,
        allowed: f64,
    },
    #[error("coupling between eigenvalues {i} and {j} violated (residual {residual:.3e} > {allowed:.3e})")]
    CouplingViolated {
        i: usize,
        j: usize,
        residual: f64,
        allowed: f64,
    },
    #[error("X+ G for lambda = {lambda} has spectral radius {radius} >= {limit}")]
    NotSchur { lambda: f64, radius: f64, limit: f64 },
    #[error("G_{index} is not a right inverse of X- (residual {residual:.3e})")]
    NotRightInverse { index: usize, residual: f64 },
    #[error("lambda must be non-zero")]
    ZeroLambda,
    #[error("no gain found by this method (best LMI margin {margin:.3e}, required {required:.3e}); this does not prove the data uninformative")]
    Infeasible { margin: f64, required: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("feasibility solver failed: {0}")]
    Solver(#[from] LmiError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl InformativityError {
    /// `true` when the error proves the data are not informative.
    pub fn is_conclusive(&self) -> bool {
        matches!(self, Self::RankDeficient { .. })
    }
}

type Result<T> = std::result::Result<T, InformativityError>;

fn check_gain_shape(dm: &DataMatrices, k: &Matrix) -> Result<()> {
    let shape = (dm.input_dim(), dm.state_dim());
    if k.shape() != shape {
        return Err(InformativityError::Dimension(format!(
            "gain must be {}x{}, got {}x{}",
            shape.0,
            shape.1,
            k.nrows(),
            k.ncols()
        )));
    }
    Ok(())
}

/// `[I; lambda K]`.
fn stacked_target(k: &Matrix, lambda: f64) -> Matrix {
    let (m, n) = k.shape();
    let mut t = Matrix::zeros(n + m, n);
    t.view_mut((0, 0), (n, n)).copy_from(&Matrix::identity(n, n));
    t.view_mut((n, 0), (m, n)).copy_from(&(k * lambda));
    t
}

pub fn rank_condition(dm: &DataMatrices) -> Result<RankInfo> {
    Ok(linalg::numerical_rank(dm.x_minus())?)
}

/// Whether `X-` has full row rank.
pub fn check_rank_condition(dm: &DataMatrices) -> bool {
    rank_condition(dm).is_ok_and(|info| info.rank == dm.state_dim())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionCheck {
    pub holds: bool,
    pub residual: f64,
    pub allowed: f64,
    /// Minimum-norm least-squares `G` with `[X-; U-] G ~ [I; lambda K]`.
    pub witness: Matrix,
}

/// Tests `im [I; lambda K] ⊆ im [X-; U-]` through the least-squares residual.
pub fn image_inclusion(dm: &DataMatrices, lambda: f64, k: &Matrix, tol: f64) -> Result<InclusionCheck> {
    if lambda == 0.0 {
        return Err(InformativityError::ZeroLambda);
    }
    check_gain_shape(dm, k)?;
    let stacked = dm.stacked();
    let target = stacked_target(k, lambda);
    let witness = linalg::min_norm_solve(&stacked, &target)?;
    let residual = (&stacked * &witness - &target).norm();
    let allowed = tol * target.norm().max(1.0);
    Ok(InclusionCheck {
        holds: residual <= allowed,
        residual,
        allowed,
        witness,
    })
}

/// Right inverses `G_i` of `X-`, one per eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RightInverseFamily {
    #[serde(with = "crate::io::rows::list")]
    pub inverses: Vec<Matrix>,
    pub lambdas: Vec<f64>,
}

impl RightInverseFamily {
    pub fn new(inverses: Vec<Matrix>, lambdas: Vec<f64>) -> Result<Self> {
        if inverses.len() != lambdas.len() || inverses.is_empty() {
            return Err(InformativityError::Dimension(format!(
                "{} inverses for {} eigenvalues",
                inverses.len(),
                lambdas.len()
            )));
        }
        Ok(Self { inverses, lambdas })
    }

    /// Largest `||X- G_i - I||_F` over the family.
    pub fn right_inverse_residuals(&self, x_minus: &Matrix) -> Vec<f64> {
        let n = x_minus.nrows();
        self.inverses
            .iter()
            .map(|g| {
                if g.nrows() != x_minus.ncols() || g.ncols() != n {
                    f64::INFINITY
                } else {
                    (x_minus * g - Matrix::identity(n, n)).norm()
                }
            })
            .collect()
    }
}

/// `K = U- G_1 / lambda_1`, after checking that every `U- G_i / lambda_i`
/// agrees with it.
pub fn gain_from_family(family: &RightInverseFamily, dm: &DataMatrices, tol: f64) -> Result<Matrix> {
    if family.lambdas.contains(&0.0) {
        return Err(InformativityError::ZeroLambda);
    }
    for (index, residual) in family
        .right_inverse_residuals(dm.x_minus())
        .into_iter()
        .enumerate()
    {
        if !(residual <= tol * (dm.state_dim() as f64).sqrt().max(1.0)) {
            return Err(InformativityError::NotRightInverse { index, residual });
        }
    }
    let candidates: Vec<Matrix> = family
        .inverses
        .iter()
        .zip(&family.lambdas)
        .map(|(g, l)| dm.u_minus() * g / *l)
        .collect();
    let k = candidates[0].clone();
    for (j, other) in candidates.iter().enumerate().skip(1) {
        let residual = (other - &k).norm();
        let allowed = tol * k.norm().max(1.0);
        if residual > allowed {
            return Err(InformativityError::CouplingViolated {
                i: 0,
                j,
                residual,
                allowed,
            });
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Relative tolerance on the linear residuals.
    pub tol: f64,
    /// Schur test: spectral radius must stay below `1 - margin`.
    pub margin: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            margin: SCHUR_MARGIN,
        }
    }
}

/// Machine-checkable evidence that a gain synchronizes every consistent system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCertificate {
    #[serde(with = "crate::io::rows")]
    pub gain: Matrix,
    pub family: RightInverseFamily,
    /// Spectral radius of `X+ G_i`, equal to that of `A + lambda_i B K` for
    /// every consistent system.
    pub radii: Vec<f64>,
    /// `||U- (lambda_i G_j - lambda_j G_i)||_F`.
    #[serde(with = "crate::io::rows")]
    pub coupling_residuals: Matrix,
    /// `||[X-; U-] G_i - [I; lambda_i K]||_F`.
    pub equation_residuals: Vec<f64>,
    pub options: VerifyOptions,
    /// Singular-value cutoff of the rank test on `X-`.
    pub rank_threshold: f64,
}

pub fn verify_certificate(
    dm: &DataMatrices,
    spectrum: &SpectrumSummary,
    k: &Matrix,
    options: &VerifyOptions,
) -> Result<GainCertificate> {
    let rank = rank_condition(dm)?;
    if rank.rank < dm.state_dim() {
        return Err(InformativityError::RankDeficient {
            rank: rank.rank,
            required: dm.state_dim(),
        });
    }
    check_gain_shape(dm, k)?;
    let lambdas = &spectrum.lambdas;
    if lambdas.contains(&0.0) {
        return Err(InformativityError::ZeroLambda);
    }

    let mut inverses = Vec::with_capacity(lambdas.len());
    let mut equation_residuals = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let check = image_inclusion(dm, lambda, k, options.tol)?;
        if !check.holds {
            return Err(InformativityError::EquationInfeasible {
                lambda,
                residual: check.residual,
                allowed: check.allowed,
            });
        }
        equation_residuals.push(check.residual);
        inverses.push(check.witness);
    }

    let count = lambdas.len();
    let u = dm.u_minus();
    let u_g: Vec<Matrix> = inverses.iter().map(|g| u * g).collect();
    let mut coupling = Matrix::zeros(count, count);
    for i in 0..count {
        for j in i + 1..count {
            let residual = (&u_g[j] * lambdas[i] - &u_g[i] * lambdas[j]).norm();
            let allowed = options.tol
                * (lambdas[i].abs() * u_g[j].norm() + lambdas[j].abs() * u_g[i].norm()).max(1.0);
            if residual > allowed {
                return Err(InformativityError::CouplingViolated {
                    i,
                    j,
                    residual,
                    allowed,
                });
            }
            coupling[(i, j)] = residual;
            coupling[(j, i)] = residual;
        }
    }

    let limit = 1.0 - options.margin;
    let mut radii = Vec::with_capacity(count);
    for (g, &lambda) in inverses.iter().zip(lambdas) {
        let radius = linalg::spectral_radius(&(dm.x_plus() * g))?;
        if !(radius < limit) {
            return Err(InformativityError::NotSchur {
                lambda,
                radius,
                limit,
            });
        }
        radii.push(radius);
    }

    Ok(GainCertificate {
        gain: k.clone(),
        family: RightInverseFamily {
            inverses,
            lambdas: lambdas.clone(),
        },
        radii,
        coupling_residuals: coupling,
        equation_residuals,
        options: *options,
        rank_threshold: rank.threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Feasibility tolerance; the LMI margin must reach `tol * trace(P)`.
    pub tol: f64,
    /// Schur margin used when verifying the result.
    pub margin: f64,
    /// Enforce every eigenvalue instead of only the two extremes.
    pub enforce_all: bool,
    pub solver: MarginOptions,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            margin: SCHUR_MARGIN,
            enforce_all: false,
            solver: MarginOptions::default(),
        }
    }
}

/// A feasible point of the synthesis LMI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmiSolution {
    #[serde(with = "crate::io::rows")]
    pub p: Matrix,
    #[serde(with = "crate::io::rows")]
    pub l: Matrix,
    /// `F_i`, one per enforced eigenvalue.
    #[serde(with = "crate::io::rows::list")]
    pub f: Vec<Matrix>,
    pub enforced: Vec<f64>,
    #[serde(with = "crate::io::rows")]
    pub gain: Matrix,
    /// Smallest eigenvalue over the block constraints, with `trace(P) = n`.
    pub lmi_margin: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub solution: LmiSolution,
    pub certificate: GainCertificate,
}

fn distinct(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if !out.iter().any(|w| (v - w).abs() <= 1e-12 * v.abs().max(1.0)) {
            out.push(v);
        }
    }
    out
}

/// Decision variables `(P, L)`: one coordinate per upper-triangular entry
/// of `P`, then one per entry of `L`.
struct Variables {
    n: usize,
    m: usize,
}

impl Variables {
    fn count(&self) -> usize {
        self.n * (self.n + 1) / 2 + self.m * self.n
    }

    fn unpack(&self, z: &[f64]) -> (Matrix, Matrix) {
        let (n, m) = (self.n, self.m);
        let mut p = Matrix::zeros(n, n);
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                p[(i, j)] = z[idx];
                p[(j, i)] = z[idx];
                idx += 1;
            }
        }
        let l = Matrix::from_row_slice(m, n, &z[idx..idx + m * n]);
        (p, l)
    }

    fn unit(&self, index: usize) -> (Matrix, Matrix) {
        let mut z = vec![0.0; self.count()];
        z[index] = 1.0;
        self.unpack(&z)
    }
}

/// Searches for a data-based synchronizing gain. A failure other than
/// [`InformativityError::RankDeficient`] is inconclusive.
pub fn synthesize_gain(
    dm: &DataMatrices,
    spectrum: &SpectrumSummary,
    options: &SynthesisOptions,
) -> Result<Synthesis> {
    let (n, m) = (dm.state_dim(), dm.input_dim());
    let rank = rank_condition(dm)?;
    if rank.rank < n {
        return Err(InformativityError::RankDeficient {
            rank: rank.rank,
            required: n,
        });
    }
    if spectrum.lambdas.contains(&0.0) {
        return Err(InformativityError::ZeroLambda);
    }
    let enforced = if options.enforce_all {
        distinct(&spectrum.lambdas)
    } else {
        distinct(&[spectrum.lambda_min, spectrum.lambda_max])
    };

    let stacked = dm.stacked();
    let pinv = linalg::pseudo_inverse(&stacked)?;
    // Every consistent (A, B) agrees with [Phi_x Phi_u] on im [X-; U-].
    let phi = dm.x_plus() * &pinv;
    let phi_x = phi.columns(0, n).into_owned();
    let phi_u = phi.columns(n, m).into_owned();
    let left_null = linalg::null_space(&stacked.transpose())?;
    let w_x = left_null.rows(0, n).transpose();
    let w_u = left_null.rows(n, m).transpose();

    let vars = Variables { n, m };
    let q = vars.count();
    let units: Vec<(Matrix, Matrix)> = (0..q).map(|i| vars.unit(i)).collect();

    // [P; lambda_i L] must lie in im [X-; U-]; trace(P) = n fixes the scale.
    let null_rows = left_null.ncols() * n;
    let rows = enforced.len() * null_rows + 1;
    let mut a_eq = Matrix::zeros(rows, q);
    let mut b_eq = Matrix::zeros(rows, 1);
    for (col, (p, l)) in units.iter().enumerate() {
        for (e, &lambda) in enforced.iter().enumerate() {
            let value = &w_x * p + &w_u * l * lambda;
            for (r, v) in value.iter().enumerate() {
                a_eq[(e * null_rows + r, col)] = *v;
            }
        }
        a_eq[(rows - 1, col)] = p.trace();
    }
    b_eq[(rows - 1, 0)] = n as f64;

    let z0 = linalg::min_norm_solve(&a_eq, &b_eq)?;
    if (&a_eq * &z0 - &b_eq).norm() > 1e-9 * (n as f64) {
        return Err(InformativityError::Infeasible {
            margin: f64::NEG_INFINITY,
            required: options.tol * n as f64,
        });
    }
    let basis = linalg::null_space(&a_eq)?;

    let block = |p: &Matrix, l: &Matrix, lambda: f64| -> Matrix {
        let mut out = Matrix::zeros(2 * n, 2 * n);
        let mix = &phi_x * p + &phi_u * l * lambda;
        out.view_mut((0, 0), (n, n)).copy_from(p);
        out.view_mut((n, n), (n, n)).copy_from(p);
        out.view_mut((0, n), (n, n)).copy_from(&mix);
        out.view_mut((n, 0), (n, n)).copy_from(&mix.transpose());
        out
    };
    let (p0, l0) = vars.unpack(z0.as_slice());
    let directions: Vec<(Matrix, Matrix)> = basis
        .column_iter()
        .map(|c| vars.unpack(c.as_slice()))
        .collect();
    let blocks: Vec<AffineMatrix> = enforced
        .iter()
        .map(|&lambda| {
            AffineMatrix::new(
                block(&p0, &l0, lambda),
                directions
                    .iter()
                    .map(|(p, l)| block(p, l, lambda))
                    .collect(),
            )
        })
        .collect();

    let best = lmi::maximize_margin(&blocks, &options.solver)?;
    let required = options.tol * n as f64;
    if !(best.margin >= required) {
        return Err(InformativityError::Infeasible {
            margin: best.margin,
            required,
        });
    }

    let z = &z0 + &basis * &best.y;
    let (p, l) = vars.unpack(z.as_slice());
    let chol = p
        .clone()
        .cholesky()
        .ok_or(InformativityError::Infeasible {
            margin: best.margin,
            required,
        })?;
    let gain = chol.solve(&l.transpose()).transpose();
    let f = enforced
        .iter()
        .map(|&lambda| {
            let mut target = Matrix::zeros(n + m, n);
            target.view_mut((0, 0), (n, n)).copy_from(&p);
            target.view_mut((n, 0), (m, n)).copy_from(&(&l * lambda));
            &pinv * target
        })
        .collect();

    let certificate = verify_certificate(
        dm,
        spectrum,
        &gain,
        &VerifyOptions {
            tol: options.tol,
            margin: options.margin,
        },
    )?;
    Ok(Synthesis {
        solution: LmiSolution {
            p,
            l,
            f,
            enforced,
            gain,
            lmi_margin: best.margin,
            newton_steps: best.newton_steps,
        },
        certificate,
    })
}
