//! Interconnection matrices and the spectrum that governs synchronization.
//!
//! A network is admissible when `1_p` is an eigenvector of the coupling
//! matrix `C` for a simple real eigenvalue `mu`, and every other eigenvalue
//! is real and strictly positive. [`validate_assumption`] checks these
//! clauses numerically and returns the remaining eigenvalues as a
//! [`SpectrumSummary`]; all gain design downstream only needs that summary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, Matrix};

/// Default relative tolerance for the spectral checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("interconnection matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("network needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("edge ({i}, {j}) references an agent outside 1..={p}")]
    IndexOutOfRange { i: usize, j: usize, p: usize },
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) listed more than once")]
    DuplicateEdge { i: usize, j: usize },
    #[error("agent {0} has no neighbours; random-walk normalization is undefined")]
    IsolatedAgent(usize),
    #[error("interconnection matrix contains non-finite entries")]
    NonFinite,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A violated clause of the admissibility assumption on `C`.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum AssumptionViolation {
    #[error("1_p is not an eigenvector of C (||C 1 - mu 1|| = {residual:.3e}, allowed {allowed:.3e})")]
    NotAnEigenvector { residual: f64, allowed: f64 },
    #[error("C has a non-real eigenvalue {re} + {im}i (allowed imaginary part {allowed:.3e})")]
    ComplexSpectrum { re: f64, im: f64, allowed: f64 },
    #[error("eigenvalue mu = {mu} has multiplicity {count}, expected 1")]
    MultiplicityViolation { mu: f64, count: usize },
    #[error("eigenvalue {value} of C other than mu is not strictly positive")]
    NonPositiveEigenvalue { value: f64 },
    #[error("spectral computation failed: {0}")]
    Computation(String),
}

impl AssumptionViolation {
    /// Short machine-readable name of the failed clause.
    pub fn clause(&self) -> &'static str {
        match self {
            Self::NotAnEigenvector { .. } => "NotAnEigenvector",
            Self::ComplexSpectrum { .. } => "ComplexSpectrum",
            Self::MultiplicityViolation { .. } => "MultiplicityViolation",
            Self::NonPositiveEigenvalue { .. } => "NonPositiveEigenvalue",
            Self::Computation(_) => "Computation",
        }
    }
}

/// The `p x p` coupling matrix `C` of the protocol `u_i = K sum_j c_ij x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterconnectionMatrix {
    entries: Matrix,
}

impl InterconnectionMatrix {
    pub fn new(entries: Matrix) -> Result<Self, TopologyError> {
        if !entries.is_square() {
            return Err(TopologyError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() < 2 {
            return Err(TopologyError::TooFewAgents(entries.nrows()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(TopologyError::NonFinite);
        }
        Ok(Self { entries })
    }

    pub fn from_row_slice(p: usize, data: &[f64]) -> Result<Self, TopologyError> {
        if data.len() != p * p {
            return Err(TopologyError::NotSquare {
                rows: p,
                cols: data.len() / p.max(1),
            });
        }
        Self::new(Matrix::from_row_slice(p, p, data))
    }

    pub fn agents(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_matrix(self) -> Matrix {
        self.entries
    }
}

/// Eigenvalue data of an admissible interconnection matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    /// Eigenvalue belonging to the eigenvector `1_p`.
    pub mu: f64,
    /// `sigma(C) \ {mu}` with multiplicity, ascending.
    pub lambdas: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Relative tolerance the checks were run with; `None` when the summary
    /// was built directly from known eigenvalues.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl SpectrumSummary {
    /// Builds a summary from eigenvalues that are already known, e.g. for a
    /// topology specified only through its spectrum.
    pub fn from_eigenvalues(mu: f64, lambdas: &[f64]) -> Result<Self, AssumptionViolation> {
        if let Some(&value) = lambdas.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(AssumptionViolation::NonPositiveEigenvalue { value });
        }
        if lambdas.is_empty() {
            return Err(AssumptionViolation::Computation(
                "spectrum must contain at least one eigenvalue besides mu".into(),
            ));
        }
        let repeats = lambdas.iter().filter(|v| **v == mu).count();
        if repeats > 0 {
            return Err(AssumptionViolation::MultiplicityViolation {
                mu,
                count: repeats + 1,
            });
        }
        let mut sorted = lambdas.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mu,
            lambda_min: sorted[0],
            lambda_max: sorted[sorted.len() - 1],
            lambdas: sorted,
            tolerance: None,
        })
    }

    /// `lambda_min / lambda_max`, the ratio that scales the Riccati design.
    pub fn ratio(&self) -> f64 {
        self.lambda_min / self.lambda_max
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

fn check_edges(p: usize, edges: &[(usize, usize)]) -> Result<(), TopologyError> {
    if p < 2 {
        return Err(TopologyError::TooFewAgents(p));
    }
    let mut seen = std::collections::HashSet::new();
    for &(i, j) in edges {
        if i == 0 || j == 0 || i > p || j > p {
            return Err(TopologyError::IndexOutOfRange { i, j, p });
        }
        if i == j {
            return Err(TopologyError::SelfLoop(i));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(TopologyError::DuplicateEdge { i, j });
        }
    }
    Ok(())
}

fn adjacency(p: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut adj = Matrix::zeros(p, p);
    for &(i, j) in edges {
        adj[(i - 1, j - 1)] = 1.0;
        adj[(j - 1, i - 1)] = 1.0;
    }
    adj
}

/// Laplacian `D - A` of a simple undirected graph. Edges use 1-based agent
/// indices.
pub fn laplacian_from_edges(
    p: usize,
    edges: &[(usize, usize)],
) -> Result<InterconnectionMatrix, TopologyError> {
    check_edges(p, edges)?;
    let adj = adjacency(p, edges);
    let degrees = adj.column_sum();
    let lap = Matrix::from_diagonal(&degrees) - adj;
    InterconnectionMatrix::new(lap)
}

/// Random-walk Laplacian `I - D^{-1} A`. Not symmetric in general, but its
/// spectrum is real.
pub fn random_walk_laplacian(
    p: usize,
    edges: &[(usize, usize)],
) -> Result<InterconnectionMatrix, TopologyError> {
    check_edges(p, edges)?;
    let adj = adjacency(p, edges);
    let mut lap = Matrix::identity(p, p);
    for i in 0..p {
        let degree: f64 = adj.row(i).sum();
        if degree == 0.0 {
            return Err(TopologyError::IsolatedAgent(i + 1));
        }
        for j in 0..p {
            lap[(i, j)] -= adj[(i, j)] / degree;
        }
    }
    InterconnectionMatrix::new(lap)
}

/// Laplacian of the complete graph on `p` vertices: `p I - 1 1^T`.
pub fn complete_graph_laplacian(p: usize) -> Result<Matrix, TopologyError> {
    if p < 2 {
        return Err(TopologyError::TooFewAgents(p));
    }
    Ok(Matrix::from_fn(p, p, |i, j| {
        if i == j {
            (p - 1) as f64
        } else {
            -1.0
        }
    }))
}

/// Checks the admissibility clauses in order (eigenvector, realness,
/// simplicity of `mu`, positivity) and returns the synchronization spectrum.
///
/// Tolerances are relative to `max(1, ||C||_2)`.
pub fn validate_assumption(
    c: &InterconnectionMatrix,
    tol: f64,
) -> Result<SpectrumSummary, AssumptionViolation> {
    let m = c.matrix();
    let p = c.agents();
    let scale = linalg::spectral_norm(m).max(1.0);
    let allowed = tol * scale;

    let row_sums = m * linalg::ones(p);
    let mu = row_sums.mean();
    let residual = (&row_sums - linalg::ones(p) * mu).norm();
    if residual > allowed {
        return Err(AssumptionViolation::NotAnEigenvector { residual, allowed });
    }

    let comp = |e: LinalgError| AssumptionViolation::Computation(e.to_string());
    let mut eigs: Vec<f64> = if linalg::is_symmetric(m, 0.0) {
        linalg::symmetric_eigenvalues(m).map_err(comp)?
    } else {
        let complex = linalg::eigenvalues(m).map_err(comp)?;
        if let Some(z) = complex.iter().find(|z| z.im.abs() > allowed) {
            return Err(AssumptionViolation::ComplexSpectrum {
                re: z.re,
                im: z.im,
                allowed,
            });
        }
        complex.iter().map(|z| z.re).collect()
    };
    eigs.sort_by(f64::total_cmp);

    let count = eigs.iter().filter(|v| (**v - mu).abs() <= allowed).count();
    if count != 1 {
        return Err(AssumptionViolation::MultiplicityViolation { mu, count });
    }
    let at_mu = eigs
        .iter()
        .position(|v| (*v - mu).abs() <= allowed)
        .expect("counted above");
    eigs.remove(at_mu);

    if let Some(&value) = eigs.iter().find(|v| **v <= allowed) {
        return Err(AssumptionViolation::NonPositiveEigenvalue { value });
    }

    Ok(SpectrumSummary {
        mu,
        lambda_min: eigs[0],
        lambda_max: eigs[eigs.len() - 1],
        lambdas: eigs,
        tolerance: Some(tol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_edges() -> Vec<(usize, usize)> {
        vec![(1, 2), (2, 3), (2, 4), (3, 4)]
    }

    #[test]
    fn laplacian_of_example_graph() {
        let c = laplacian_from_edges(4, &example_edges()).unwrap();
        let expected = Matrix::from_row_slice(
            4,
            4,
            &[
                1.0, -1.0, 0.0, 0.0, //
                -1.0, 3.0, -1.0, -1.0, //
                0.0, -1.0, 2.0, -1.0, //
                0.0, -1.0, -1.0, 2.0,
            ],
        );
        assert_eq!(c.matrix(), &expected);
    }

    #[test]
    fn single_edge_and_empty_graph() {
        let c = laplacian_from_edges(2, &[(1, 2)]).unwrap();
        assert_eq!(c.matrix(), &Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let empty = laplacian_from_edges(3, &[]).unwrap();
        assert_eq!(empty.matrix(), &Matrix::zeros(3, 3));
    }

    #[test]
    fn edge_errors() {
        assert_eq!(
            laplacian_from_edges(3, &[(1, 4)]),
            Err(TopologyError::IndexOutOfRange { i: 1, j: 4, p: 3 })
        );
        assert_eq!(
            laplacian_from_edges(3, &[(0, 1)]),
            Err(TopologyError::IndexOutOfRange { i: 0, j: 1, p: 3 })
        );
        assert_eq!(laplacian_from_edges(3, &[(2, 2)]), Err(TopologyError::SelfLoop(2)));
        assert_eq!(
            laplacian_from_edges(3, &[(1, 2), (2, 1)]),
            Err(TopologyError::DuplicateEdge { i: 2, j: 1 })
        );
    }

    #[test]
    fn complete_graph_small_cases() {
        assert_eq!(
            complete_graph_laplacian(2).unwrap(),
            Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
        assert_eq!(
            complete_graph_laplacian(3).unwrap(),
            Matrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0])
        );
        assert_eq!(complete_graph_laplacian(1), Err(TopologyError::TooFewAgents(1)));
        for p in 2..10 {
            let l = complete_graph_laplacian(p).unwrap();
            assert_eq!(l * linalg::ones(p), linalg::Vector::zeros(p));
        }
    }

    #[test]
    fn complete_graph_four_spectrum() {
        let eig = linalg::symmetric_eigenvalues(&complete_graph_laplacian(4).unwrap()).unwrap();
        for (got, want) in eig.iter().zip([0.0, 4.0, 4.0, 4.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn example_spectrum() {
        let c = laplacian_from_edges(4, &example_edges()).unwrap();
        let s = validate_assumption(&c, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.mu, 0.0);
        assert_eq!(s.lambdas.len(), 3);
        for (got, want) in s.lambdas.iter().zip([1.0, 3.0, 4.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-9);
        }
        assert_relative_eq!(s.ratio(), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn two_agent_spectrum() {
        let c = InterconnectionMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        let s = validate_assumption(&c, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.mu, 0.0);
        assert_relative_eq!(s.lambdas[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_violates_multiplicity() {
        let c = InterconnectionMatrix::new(Matrix::identity(3, 3)).unwrap();
        assert_eq!(
            validate_assumption(&c, DEFAULT_TOLERANCE),
            Err(AssumptionViolation::MultiplicityViolation { mu: 1.0, count: 3 })
        );
    }

    #[test]
    fn ones_not_eigenvector() {
        let c = InterconnectionMatrix::from_row_slice(2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        let err = validate_assumption(&c, DEFAULT_TOLERANCE).unwrap_err();
        assert_eq!(err.clause(), "NotAnEigenvector");
    }

    #[test]
    fn rotation_part_gives_complex_spectrum() {
        // Row sums zero, but the block on 1^perp rotates.
        let c = InterconnectionMatrix::from_row_slice(
            3,
            &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0],
        )
        .unwrap();
        let err = validate_assumption(&c, DEFAULT_TOLERANCE).unwrap_err();
        assert_eq!(err.clause(), "ComplexSpectrum");
    }

    #[test]
    fn disconnected_graph_has_repeated_zero() {
        let c = laplacian_from_edges(4, &[(1, 2), (3, 4)]).unwrap();
        let err = validate_assumption(&c, DEFAULT_TOLERANCE).unwrap_err();
        assert_eq!(err.clause(), "MultiplicityViolation");
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        // Negated Laplacian: mu = 0, other eigenvalues negative.
        let c = InterconnectionMatrix::new(-laplacian_from_edges(3, &[(1, 2), (2, 3)]).unwrap().into_matrix())
            .unwrap();
        let err = validate_assumption(&c, DEFAULT_TOLERANCE).unwrap_err();
        assert_eq!(err.clause(), "NonPositiveEigenvalue");
    }

    #[test]
    fn random_walk_laplacian_is_admissible() {
        let c = random_walk_laplacian(4, &example_edges()).unwrap();
        let s = validate_assumption(&c, DEFAULT_TOLERANCE).unwrap();
        assert!(s.mu.abs() < 1e-12);
        assert!(s.lambda_min > 0.0);
        assert_eq!(random_walk_laplacian(3, &[(1, 2)]), Err(TopologyError::IsolatedAgent(3)));
    }

    #[test]
    fn summary_from_known_eigenvalues() {
        let s = SpectrumSummary::from_eigenvalues(0.0, &[4.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.lambdas, vec![1.0, 3.0, 4.0]);
        assert_eq!((s.lambda_min, s.lambda_max), (1.0, 4.0));
        assert!(SpectrumSummary::from_eigenvalues(0.0, &[1.0, -2.0]).is_err());
        assert!(SpectrumSummary::from_eigenvalues(0.0, &[]).is_err());
    }
}
