//! Homogeneous networks `x(k+1) = (I_p (x) A + C (x) BK) x(k)`.
//!
//! The closed loop is materialized densely. Synchronization is decided
//! per mode: the network synchronizes iff `A + lambda B K` is Schur for every
//! `lambda` in `sigma(C) \ {mu}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, Vector};
use crate::topology::{InterconnectionMatrix, SpectrumSummary};

pub use crate::linalg::spectral_radius;

/// A matrix counts as Schur when its spectral radius is below `1 - SCHUR_MARGIN`.
pub const SCHUR_MARGIN: f64 = 1e-7;

/// Simulation aborts once the stacked state norm exceeds this.
pub const BLOWUP_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state norm {norm:.3e} exceeded {limit:.1e} at step {step}")]
    Diverged { step: usize, norm: f64, limit: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn dim_err(msg: impl Into<String>) -> NetworkError {
    NetworkError::Dimension(msg.into())
}

/// One agent: `x(k+1) = A x(k) + B u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    a: Matrix,
    b: Matrix,
}

impl LtiModel {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self, NetworkError> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(dim_err(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(dim_err(format!(
                "B must be {}xm with m >= 1, got {}x{}",
                a.nrows(),
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn check_gain(&self, k: &Matrix) -> Result<(), NetworkError> {
        if k.shape() != (self.input_dim(), self.state_dim()) {
            return Err(dim_err(format!(
                "gain must be {}x{}, got {}x{}",
                self.input_dim(),
                self.state_dim(),
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(())
    }

    /// `A + lambda B K`.
    pub fn mode_matrix(&self, lambda: f64, k: &Matrix) -> Matrix {
        &self.a + (&self.b * k) * lambda
    }
}

/// Network closed loop together with the ingredients it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    model: LtiModel,
    interconnection: InterconnectionMatrix,
    gain: Matrix,
    closed_loop: Matrix,
}

impl NetworkModel {
    pub fn model(&self) -> &LtiModel {
        &self.model
    }

    pub fn interconnection(&self) -> &InterconnectionMatrix {
        &self.interconnection
    }

    pub fn gain(&self) -> &Matrix {
        &self.gain
    }

    pub fn closed_loop(&self) -> &Matrix {
        &self.closed_loop
    }

    pub fn agents(&self) -> usize {
        self.interconnection.agents()
    }

    pub fn state_dim(&self) -> usize {
        self.model.state_dim()
    }
}

pub fn assemble_network(
    model: &LtiModel,
    c: &InterconnectionMatrix,
    k: &Matrix,
) -> Result<NetworkModel, NetworkError> {
    model.check_gain(k)?;
    let p = c.agents();
    let closed_loop =
        Matrix::identity(p, p).kronecker(model.a()) + c.matrix().kronecker(&(model.b() * k));
    Ok(NetworkModel {
        model: model.clone(),
        interconnection: c.clone(),
        gain: k.clone(),
        closed_loop,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRadius {
    pub lambda: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncVerdict {
    pub synchronized: bool,
    pub margin: f64,
    pub modes: Vec<ModeRadius>,
}

impl SyncVerdict {
    pub fn worst_radius(&self) -> f64 {
        self.modes.iter().map(|m| m.radius).fold(0.0, f64::max)
    }
}

/// Spectral radius of `A + lambda B K` for every eigenvalue in the summary.
pub fn mode_radii(
    model: &LtiModel,
    lambdas: &[f64],
    k: &Matrix,
) -> Result<Vec<ModeRadius>, NetworkError> {
    model.check_gain(k)?;
    lambdas
        .iter()
        .map(|&lambda| {
            Ok(ModeRadius {
                lambda,
                radius: spectral_radius(&model.mode_matrix(lambda, k))?,
            })
        })
        .collect()
}

pub fn is_synchronizing(
    model: &LtiModel,
    spectrum: &SpectrumSummary,
    k: &Matrix,
) -> Result<SyncVerdict, NetworkError> {
    is_synchronizing_with_margin(model, spectrum, k, SCHUR_MARGIN)
}

pub fn is_synchronizing_with_margin(
    model: &LtiModel,
    spectrum: &SpectrumSummary,
    k: &Matrix,
    margin: f64,
) -> Result<SyncVerdict, NetworkError> {
    let modes = mode_radii(model, &spectrum.lambdas, k)?;
    let synchronized = modes.iter().all(|m| m.radius < 1.0 - margin);
    Ok(SyncVerdict {
        synchronized,
        margin,
        modes,
    })
}

/// `||(L (x) I_n) x||_2` for the complete-graph Laplacian `L = p I - 1 1^T`,
/// evaluated without forming the Kronecker product.
pub fn disagreement_norm(x: &Vector, agents: usize, state_dim: usize) -> f64 {
    let total = (0..agents).fold(Vector::zeros(state_dim), |acc, i| {
        acc + x.rows(i * state_dim, state_dim)
    });
    let p = agents as f64;
    (0..agents)
        .map(|i| (x.rows(i * state_dim, state_dim) * p - &total).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Stacked network states `x(0..=horizon)` and their disagreement norms.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    agents: usize,
    state_dim: usize,
    states: Vec<Vector>,
    disagreement: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn disagreement(&self) -> &[f64] {
        &self.disagreement
    }

    pub fn agent_state(&self, k: usize, agent: usize) -> Vector {
        self.states[k]
            .rows(agent * self.state_dim, self.state_dim)
            .into_owned()
    }

    /// `max_{i,j} ||x_i(k) - x_j(k)||_2`.
    pub fn max_pairwise_difference(&self, k: usize) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.agents {
            let xi = self.agent_state(k, i);
            for j in i + 1..self.agents {
                worst = worst.max((&xi - self.agent_state(k, j)).norm());
            }
        }
        worst
    }

    pub fn max_agent_norm(&self, k: usize) -> f64 {
        (0..self.agents)
            .map(|i| self.agent_state(k, i).norm())
            .fold(0.0, f64::max)
    }
}

/// Iterates the closed loop from `x0` for `horizon` steps.
pub fn simulate(
    network: &NetworkModel,
    x0: &Vector,
    horizon: usize,
) -> Result<TrajectoryRecord, NetworkError> {
    let (p, n) = (network.agents(), network.state_dim());
    if x0.len() != p * n {
        return Err(dim_err(format!(
            "initial state must have length {}, got {}",
            p * n,
            x0.len()
        )));
    }
    let mut states = Vec::with_capacity(horizon + 1);
    let mut disagreement = Vec::with_capacity(horizon + 1);
    states.push(x0.clone());
    disagreement.push(disagreement_norm(x0, p, n));
    for step in 1..=horizon {
        let next = network.closed_loop() * states.last().expect("non-empty");
        let norm = next.norm();
        if !(norm <= BLOWUP_NORM) {
            return Err(NetworkError::Diverged {
                step,
                norm,
                limit: BLOWUP_NORM,
            });
        }
        disagreement.push(disagreement_norm(&next, p, n));
        states.push(next);
    }
    Ok(TrajectoryRecord {
        agents: p,
        state_dim: n,
        states,
        disagreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{complete_graph_laplacian, laplacian_from_edges};
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn two_agent_kronecker_by_hand() {
        let model = LtiModel::new(scalar(1.0), scalar(1.0)).unwrap();
        let c = InterconnectionMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        let net = assemble_network(&model, &c, &scalar(-0.25)).unwrap();
        assert_eq!(
            net.closed_loop(),
            &Matrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75])
        );
    }

    #[test]
    fn zero_gain_gives_block_diagonal() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let model = LtiModel::new(a.clone(), Matrix::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        let c = laplacian_from_edges(3, &[(1, 2), (2, 3)]).unwrap();
        let net = assemble_network(&model, &c, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(net.closed_loop(), &Matrix::identity(3, 3).kronecker(&a));
    }

    #[test]
    fn gain_shape_checked() {
        let model = LtiModel::new(scalar(1.0), scalar(1.0)).unwrap();
        let c = InterconnectionMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        assert!(matches!(
            assemble_network(&model, &c, &Matrix::zeros(2, 1)),
            Err(NetworkError::Dimension(_))
        ));
        assert!(LtiModel::new(Matrix::zeros(2, 2), Matrix::zeros(3, 1)).is_err());
        assert!(LtiModel::new(Matrix::zeros(2, 3), Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn identity_without_feedback_is_not_synchronizing() {
        let model = LtiModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
        let s = SpectrumSummary::from_eigenvalues(0.0, &[1.0, 3.0]).unwrap();
        let v = is_synchronizing(&model, &s, &Matrix::zeros(2, 2)).unwrap();
        assert!(!v.synchronized);
        for mode in &v.modes {
            assert_relative_eq!(mode.radius, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn stable_scalar_is_synchronizing() {
        let model = LtiModel::new(scalar(0.5), scalar(1.0)).unwrap();
        let s = SpectrumSummary::from_eigenvalues(0.0, &[1.0, 2.0]).unwrap();
        let v = is_synchronizing(&model, &s, &scalar(0.0)).unwrap();
        assert!(v.synchronized);
        assert_eq!(v.modes.iter().map(|m| m.radius).collect::<Vec<_>>(), vec![0.5, 0.5]);
    }

    #[test]
    fn disagreement_matches_explicit_kronecker() {
        let (p, n) = (3, 2);
        let x = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 4.0, -1.0]);
        let explicit = complete_graph_laplacian(p).unwrap().kronecker(&Matrix::identity(n, n)) * &x;
        assert_relative_eq!(disagreement_norm(&x, p, n), explicit.norm(), epsilon = 1e-12);
    }

    #[test]
    fn horizon_zero_and_zero_closed_loop() {
        let model = LtiModel::new(scalar(0.0), scalar(1.0)).unwrap();
        let c = InterconnectionMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        let net = assemble_network(&model, &c, &scalar(0.0)).unwrap();
        let x0 = Vector::from_vec(vec![1.0, 2.0]);

        let rec = simulate(&net, &x0, 0).unwrap();
        assert_eq!(rec.states(), std::slice::from_ref(&x0));
        assert_eq!(rec.horizon(), 0);

        let rec = simulate(&net, &x0, 5).unwrap();
        assert_eq!(rec.states().len(), 6);
        assert_eq!(rec.disagreement().len(), 6);
        for k in 1..=5 {
            assert_eq!(rec.states()[k], Vector::zeros(2));
            assert_eq!(rec.disagreement()[k], 0.0);
        }
    }

    #[test]
    fn blowup_is_reported() {
        let model = LtiModel::new(scalar(10.0), scalar(1.0)).unwrap();
        let c = InterconnectionMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        let net = assemble_network(&model, &c, &scalar(0.0)).unwrap();
        let err = simulate(&net, &Vector::from_vec(vec![1.0, 1.0]), 100).unwrap_err();
        assert!(matches!(err, NetworkError::Diverged { step: 12, .. }), "{err:?}");
    }

    #[test]
    fn initial_state_length_checked() {
        let model = LtiModel::new(scalar(1.0), scalar(1.0)).unwrap();
        let c = InterconnectionMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        let net = assemble_network(&model, &c, &scalar(0.0)).unwrap();
        assert!(simulate(&net, &Vector::zeros(3), 1).is_err());
    }
}
