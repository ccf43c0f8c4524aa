//! Input-state records and the data matrices built from them.
//!
//! A record `u(0..T-1), x(0..T)` yields `U- = [u(0) .. u(T-1)]`,
//! `X- = [x(0) .. x(T-1)]` and `X+ = [x(1) .. x(T)]`. The systems that explain
//! the data are exactly the `(A, B)` with `X+ = A X- + B U-`.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, LinalgError, Matrix, Vector};
use crate::network::LtiModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("record needs at least one input sample")]
    Empty,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Inputs `u(0..T-1)` as columns of an `m x T` matrix and states
/// `x(0..T)` as columns of an `n x (T+1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    inputs: Matrix,
    states: Matrix,
}

impl DataRecord {
    pub fn new(inputs: Matrix, states: Matrix) -> Result<Self, DataError> {
        let t = inputs.ncols();
        if t == 0 {
            return Err(DataError::Empty);
        }
        if states.ncols() != t + 1 {
            return Err(DataError::Dimension(format!(
                "{t} inputs need {} states, got {}",
                t + 1,
                states.ncols()
            )));
        }
        if inputs.nrows() == 0 || states.nrows() == 0 {
            return Err(DataError::Dimension("empty input or state dimension".into()));
        }
        Ok(Self { inputs, states })
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn states(&self) -> &Matrix {
        &self.states
    }

    /// Number of input samples `T`.
    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.states.nrows()
    }
}

/// `(U-, X-, X+)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataMatrices {
    #[serde(with = "crate::io::rows")]
    u_minus: Matrix,
    #[serde(with = "crate::io::rows")]
    x_minus: Matrix,
    #[serde(with = "crate::io::rows")]
    x_plus: Matrix,
}

impl DataMatrices {
    pub fn new(u_minus: Matrix, x_minus: Matrix, x_plus: Matrix) -> Result<Self, DataError> {
        let t = x_minus.ncols();
        if t == 0 {
            return Err(DataError::Empty);
        }
        if u_minus.ncols() != t || x_plus.ncols() != t {
            return Err(DataError::Dimension(format!(
                "column counts differ: U- {}, X- {}, X+ {}",
                u_minus.ncols(),
                t,
                x_plus.ncols()
            )));
        }
        if x_plus.nrows() != x_minus.nrows() {
            return Err(DataError::Dimension(format!(
                "X- has {} rows but X+ has {}",
                x_minus.nrows(),
                x_plus.nrows()
            )));
        }
        if u_minus.nrows() == 0 || x_minus.nrows() == 0 {
            return Err(DataError::Dimension("empty input or state dimension".into()));
        }
        Ok(Self {
            u_minus,
            x_minus,
            x_plus,
        })
    }

    pub fn u_minus(&self) -> &Matrix {
        &self.u_minus
    }

    pub fn x_minus(&self) -> &Matrix {
        &self.x_minus
    }

    pub fn x_plus(&self) -> &Matrix {
        &self.x_plus
    }

    pub fn state_dim(&self) -> usize {
        self.x_minus.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.u_minus.nrows()
    }

    pub fn samples(&self) -> usize {
        self.x_minus.ncols()
    }

    /// `[X-; U-]`.
    pub fn stacked(&self) -> Matrix {
        let (n, m, t) = (self.state_dim(), self.input_dim(), self.samples());
        let mut s = Matrix::zeros(n + m, t);
        s.view_mut((0, 0), (n, t)).copy_from(&self.x_minus);
        s.view_mut((n, 0), (m, t)).copy_from(&self.u_minus);
        s
    }
}

pub fn build_matrices(record: &DataRecord) -> DataMatrices {
    let t = record.len();
    DataMatrices {
        u_minus: record.inputs.clone(),
        x_minus: record.states.columns(0, t).into_owned(),
        x_plus: record.states.columns(1, t).into_owned(),
    }
}

/// `||X+ - A X- - B U-||_F`.
pub fn consistency_residual(model: &LtiModel, dm: &DataMatrices) -> Result<f64, DataError> {
    if model.state_dim() != dm.state_dim() || model.input_dim() != dm.input_dim() {
        return Err(DataError::Dimension(format!(
            "model is (n={}, m={}), data is (n={}, m={})",
            model.state_dim(),
            model.input_dim(),
            dm.state_dim(),
            dm.input_dim()
        )));
    }
    Ok((dm.x_plus() - model.a() * dm.x_minus() - model.b() * dm.u_minus()).norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identifiability {
    pub identifiable: bool,
    /// Numerical rank of `[X-; U-]`.
    pub rank: usize,
    /// `n + m`.
    pub full_rank: usize,
    /// Singular-value cutoff used for the rank decision.
    pub threshold: f64,
    /// The unique consistent system, when there is one.
    pub model: Option<LtiModel>,
}

/// The consistent set is a single system iff `[X-; U-]` has full row rank.
pub fn is_identifiable(dm: &DataMatrices) -> Result<Identifiability, DataError> {
    let (n, m) = (dm.state_dim(), dm.input_dim());
    let stacked = dm.stacked();
    let info = linalg::numerical_rank(&stacked)?;
    let identifiable = info.rank == n + m;
    let model = if identifiable {
        // [A B] = X+ S^R with the right inverse S' (S S')^{-1}
        let right_inverse = linalg::pseudo_inverse(&stacked)?;
        let ab = dm.x_plus() * right_inverse;
        let a = ab.columns(0, n).into_owned();
        let b = ab.columns(n, m).into_owned();
        Some(LtiModel::new(a, b).expect("dimensions follow from the data"))
    } else {
        None
    };
    Ok(Identifiability {
        identifiable,
        rank: info.rank,
        full_rank: n + m,
        threshold: info.threshold,
        model,
    })
}

/// Runs `x(k+1) = A x(k) + B u(k)` from `x0` over the columns of `inputs`.
pub fn generate_data(
    model: &LtiModel,
    x0: &Vector,
    inputs: &Matrix,
) -> Result<DataRecord, DataError> {
    let (n, m) = (model.state_dim(), model.input_dim());
    if x0.len() != n || inputs.nrows() != m {
        return Err(DataError::Dimension(format!(
            "expected x0 of length {n} and {m}-row inputs, got {} and {}",
            x0.len(),
            inputs.nrows()
        )));
    }
    let t = inputs.ncols();
    if t == 0 {
        return Err(DataError::Empty);
    }
    let mut states = Matrix::zeros(n, t + 1);
    states.set_column(0, x0);
    for k in 0..t {
        let next = model.a() * states.column(k) + model.b() * inputs.column(k);
        states.set_column(k + 1, &next);
    }
    DataRecord::new(inputs.clone(), states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn single_sample_record() {
        let rec = DataRecord::new(scalar(3.0), Matrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        let dm = build_matrices(&rec);
        assert_eq!(dm.x_minus(), &scalar(1.0));
        assert_eq!(dm.x_plus(), &scalar(2.0));
        assert_eq!(dm.u_minus(), &scalar(3.0));
    }

    #[test]
    fn record_shape_errors() {
        assert_eq!(
            DataRecord::new(Matrix::zeros(1, 0), Matrix::zeros(1, 1)),
            Err(DataError::Empty)
        );
        assert!(matches!(
            DataRecord::new(Matrix::zeros(1, 2), Matrix::zeros(1, 2)),
            Err(DataError::Dimension(_))
        ));
        assert!(DataMatrices::new(Matrix::zeros(1, 2), Matrix::zeros(2, 2), Matrix::zeros(2, 3)).is_err());
        assert!(DataMatrices::new(Matrix::zeros(1, 2), Matrix::zeros(2, 2), Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn zero_data_is_consistent_with_everything() {
        let dm = DataMatrices::new(scalar(0.0), scalar(0.0), scalar(0.0)).unwrap();
        let model = LtiModel::new(scalar(7.0), scalar(-3.0)).unwrap();
        assert_eq!(consistency_residual(&model, &dm).unwrap(), 0.0);
    }

    #[test]
    fn identity_stacked_matrix_identifies() {
        let dm = DataMatrices::new(
            Matrix::from_row_slice(1, 2, &[0.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::from_row_slice(1, 2, &[0.3, -2.0]),
        )
        .unwrap();
        let id = is_identifiable(&dm).unwrap();
        assert!(id.identifiable);
        assert_eq!(id.rank, 2);
        let model = id.model.unwrap();
        assert_relative_eq!(model.a()[(0, 0)], 0.3, epsilon = 1e-15);
        assert_relative_eq!(model.b()[(0, 0)], -2.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_input_identity_keeps_state() {
        let model = LtiModel::new(Matrix::identity(2, 2), Matrix::identity(2, 1)).unwrap();
        let x0 = Vector::from_vec(vec![1.5, -2.0]);
        let rec = generate_data(&model, &x0, &Matrix::zeros(1, 3)).unwrap();
        for k in 0..=3 {
            assert_eq!(rec.states().column(k), x0.column(0));
        }
        assert_eq!(
            generate_data(&model, &x0, &Matrix::zeros(1, 0)),
            Err(DataError::Empty)
        );
        assert!(generate_data(&model, &Vector::zeros(3), &Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn stacking_order() {
        let dm = DataMatrices::new(
            Matrix::from_row_slice(1, 2, &[5.0, 6.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 2.0]),
            Matrix::from_row_slice(1, 2, &[3.0, 4.0]),
        )
        .unwrap();
        assert_eq!(dm.stacked(), Matrix::from_row_slice(2, 2, &[1.0, 2.0, 5.0, 6.0]));
    }
}
