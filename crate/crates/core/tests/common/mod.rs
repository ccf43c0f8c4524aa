//! Four-agent reference network: agent model, coupling, recorded data,
//! hand-computed right inverses and the resulting gain.
#![allow(dead_code)]

pub mod random;

use netsync::data::{build_matrices, DataMatrices, DataRecord};
use netsync::network::LtiModel;
use netsync::topology::{laplacian_from_edges, InterconnectionMatrix};
use netsync::{Matrix, Vector};

pub const EDGES: [(usize, usize); 4] = [(1, 2), (2, 3), (2, 4), (3, 4)];

pub fn a_true() -> Matrix {
    Matrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0])
}

pub fn b_true() -> Matrix {
    Matrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0])
}

pub fn model() -> LtiModel {
    LtiModel::new(a_true(), b_true()).unwrap()
}

pub fn coupling() -> InterconnectionMatrix {
    InterconnectionMatrix::from_row_slice(
        4,
        &[
            1.0, -1.0, 0.0, 0.0, //
            -1.0, 3.0, -1.0, -1.0, //
            0.0, -1.0, 2.0, -1.0, //
            0.0, -1.0, -1.0, 2.0,
        ],
    )
    .unwrap()
}

pub fn coupling_from_edges() -> InterconnectionMatrix {
    laplacian_from_edges(4, &EDGES).unwrap()
}

pub fn record() -> DataRecord {
    let states = Matrix::from_row_slice(
        3,
        5,
        &[
            1.0, 1.0, 3.0, 4.0, 5.0, //
            0.0, 2.0, 1.0, 1.0, 2.0, //
            1.0, 0.0, 1.0, 2.0, 3.0,
        ],
    );
    let inputs = Matrix::from_row_slice(2, 4, &[1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0]);
    DataRecord::new(inputs, states).unwrap()
}

pub fn data() -> DataMatrices {
    build_matrices(&record())
}

pub fn right_inverses() -> Vec<Matrix> {
    vec![
        Matrix::from_row_slice(
            4,
            3,
            &[
                5.0 / 12.0, 5.0 / 6.0, 29.0 / 36.0, //
                -1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, //
                7.0 / 4.0, 1.0 / 6.0, -55.0 / 36.0, //
                -13.0 / 12.0, -1.0 / 2.0, 31.0 / 36.0,
            ],
        ),
        Matrix::from_row_slice(
            4,
            3,
            &[
                7.0 / 12.0, 11.0 / 6.0, 37.0 / 12.0, //
                -1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, //
                23.0 / 12.0, 7.0 / 6.0, 3.0 / 4.0, //
                -5.0 / 4.0, -3.0 / 2.0, -17.0 / 12.0,
            ],
        ),
        Matrix::from_row_slice(
            4,
            3,
            &[
                2.0 / 3.0, 7.0 / 3.0, 38.0 / 9.0, //
                -1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, //
                2.0, 5.0 / 3.0, 17.0 / 9.0, //
                -4.0 / 3.0, -2.0, -23.0 / 9.0,
            ],
        ),
    ]
}

pub fn gain() -> Matrix {
    Matrix::from_row_slice(
        2,
        3,
        &[1.0 / 12.0, 0.5, 41.0 / 36.0, -1.0 / 12.0, -0.5, -41.0 / 36.0],
    )
}

pub fn initial_state() -> Vector {
    Vector::from_vec(vec![
        3.0, 5.0, 2.0, 3.0, 4.0, 0.0, -2.0, 4.0, -2.0, 5.0, -4.0, 3.0,
    ])
}

pub const LAMBDAS: [f64; 3] = [1.0, 3.0, 4.0];
