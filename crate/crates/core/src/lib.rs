//! Synchronization of homogeneous discrete-time LTI networks.
//!
//! Agents `x_i(k+1) = A x_i(k) + B u_i(k)` coupled through
//! `u_i = K sum_j c_ij x_j` form the network
//! `x(k+1) = (I_p (x) A + C (x) BK) x(k)`. The crate covers:
//!
//! - [`topology`]: interconnection matrices and their admissible spectrum,
//! - [`network`]: closed-loop assembly, the per-mode Schur test and simulation,
//! - [`riccati`]: model-based gains from a scaled Riccati equation,
//! - [`data`]: input-state records and data matrices,
//! - [`informativity`]: gain certificates and gain synthesis directly from data,
//! - [`cli`]: the `netsync` command-line driver.

// NaN must fail these checks, so `!(x <= bound)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod informativity;
pub mod io;
pub mod linalg;
pub mod lmi;
pub mod network;
pub mod riccati;
pub mod topology;

pub use data::{build_matrices, DataMatrices, DataRecord};
pub use informativity::{GainCertificate, RightInverseFamily, VerifyOptions};
pub use linalg::{Matrix, Vector};
pub use network::{LtiModel, NetworkModel, TrajectoryRecord};
pub use topology::{InterconnectionMatrix, SpectrumSummary};
