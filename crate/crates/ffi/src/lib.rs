//! C ABI for `netsync`.
//!
//! Conventions:
//!
//! - Matrices are dense, row-major `double` arrays with explicit dimensions.
//! - Every fallible function returns an [`NsStatus`]; results come back via
//!   out-parameters. On failure [`ns_last_error`] describes the problem.
//! - Handles ([`NsSpectrum`], [`NsData`], [`NsCertificate`]) are opaque and
//!   released with the matching `*_free` function. Strings returned by the
//!   library are released with [`ns_string_free`].
//! - Panics never cross the boundary; they surface as `NS_STATUS_PANIC`.
//!
//! ```c
//! NsSpectrum *sigma = NULL;
//! if (ns_spectrum_validate(c, 4, 0.0, &sigma) != NS_STATUS_OK) {
//!     fprintf(stderr, "%s\n", ns_last_error());
//! }
//! ```

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use netsync::data::{build_matrices, DataMatrices, DataRecord};
use netsync::informativity::{
    self, GainCertificate, InformativityError, SynthesisOptions, VerifyOptions,
};
use netsync::network::{self, LtiModel, NetworkError, SCHUR_MARGIN};
use netsync::riccati::{self, RiccatiError, RiccatiProblem};
use netsync::topology::{self, InterconnectionMatrix, SpectrumSummary};
use netsync::{linalg, Matrix, Vector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The interconnection matrix violates the admissibility assumption.
    AssumptionViolation = 3,
    /// `X-` lacks full row rank: the data are not informative.
    RankDeficient = 4,
    /// The candidate gain failed verification.
    NotCertified = 5,
    /// Synthesis found no gain; this is inconclusive.
    Infeasible = 6,
    NonConvergence = 7,
    Diverged = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

pub struct NsSpectrum(SpectrumSummary);

pub struct NsData(DataMatrices);

pub struct NsCertificate(GainCertificate);

struct Failure {
    status: NsStatus,
    message: String,
}

impl Failure {
    fn new(status: NsStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<InformativityError> for Failure {
    fn from(e: InformativityError) -> Self {
        let status = match &e {
            InformativityError::RankDeficient { .. } => NsStatus::RankDeficient,
            InformativityError::Infeasible { .. } | InformativityError::Solver(_) => {
                NsStatus::Infeasible
            }
            InformativityError::Dimension(_)
            | InformativityError::ZeroLambda
            | InformativityError::Linalg(_) => NsStatus::InvalidArgument,
            _ => NsStatus::NotCertified,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<RiccatiError> for Failure {
    fn from(e: RiccatiError) -> Self {
        let status = match &e {
            RiccatiError::NonConvergence { .. } | RiccatiError::IndefiniteIterate { .. } => {
                NsStatus::NonConvergence
            }
            _ => NsStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        let status = match &e {
            NetworkError::Diverged { .. } => NsStatus::Diverged,
            _ => NsStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult) -> NsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            NsStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            NsStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> FfiResult<()> {
    if p.is_null() {
        Err(Failure::new(NsStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_matrix(p: *const f64, rows: usize, cols: usize, name: &str) -> FfiResult<Matrix> {
    if rows * cols == 0 {
        return Ok(Matrix::zeros(rows, cols));
    }
    non_null(p, name)?;
    let slice = std::slice::from_raw_parts(p, rows * cols);
    Ok(Matrix::from_row_slice(rows, cols, slice))
}

unsafe fn write_slice(values: &[f64], out: *mut f64, capacity: usize) -> FfiResult<()> {
    if values.len() > capacity {
        return Err(Failure::new(
            NsStatus::BufferTooSmall,
            format!("need room for {} values, got {capacity}", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    non_null(out, "output buffer")?;
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

fn row_major(m: &Matrix) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    non_null(p, name)?;
    Ok(&*p)
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    non_null(out, "out")?;
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn tol_or_default(tol: f64, default: f64) -> f64 {
    if tol > 0.0 && tol.is_finite() {
        tol
    } else {
        default
    }
}

unsafe fn read_model(a: *const f64, b: *const f64, n: usize, m: usize) -> FfiResult<LtiModel> {
    let a = read_matrix(a, n, n, "a")?;
    let b = read_matrix(b, n, m, "b")?;
    LtiModel::new(a, b).map_err(Failure::from)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ns_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ns_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Checks the admissibility assumption on the `p x p` matrix `c`.
/// `tol <= 0` selects the default relative tolerance.
#[no_mangle]
pub unsafe extern "C" fn ns_spectrum_validate(
    c: *const f64,
    p: usize,
    tol: f64,
    out: *mut *mut NsSpectrum,
) -> NsStatus {
    guard(|| {
        let c = read_matrix(c, p, p, "c")?;
        let c = InterconnectionMatrix::new(c)
            .map_err(|e| Failure::new(NsStatus::InvalidArgument, e.to_string()))?;
        let tol = tol_or_default(tol, topology::DEFAULT_TOLERANCE);
        let s = topology::validate_assumption(&c, tol)
            .map_err(|e| Failure::new(NsStatus::AssumptionViolation, e.to_string()))?;
        store(out, NsSpectrum(s))
    })
}

/// Builds a spectrum from known eigenvalues `sigma(C) \ {mu}`.
#[no_mangle]
pub unsafe extern "C" fn ns_spectrum_from_eigenvalues(
    mu: f64,
    lambdas: *const f64,
    count: usize,
    out: *mut *mut NsSpectrum,
) -> NsStatus {
    guard(|| {
        let values = read_matrix(lambdas, 1, count, "lambdas")?;
        let s = SpectrumSummary::from_eigenvalues(mu, values.as_slice())
            .map_err(|e| Failure::new(NsStatus::AssumptionViolation, e.to_string()))?;
        store(out, NsSpectrum(s))
    })
}

/// Number of synchronization eigenvalues (0 for a null handle).
#[no_mangle]
pub unsafe extern "C" fn ns_spectrum_len(spectrum: *const NsSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.lambdas.len())
}

/// The eigenvalue `mu` of `1_p` (NaN for a null handle).
#[no_mangle]
pub unsafe extern "C" fn ns_spectrum_mu(spectrum: *const NsSpectrum) -> f64 {
    spectrum.as_ref().map_or(f64::NAN, |s| s.0.mu)
}

/// Copies the ascending eigenvalues into `out`.
#[no_mangle]
pub unsafe extern "C" fn ns_spectrum_lambdas(
    spectrum: *const NsSpectrum,
    out: *mut f64,
    capacity: usize,
) -> NsStatus {
    guard(|| write_slice(&handle(spectrum, "spectrum")?.0.lambdas, out, capacity))
}

#[no_mangle]
pub unsafe extern "C" fn ns_spectrum_free(spectrum: *mut NsSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Data from a record: `inputs` is `m x samples`, `states` is
/// `n x (samples + 1)`, both row-major.
#[no_mangle]
pub unsafe extern "C" fn ns_data_new(
    inputs: *const f64,
    m: usize,
    states: *const f64,
    n: usize,
    samples: usize,
    out: *mut *mut NsData,
) -> NsStatus {
    guard(|| {
        let u = read_matrix(inputs, m, samples, "inputs")?;
        let x = read_matrix(states, n, samples + 1, "states")?;
        let record = DataRecord::new(u, x)
            .map_err(|e| Failure::new(NsStatus::InvalidArgument, e.to_string()))?;
        store(out, NsData(build_matrices(&record)))
    })
}

/// Numerical rank of `X-` (`rank_x`) and of `[X-; U-]` (`rank_stacked`).
#[no_mangle]
pub unsafe extern "C" fn ns_data_rank(
    data: *const NsData,
    rank_x: *mut usize,
    rank_stacked: *mut usize,
) -> NsStatus {
    guard(|| {
        let dm = &handle(data, "data")?.0;
        non_null(rank_x, "rank_x")?;
        non_null(rank_stacked, "rank_stacked")?;
        let invalid = |e: linalg::LinalgError| Failure::new(NsStatus::InvalidArgument, e.to_string());
        *rank_x = linalg::numerical_rank(dm.x_minus()).map_err(invalid)?.rank;
        *rank_stacked = linalg::numerical_rank(&dm.stacked()).map_err(invalid)?.rank;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ns_data_free(data: *mut NsData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Verifies the `m x n` gain `k` against the data and spectrum. Non-positive
/// `tol` or `margin` select the defaults.
#[no_mangle]
pub unsafe extern "C" fn ns_verify_certificate(
    data: *const NsData,
    spectrum: *const NsSpectrum,
    k: *const f64,
    tol: f64,
    margin: f64,
    out: *mut *mut NsCertificate,
) -> NsStatus {
    guard(|| {
        let dm = &handle(data, "data")?.0;
        let sigma = &handle(spectrum, "spectrum")?.0;
        let k = read_matrix(k, dm.input_dim(), dm.state_dim(), "k")?;
        let opts = VerifyOptions {
            tol: tol_or_default(tol, informativity::DEFAULT_TOLERANCE),
            margin: tol_or_default(margin, SCHUR_MARGIN),
        };
        let cert = informativity::verify_certificate(dm, sigma, &k, &opts)?;
        store(out, NsCertificate(cert))
    })
}

/// Searches for a gain from data alone and returns its certificate.
/// `NS_STATUS_INFEASIBLE` is inconclusive; `NS_STATUS_RANK_DEFICIENT` is not.
#[no_mangle]
pub unsafe extern "C" fn ns_synthesize_gain(
    data: *const NsData,
    spectrum: *const NsSpectrum,
    tol: f64,
    enforce_all: bool,
    out: *mut *mut NsCertificate,
) -> NsStatus {
    guard(|| {
        let dm = &handle(data, "data")?.0;
        let sigma = &handle(spectrum, "spectrum")?.0;
        let opts = SynthesisOptions {
            tol: tol_or_default(tol, informativity::DEFAULT_TOLERANCE),
            enforce_all,
            ..SynthesisOptions::default()
        };
        let syn = informativity::synthesize_gain(dm, sigma, &opts)?;
        store(out, NsCertificate(syn.certificate))
    })
}

/// Gain dimensions `m x n`.
#[no_mangle]
pub unsafe extern "C" fn ns_certificate_shape(
    cert: *const NsCertificate,
    rows: *mut usize,
    cols: *mut usize,
) -> NsStatus {
    guard(|| {
        let c = &handle(cert, "certificate")?.0;
        non_null(rows, "rows")?;
        non_null(cols, "cols")?;
        *rows = c.gain.nrows();
        *cols = c.gain.ncols();
        Ok(())
    })
}

/// Copies the gain, row-major, into `out`.
#[no_mangle]
pub unsafe extern "C" fn ns_certificate_gain(
    cert: *const NsCertificate,
    out: *mut f64,
    capacity: usize,
) -> NsStatus {
    guard(|| write_slice(&row_major(&handle(cert, "certificate")?.0.gain), out, capacity))
}

/// Copies the per-eigenvalue closed-loop spectral radii into `out`.
#[no_mangle]
pub unsafe extern "C" fn ns_certificate_radii(
    cert: *const NsCertificate,
    out: *mut f64,
    capacity: usize,
) -> NsStatus {
    guard(|| write_slice(&handle(cert, "certificate")?.0.radii, out, capacity))
}

/// JSON export of the certificate; release with `ns_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ns_certificate_to_json(
    cert: *const NsCertificate,
    out: *mut *mut c_char,
) -> NsStatus {
    guard(|| {
        let c = &handle(cert, "certificate")?.0;
        non_null(out, "out")?;
        let text = serde_json::to_string(c)
            .map_err(|e| Failure::new(NsStatus::InvalidArgument, e.to_string()))?;
        let text = CString::new(text).expect("JSON has no interior NUL");
        *out = text.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ns_certificate_free(cert: *mut NsCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Model-based gain: solves the scaled Riccati equation with
/// `gamma = lambda_min / lambda_max` and writes the `m x n` gain to `k_out`.
/// Null `q` or `r` select identity weights.
#[no_mangle]
pub unsafe extern "C" fn ns_riccati_gain(
    a: *const f64,
    b: *const f64,
    n: usize,
    m: usize,
    q: *const f64,
    r: *const f64,
    lambda_min: f64,
    lambda_max: f64,
    k_out: *mut f64,
) -> NsStatus {
    guard(|| {
        let model = read_model(a, b, n, m)?;
        let q = if q.is_null() { Matrix::identity(n, n) } else { read_matrix(q, n, n, "q")? };
        let r = if r.is_null() { Matrix::identity(m, m) } else { read_matrix(r, m, m, "r")? };
        if !(lambda_min > 0.0 && lambda_max >= lambda_min) {
            return Err(Failure::new(
                NsStatus::InvalidArgument,
                format!("need 0 < lambda_min <= lambda_max, got {lambda_min} and {lambda_max}"),
            ));
        }
        let problem = RiccatiProblem::new(model.clone(), q, r.clone(), lambda_min / lambda_max)?;
        let sol = riccati::solve_modified_dare(
            &problem,
            riccati::DEFAULT_TOLERANCE,
            riccati::DEFAULT_MAX_ITER,
        )?;
        let k = riccati::riccati_gain(&model, &sol.p, &r, lambda_max)?;
        write_slice(&row_major(&k), k_out, m * n)
    })
}

/// Spectral synchronization test of `k` over the spectrum. `worst_radius`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn ns_is_synchronizing(
    a: *const f64,
    b: *const f64,
    n: usize,
    m: usize,
    k: *const f64,
    spectrum: *const NsSpectrum,
    synchronized: *mut bool,
    worst_radius: *mut f64,
) -> NsStatus {
    guard(|| {
        let model = read_model(a, b, n, m)?;
        let k = read_matrix(k, m, n, "k")?;
        let sigma = &handle(spectrum, "spectrum")?.0;
        non_null(synchronized, "synchronized")?;
        let verdict = network::is_synchronizing(&model, sigma, &k)?;
        *synchronized = verdict.synchronized;
        if !worst_radius.is_null() {
            *worst_radius = verdict.worst_radius();
        }
        Ok(())
    })
}

/// Simulates the network for `horizon` steps from the stacked state `x0`
/// (length `p * n`) and writes the `horizon + 1` disagreement norms.
#[no_mangle]
pub unsafe extern "C" fn ns_simulate(
    a: *const f64,
    b: *const f64,
    n: usize,
    m: usize,
    k: *const f64,
    c: *const f64,
    p: usize,
    x0: *const f64,
    horizon: usize,
    disagreement_out: *mut f64,
    capacity: usize,
) -> NsStatus {
    guard(|| {
        let model = read_model(a, b, n, m)?;
        let k = read_matrix(k, m, n, "k")?;
        let c = InterconnectionMatrix::new(read_matrix(c, p, p, "c")?)
            .map_err(|e| Failure::new(NsStatus::InvalidArgument, e.to_string()))?;
        let x0 = read_matrix(x0, p * n, 1, "x0")?;
        let net = network::assemble_network(&model, &c, &k)?;
        let traj = network::simulate(&net, &Vector::from_column_slice(x0.as_slice()), horizon)?;
        write_slice(traj.disagreement(), disagreement_out, capacity)
    })
}
