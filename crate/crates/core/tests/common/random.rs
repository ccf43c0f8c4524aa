//! Seeded generators for randomized property checks.

use netsync::data::{generate_data, DataMatrices};
use netsync::linalg::{self, Matrix, Vector};
use netsync::network::LtiModel;
use netsync::topology::{laplacian_from_edges, validate_assumption, SpectrumSummary};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vector {
    Vector::from_fn(len, |_, _| rng.random_range(-scale..scale))
}

pub fn model(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LtiModel {
    LtiModel::new(matrix(rng, n, n, 1.0), matrix(rng, n, m, 1.0)).unwrap()
}

/// Random connected undirected graph on `p` agents: a random spanning tree
/// plus extra edges.
pub fn connected_edges(rng: &mut ChaCha8Rng, p: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for v in 2..=p {
        edges.push((rng.random_range(1..v), v));
    }
    for i in 1..=p {
        for j in i + 1..=p {
            if !edges.contains(&(i, j)) && rng.random_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Synchronization spectrum of a random connected graph Laplacian.
pub fn graph_spectrum(rng: &mut ChaCha8Rng, max_agents: usize) -> SpectrumSummary {
    let p = rng.random_range(2..=max_agents);
    let c = laplacian_from_edges(p, &connected_edges(rng, p)).unwrap();
    validate_assumption(&c, 1e-9).unwrap()
}

/// Random admissible spectrum given directly by its eigenvalues.
pub fn eigen_spectrum(rng: &mut ChaCha8Rng, count: usize, lo: f64, hi: f64) -> SpectrumSummary {
    let mut lambdas: Vec<f64> = (0..count).map(|_| rng.random_range(lo..hi)).collect();
    lambdas.sort_by(f64::total_cmp);
    SpectrumSummary::from_eigenvalues(0.0, &lambdas).unwrap()
}

/// Data from `model` with random inputs `u = E v` where `E` is `m x r`, so
/// `U-` has rank at most `r`.
pub fn data_with_input_rank(
    rng: &mut ChaCha8Rng,
    model: &LtiModel,
    samples: usize,
    input_rank: usize,
) -> DataMatrices {
    let (n, m) = (model.state_dim(), model.input_dim());
    let e = matrix(rng, m, input_rank, 1.0);
    let inputs = e * matrix(rng, input_rank, samples, 1.0);
    let record = generate_data(model, &vector(rng, n, 1.0), &inputs).unwrap();
    netsync::build_matrices(&record)
}

/// A random member of the consistent set: `[A B] = X+ S^+ + Z (I - S S^+)`.
pub fn consistent_system(rng: &mut ChaCha8Rng, dm: &DataMatrices, scale: f64) -> LtiModel {
    let (n, m) = (dm.state_dim(), dm.input_dim());
    let s = dm.stacked();
    let base = dm.x_plus() * linalg::pseudo_inverse(&s).unwrap();
    let proj = linalg::left_null_projector(&s).unwrap();
    let ab = base + matrix(rng, n, n + m, scale) * proj;
    LtiModel::new(ab.columns(0, n).into_owned(), ab.columns(n, m).into_owned()).unwrap()
}

/// How a randomized data set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    /// Generic inputs; `[X-; U-]` has full row rank.
    Identifiable,
    /// Two inputs driven along one direction.
    CollinearInputs,
    /// Closed-loop experiment `u = E x`, spectrum of a complete graph.
    Feedback,
}

pub struct Case {
    pub kind: CaseKind,
    pub model: LtiModel,
    pub data: DataMatrices,
    pub spectrum: SpectrumSummary,
}

/// A randomized data set together with a spectrum it can plausibly serve.
pub fn case(rng: &mut ChaCha8Rng, kind: CaseKind) -> Option<Case> {
    use netsync::riccati::{riccati_gain, solve_modified_dare, RiccatiProblem};
    let n = rng.random_range(1..=3);
    match kind {
        CaseKind::Identifiable => {
            let m = rng.random_range(1..=2);
            let model = model(rng, n, m);
            let data = data_with_input_rank(rng, &model, n + m + 1, m);
            let count = rng.random_range(1..=4);
            let spectrum = eigen_spectrum(rng, count, 1.0, 1.6);
            Some(Case { kind, model, data, spectrum })
        }
        CaseKind::CollinearInputs => {
            let model = model(rng, n, 2);
            let data = data_with_input_rank(rng, &model, n + 2, 1);
            let count = rng.random_range(1..=3);
            let spectrum = eigen_spectrum(rng, count, 1.0, 1.4);
            Some(Case { kind, model, data, spectrum })
        }
        CaseKind::Feedback => {
            let m = rng.random_range(1..=2);
            let model = model(rng, n, m);
            let problem = RiccatiProblem::new(
                model.clone(),
                Matrix::identity(n, n),
                Matrix::identity(m, m),
                1.0,
            )
            .ok()?;
            let p = solve_modified_dare(&problem, 1e-10, 10_000).ok()?.p;
            let e = riccati_gain(&model, &p, &Matrix::identity(m, m), 1.0).ok()?;
            let samples = n + 1;
            let mut states = Matrix::zeros(n, samples + 1);
            let mut inputs = Matrix::zeros(m, samples);
            states.set_column(0, &vector(rng, n, 1.0));
            for k in 0..samples {
                let u = &e * states.column(k);
                let next = model.a() * states.column(k) + model.b() * &u;
                inputs.set_column(k, &u);
                states.set_column(k + 1, &next);
            }
            let record = netsync::DataRecord::new(inputs, states).ok()?;
            let data = netsync::build_matrices(&record);
            let agents = rng.random_range(2..=5);
            let c = netsync::topology::complete_graph_laplacian(agents).ok()?;
            let c = netsync::InterconnectionMatrix::new(c).ok()?;
            let spectrum = validate_assumption(&c, 1e-9).ok()?;
            Some(Case { kind, model, data, spectrum })
        }
    }
}
