//! JSON experiment configuration. Matrix payloads are CSV files referenced by
//! path; relative paths are resolved against the configuration's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{generate_data, DataRecord};
use crate::io::{self, IoError};
use crate::linalg::{Matrix, Vector};
use crate::network::LtiModel;
use crate::topology::{self, InterconnectionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Riccati,
    Data,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Riccati => "riccati",
            Method::Data => "data",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySource {
    /// CSV file holding `C` directly.
    Matrix(PathBuf),
    /// Undirected edge list; `C` is its Laplacian.
    Edges {
        path: PathBuf,
        agents: usize,
        #[serde(default)]
        normalized: bool,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSource {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generation {
    /// `m x T` CSV of inputs.
    pub inputs: PathBuf,
    pub initial_state: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Recorded data in the `k,u_*,x_*` layout.
    Csv(PathBuf),
    /// Simulate the configured model on the given inputs.
    Generate(Generation),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub q: Option<PathBuf>,
    pub r: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for spectral and data-equation checks.
    pub tol: f64,
    /// Schur margin: radii must stay below `1 - schur_margin`.
    pub schur_margin: f64,
    pub riccati_tol: f64,
    pub riccati_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: crate::topology::DEFAULT_TOLERANCE,
            schur_margin: crate::network::SCHUR_MARGIN,
            riccati_tol: crate::riccati::DEFAULT_TOLERANCE,
            riccati_max_iter: crate::riccati::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateSource {
    Inline(Vec<f64>),
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySource,
    pub method: Option<Method>,
    pub model: Option<ModelSource>,
    pub data: Option<DataSource>,
    #[serde(default)]
    pub weights: Weights,
    /// Stacked `x(0)`, inline or as a single-column CSV.
    pub initial_state: Option<StateSource>,
    #[serde(default)]
    pub horizon: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub enforce_all_eigenvalues: bool,
    /// Gain used by `simulate`: a gain JSON artifact or a CSV matrix.
    pub gain: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    base: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("configuration: {0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| IoError::File {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn interconnection(&self) -> Result<InterconnectionMatrix, ConfigError> {
        let invalid = |e: topology::TopologyError| ConfigError::Invalid(e.to_string());
        match &self.topology {
            TopologySource::Matrix(path) => {
                let m = io::read_matrix_file(&self.resolve(path))?;
                InterconnectionMatrix::new(m).map_err(invalid)
            }
            TopologySource::Edges {
                path,
                agents,
                normalized,
            } => {
                let edges = io::read_edges_file(&self.resolve(path))?;
                if *normalized {
                    topology::random_walk_laplacian(*agents, &edges).map_err(invalid)
                } else {
                    topology::laplacian_from_edges(*agents, &edges).map_err(invalid)
                }
            }
        }
    }

    pub fn model(&self) -> Result<LtiModel, ConfigError> {
        let src = self
            .model
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("`model` is required here".into()))?;
        let a = io::read_matrix_file(&self.resolve(&src.a))?;
        let b = io::read_matrix_file(&self.resolve(&src.b))?;
        LtiModel::new(a, b).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn data_record(&self) -> Result<DataRecord, ConfigError> {
        match &self.data {
            None => Err(ConfigError::Invalid("`data` is required for the data method".into())),
            Some(DataSource::Csv(path)) => Ok(io::read_data_file(&self.resolve(path))?),
            Some(DataSource::Generate(g)) => {
                let model = self.model()?;
                let inputs = io::read_matrix_file(&self.resolve(&g.inputs))?;
                let x0 = Vector::from_vec(g.initial_state.clone());
                generate_data(&model, &x0, &inputs).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
        }
    }

    /// `(Q, R)`, identity where not given.
    pub fn weights(&self, n: usize, m: usize) -> Result<(Matrix, Matrix), ConfigError> {
        let load = |p: &Option<PathBuf>, dim: usize| -> Result<Matrix, ConfigError> {
            match p {
                Some(p) => Ok(io::read_matrix_file(&self.resolve(p))?),
                None => Ok(Matrix::identity(dim, dim)),
            }
        };
        Ok((load(&self.weights.q, n)?, load(&self.weights.r, m)?))
    }

    pub fn initial_state(&self) -> Result<Vector, ConfigError> {
        match &self.initial_state {
            None => Err(ConfigError::Invalid("`initial_state` is required for simulate".into())),
            Some(StateSource::Inline(v)) => Ok(Vector::from_vec(v.clone())),
            Some(StateSource::File(p)) => {
                let m = io::read_matrix_file(&self.resolve(p))?;
                Ok(Vector::from_iterator(m.len(), m.transpose().iter().copied()))
            }
        }
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output_dir.as_ref().map(|p| self.resolve(p))
    }
}
