//! The `netsync` command-line driver.
//!
//! Exit codes: 0 success, 1 I/O, parse or configuration error, 2 violated
//! topology assumption, 3 design failure, 4 simulation blow-up.

pub mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{build_matrices, is_identifiable, DataMatrices};
use crate::informativity::{self, GainCertificate, LmiSolution, SynthesisOptions};
use crate::io::{self, IoError};
use crate::linalg::Matrix;
use crate::network::{self, ModeRadius, NetworkError, SyncVerdict, TrajectoryRecord};
use crate::riccati::{self, RiccatiProblem};
use crate::topology::{self, AssumptionViolation, SpectrumSummary};

pub use config::{ConfigError, ExperimentConfig, Method, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "netsync", version, about = "Synchronizing gains for homogeneous LTI networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Relative tolerance; overrides the configuration.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// Enforce every eigenvalue in the data-driven synthesis.
    #[arg(long, global = true)]
    pub enforce_all_eigenvalues: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the interconnection matrix and print its spectrum.
    ValidateTopology,
    /// Design a synchronizing gain and write gain.json.
    Design,
    /// Simulate the closed-loop network and write trajectory and metrics.
    Simulate {
        /// Gain to simulate: a gain.json artifact or a CSV matrix.
        #[arg(long)]
        gain: Option<PathBuf>,
    },
    /// Aggregate metrics.json files (or directories holding one).
    Report { inputs: Vec<PathBuf> },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("topology assumption violated: {0}")]
    Assumption(AssumptionViolation),
    #[error("design failed: {0}")]
    Design(String),
    #[error("simulation blew up: {0}")]
    Blowup(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Assumption(_) => 2,
            CliError::Design(_) => 3,
            CliError::Blowup(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("netsync: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::ValidateTopology => validate_topology(cli),
        Command::Design => design(cli),
        Command::Simulate { gain } => simulate(cli, gain.as_deref()),
        Command::Report { inputs } => report(cli, inputs),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Input("--config is required for this command".into()))?;
    Ok(ExperimentConfig::load(path)?)
}

fn tolerances(cli: &Cli, cfg: &ExperimentConfig) -> Tolerances {
    let mut t = cfg.tolerances;
    if let Some(tol) = cli.tol {
        t.tol = tol;
    }
    t
}

fn output_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(ExperimentConfig::output_dir))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn spectrum(cfg: &ExperimentConfig, tol: f64) -> Result<SpectrumSummary> {
    let c = cfg.interconnection()?;
    topology::validate_assumption(&c, tol).map_err(CliError::Assumption)
}

#[derive(Serialize)]
struct TopologyReport<'a> {
    valid: bool,
    agents: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<&'a SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<&'a AssumptionViolation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    tolerance_note: &'static str,
}

const TOLERANCE_NOTE: &str = "Imaginary parts, the zero eigenvalue and positivity are judged \
relative to max(1, ||C||_2); this cutoff is a local choice, not part of the model.";

fn validate_topology(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let tol = tolerances(cli, &cfg).tol;
    let c = cfg.interconnection()?;
    let result = topology::validate_assumption(&c, tol);
    let report = TopologyReport {
        valid: result.is_ok(),
        agents: c.agents(),
        spectrum: result.as_ref().ok(),
        violation: result.as_ref().err(),
        message: result.as_ref().err().map(ToString::to_string),
        tolerance_note: TOLERANCE_NOTE,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if cli.out.is_some() || cfg.output_dir.is_some() {
        write_json(&output_dir(cli, Some(&cfg))?.join("topology.json"), &report)?;
    }
    result.map(|_| ()).map_err(CliError::Assumption)
}

#[derive(Serialize)]
struct RiccatiReport {
    gamma: f64,
    #[serde(with = "crate::io::rows")]
    p: Matrix,
    residual: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct GainArtifact<'a> {
    method: &'static str,
    #[serde(with = "crate::io::rows")]
    gain: Matrix,
    /// Whether the gain was confirmed (spectral test or certificate).
    synchronized: bool,
    spectrum: &'a SpectrumSummary,
    tolerances: Tolerances,
    /// Closed-loop radii on the configured model, when one is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    model_check: Option<SyncVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    riccati: Option<RiccatiReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthesis: Option<&'a LmiSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a GainCertificate>,
}

#[derive(Serialize)]
struct CertificateFile<'a> {
    data: &'a DataMatrices,
    spectrum: &'a SpectrumSummary,
    certificate: &'a GainCertificate,
    note: &'static str,
}

const SEARCH_NOTE: &str = "The gain was found by a convex search over right inverses. \
A failed search does not show that the data are uninformative; only a rank-deficient X- does.";

fn design(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let tols = tolerances(cli, &cfg);
    let method = cli
        .method
        .or(cfg.method)
        .ok_or_else(|| CliError::Input("no design method: set `method` or pass --method".into()))?;
    let sigma = spectrum(&cfg, tols.tol)?;
    let out = output_dir(cli, Some(&cfg))?;
    let check = |model: &crate::network::LtiModel, k: &Matrix| -> Result<SyncVerdict> {
        network::is_synchronizing_with_margin(model, &sigma, k, tols.schur_margin)
            .map_err(|e| CliError::Input(e.to_string()))
    };

    match method {
        Method::Riccati => {
            let model = cfg.model()?;
            let (q, r) = cfg.weights(model.state_dim(), model.input_dim())?;
            let gamma = sigma.ratio();
            let problem = RiccatiProblem::new(model.clone(), q, r.clone(), gamma)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let sol = riccati::solve_modified_dare(&problem, tols.riccati_tol, tols.riccati_max_iter)
                .map_err(|e| CliError::Design(e.to_string()))?;
            let gain = riccati::riccati_gain(&model, &sol.p, &r, sigma.lambda_max)
                .map_err(|e| CliError::Design(e.to_string()))?;
            let verdict = check(&model, &gain)?;
            let synchronized = verdict.synchronized;
            let artifact = GainArtifact {
                method: method.as_str(),
                gain,
                synchronized,
                spectrum: &sigma,
                tolerances: tols,
                model_check: Some(verdict.clone()),
                riccati: Some(RiccatiReport {
                    gamma,
                    p: sol.p,
                    residual: sol.residual,
                    iterations: sol.iterations,
                }),
                synthesis: None,
                certificate: None,
            };
            write_json(&out.join("gain.json"), &artifact)?;
            if !synchronized {
                return Err(CliError::Design(format!(
                    "gain does not pass the spectral test (worst radius {})",
                    verdict.worst_radius()
                )));
            }
        }
        Method::Data => {
            let dm = build_matrices(&cfg.data_record()?);
            let options = SynthesisOptions {
                tol: tols.tol,
                margin: tols.schur_margin,
                enforce_all: cli.enforce_all_eigenvalues || cfg.enforce_all_eigenvalues,
                ..SynthesisOptions::default()
            };
            let synthesis = informativity::synthesize_gain(&dm, &sigma, &options).map_err(|e| {
                let verdict = if e.is_conclusive() {
                    "the data are not informative"
                } else {
                    "inconclusive"
                };
                CliError::Design(format!("{e} ({verdict})"))
            })?;
            let model_check = match &cfg.model {
                Some(_) => Some(check(&cfg.model()?, &synthesis.solution.gain)?),
                None => None,
            };
            let artifact = GainArtifact {
                method: method.as_str(),
                gain: synthesis.solution.gain.clone(),
                synchronized: true,
                spectrum: &sigma,
                tolerances: tols,
                model_check,
                riccati: None,
                synthesis: Some(&synthesis.solution),
                certificate: Some(&synthesis.certificate),
            };
            write_json(&out.join("gain.json"), &artifact)?;
            write_json(
                &out.join("certificate.json"),
                &CertificateFile {
                    data: &dm,
                    spectrum: &sigma,
                    certificate: &synthesis.certificate,
                    note: SEARCH_NOTE,
                },
            )?;
            let id = is_identifiable(&dm).map_err(|e| CliError::Input(e.to_string()))?;
            if !id.identifiable {
                println!(
                    "data do not identify the system ([X-; U-] has rank {} < {}); the gain is certified for every consistent system",
                    id.rank, id.full_rank
                );
            }
        }
    }
    println!("wrote {}", out.join("gain.json").display());
    Ok(())
}

#[derive(Deserialize)]
struct GainFile {
    #[serde(with = "crate::io::rows")]
    gain: Matrix,
}

fn load_gain(path: &Path) -> Result<Matrix> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let file: GainFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(file.gain)
    } else {
        Ok(io::read_matrix_file(path)?)
    }
}

/// Summary of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub horizon: usize,
    pub agents: usize,
    pub state_dim: usize,
    pub disagreement_initial: f64,
    pub disagreement_final: f64,
    /// `None` when the initial disagreement is zero.
    pub disagreement_ratio: Option<f64>,
    pub max_pairwise_difference_initial: f64,
    pub max_pairwise_difference_final: f64,
    pub max_agent_norm_initial: f64,
    pub max_agent_norm_final: f64,
    /// Spectral test on `A + lambda B K` over the topology spectrum.
    pub synchronized: bool,
    pub modes: Vec<ModeRadius>,
}

impl Metrics {
    pub fn from_trajectory(traj: &TrajectoryRecord, verdict: &SyncVerdict) -> Self {
        let h = traj.horizon();
        let d = traj.disagreement();
        Self {
            horizon: h,
            agents: traj.agents(),
            state_dim: traj.state_dim(),
            disagreement_initial: d[0],
            disagreement_final: d[h],
            disagreement_ratio: (d[0] > 0.0).then(|| d[h] / d[0]),
            max_pairwise_difference_initial: traj.max_pairwise_difference(0),
            max_pairwise_difference_final: traj.max_pairwise_difference(h),
            max_agent_norm_initial: traj.max_agent_norm(0),
            max_agent_norm_final: traj.max_agent_norm(h),
            synchronized: verdict.synchronized,
            modes: verdict.modes.clone(),
        }
    }
}

/// Pairwise difference norms `||x_i(k) - x_j(k)||`, one column per pair.
fn write_differences(path: &Path, traj: &TrajectoryRecord) -> Result<()> {
    let p = traj.agents();
    let mut header = vec!["k".to_string()];
    for i in 0..p {
        for j in i + 1..p {
            header.push(format!("d_{}_{}", i + 1, j + 1));
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Input(e.to_string()))?;
    w.write_record(&header).map_err(|e| CliError::Input(e.to_string()))?;
    for k in 0..=traj.horizon() {
        let mut row = vec![k.to_string()];
        for i in 0..p {
            let xi = traj.agent_state(k, i);
            for j in i + 1..p {
                row.push((&xi - traj.agent_state(k, j)).norm().to_string());
            }
        }
        w.write_record(&row).map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

fn simulate(cli: &Cli, gain: Option<&Path>) -> Result<()> {
    let cfg = load_config(cli)?;
    let tols = tolerances(cli, &cfg);
    let out = output_dir(cli, Some(&cfg))?;
    let gain_path = match (gain, &cfg.gain) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => out.join("gain.json"),
    };
    let k = load_gain(&gain_path)?;
    let model = cfg.model()?;
    let c = cfg.interconnection()?;
    let sigma = topology::validate_assumption(&c, tols.tol).map_err(CliError::Assumption)?;
    let x0 = cfg.initial_state()?;
    let net = network::assemble_network(&model, &c, &k).map_err(|e| CliError::Input(e.to_string()))?;
    let verdict = network::is_synchronizing_with_margin(&model, &sigma, &k, tols.schur_margin)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let traj = match network::simulate(&net, &x0, cfg.horizon) {
        Ok(t) => t,
        Err(e @ NetworkError::Diverged { .. }) => return Err(CliError::Blowup(e.to_string())),
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    io::write_trajectory_file(&out.join("trajectory.csv"), &traj)?;
    write_differences(&out.join("differences.csv"), &traj)?;
    let metrics = Metrics::from_trajectory(&traj, &verdict);
    write_json(&out.join("metrics.json"), &metrics)?;
    println!(
        "disagreement {:.6e} -> {:.6e} over {} steps",
        metrics.disagreement_initial, metrics.disagreement_final, metrics.horizon
    );
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    source: String,
    #[serde(flatten)]
    metrics: Metrics,
}

#[derive(Serialize)]
struct ReportSummary {
    runs: usize,
    synchronized: usize,
    worst_disagreement_ratio: Option<f64>,
    best_disagreement_ratio: Option<f64>,
    worst_radius: f64,
}

#[derive(Serialize)]
struct Report {
    summary: ReportSummary,
    runs: Vec<ReportRow>,
}

fn report(cli: &Cli, inputs: &[PathBuf]) -> Result<()> {
    let cfg = match &cli.config {
        Some(_) => Some(load_config(cli)?),
        None => None,
    };
    let mut sources = inputs.to_vec();
    if sources.is_empty() {
        match cfg.as_ref().and_then(ExperimentConfig::output_dir) {
            Some(dir) => sources.push(dir),
            None => return Err(CliError::Input("no metrics given to report on".into())),
        }
    }
    let mut rows = Vec::with_capacity(sources.len());
    for src in &sources {
        let file = if src.is_dir() {
            src.join("metrics.json")
        } else {
            src.clone()
        };
        let text = fs::read_to_string(&file)
            .map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
        let metrics: Metrics = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
        rows.push(ReportRow {
            source: src.display().to_string(),
            metrics,
        });
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.metrics.disagreement_ratio).collect();
    let summary = ReportSummary {
        runs: rows.len(),
        synchronized: rows.iter().filter(|r| r.metrics.synchronized).count(),
        worst_disagreement_ratio: ratios.iter().copied().reduce(f64::max),
        best_disagreement_ratio: ratios.iter().copied().reduce(f64::min),
        worst_radius: rows
            .iter()
            .flat_map(|r| r.metrics.modes.iter().map(|m| m.radius))
            .fold(0.0, f64::max),
    };

    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "source,synchronized,disagreement_ratio,worst_radius");
    for r in &rows {
        let worst = r.metrics.modes.iter().map(|m| m.radius).fold(0.0, f64::max);
        let ratio = r.metrics.disagreement_ratio.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(stdout, "{},{},{ratio},{worst}", r.source, r.metrics.synchronized);
    }
    if cli.out.is_some() || cfg.as_ref().is_some_and(|c| c.output_dir.is_some()) {
        write_json(
            &output_dir(cli, cfg.as_ref())?.join("report.json"),
            &Report {
                summary,
                runs: rows,
            },
        )?;
    }
    Ok(())
}
