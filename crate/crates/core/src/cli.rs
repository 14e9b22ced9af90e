//! The `coca` command line.
//!
//! Every subcommand resolves its settings as flag > JSON config file
//! (`--config`) > default, writes its outputs under the output directory
//! (`--output-dir`, then the config's `output_dir`, then `COCA_OUTPUT_DIR`,
//! then `.`) and records a `<command>.manifest.json` there.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 invalid configuration
//! or parameters, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CocaError, Result};
use crate::evalkit::{
    rate_check, replicate_experiment, EstimatorName, ExperimentConfig, MethodName, PsdHandling,
};
use crate::io::{
    fmt_f64, matrix_json, read_data_csv, read_matrix_csv, write_json, write_matrix_csv, write_roc_csvs,
    write_table_csv, Manifest,
};
use crate::nonparanormal::{
    contaminate, derive_seed, sample_latent_and_observed, synthesize_model, ContaminationSpec, Scheme,
    TransformSet,
};
use crate::psd_project::{project_matrix_maxnorm, scaled_covariance, PsdOptions};
use crate::rank_stats::{
    marginal_moments, normal_scores, pearson_correlation, pearson_covariance, spearman_correlation,
    spearman_covariance, spearman_rho_matrix, CorrelationKind,
};
use crate::sparse_eigen::{top_m_eigenvectors, Shift, SolverOptions, SparseMethod};

pub const OUTPUT_DIR_ENV: &str = "COCA_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "coca", version, about = "Rank-based sparse PCA for heavy-tailed data")]
pub struct Cli {
    /// Print errors as JSON objects on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default: config `output_dir`, then $COCA_OUTPUT_DIR, then `.`).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// JSON file with settings for the subcommand; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a correlation or covariance matrix from an n x d data CSV.
    Estimate(EstimateArgs),
    /// Max-norm projection of a symmetric matrix onto the PSD cone.
    ProjectPsd(ProjectArgs),
    /// Sparse leading eigenvectors of a matrix (or of the estimate from data).
    SparsePca(SparsePcaArgs),
    /// Draw a synthetic nonparanormal data set.
    Simulate(SimulateArgs),
    /// Monte Carlo support-recovery experiment.
    Experiment(ExperimentArgs),
    /// Empirical max-norm error of the Spearman estimator against n.
    RateCheck(RateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    /// `2 sin(πρ/6)` of Spearman's rho.
    Spearman,
    /// Spearman's rho without the sine transform.
    SpearmanRaw,
    Pearson,
    /// Pearson correlation of the normal scores.
    NormalScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub input: Option<PathBuf>,
    pub header: bool,
    pub method: EstimateMethod,
    /// Scale by the marginal standard deviations.
    pub covariance: bool,
    /// Project onto the PSD cone when the estimate is indefinite.
    pub project_psd: bool,
    pub output: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            input: None,
            header: false,
            method: EstimateMethod::Spearman,
            covariance: false,
            project_psd: false,
            output: None,
            output_dir: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// The input has a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum)]
    pub method: Option<EstimateMethod>,
    #[arg(long)]
    pub covariance: bool,
    #[arg(long)]
    pub project_psd: bool,
    /// Output CSV (default: `estimate.csv`; a `.json` extension writes JSON).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub input: Option<PathBuf>,
    pub header: bool,
    pub eig_tol: f64,
    pub dist_tol: f64,
    pub max_iters: usize,
    pub output: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        let o = PsdOptions::default();
        Self {
            input: None,
            header: false,
            eig_tol: o.eig_tol,
            dist_tol: o.dist_tol,
            max_iters: o.max_iters,
            output: None,
            output_dir: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    /// Eigenvalue tolerance [default: 1e-8].
    #[arg(long)]
    pub eig_tol: Option<f64>,
    /// Bisection stops when the bracket is this narrow [default: 1e-6].
    #[arg(long)]
    pub dist_tol: Option<f64>,
    /// Bisection steps [default: 200].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output CSV (default: `projected.csv`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    /// `ℓ0` truncated power method (`--k`).
    Tpower,
    /// `ℓq` truncated power method (`--q`, `--radius`).
    Qtpm,
    /// Penalized matrix decomposition (`--delta`).
    Pmd,
    /// Elastic-net sparse PCA (`--delta1`, `--delta2`).
    Spca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    /// A symmetric matrix.
    Matrix,
    /// An n x d data set; the sine-transformed Spearman matrix is used.
    Data,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsePcaConfig {
    pub input: Option<PathBuf>,
    pub header: bool,
    pub input_kind: InputKind,
    pub psd: PsdHandling,
    pub solver: SolverName,
    pub components: usize,
    pub k: usize,
    pub q: f64,
    pub radius: f64,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub max_iters: usize,
    pub output: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for SparsePcaConfig {
    fn default() -> Self {
        Self {
            input: None,
            header: false,
            input_kind: InputKind::Matrix,
            psd: PsdHandling::Project,
            solver: SolverName::Tpower,
            components: 1,
            k: 10,
            q: 1.0,
            radius: 2.0,
            delta: 2.0,
            delta1: 1e-4,
            delta2: 0.1,
            max_iters: 1000,
            output: None,
            output_dir: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SparsePcaArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    /// How to read the input [default: matrix].
    #[arg(long, value_enum)]
    pub input_kind: Option<InputKind>,
    /// Handling of an indefinite matrix [default: project].
    #[arg(long, value_enum)]
    pub psd: Option<PsdHandling>,
    /// [default: tpower]
    #[arg(long, value_enum)]
    pub solver: Option<SolverName>,
    /// Number of components, extracted by deflation [default: 1].
    #[arg(long)]
    pub components: Option<usize>,
    /// Support size for tpower [default: 10].
    #[arg(long)]
    pub k: Option<usize>,
    /// `q` for qtpm [default: 1].
    #[arg(long)]
    pub q: Option<f64>,
    /// `ℓq` radius for qtpm [default: 2].
    #[arg(long)]
    pub radius: Option<f64>,
    /// `ℓ1` bound for pmd [default: 2].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Ridge penalty for spca [default: 1e-4].
    #[arg(long)]
    pub delta1: Option<f64>,
    /// Lasso penalty for spca [default: 0.1].
    #[arg(long)]
    pub delta2: Option<f64>,
    /// Iteration cap [default: 1000].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output JSON (default: `sparse_pca.json`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub d: usize,
    pub sparsity: usize,
    pub r: f64,
    pub magnitude: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Also write the latent Gaussian draws here.
    pub latent_output: Option<PathBuf>,
    /// Also write the contaminated positions here, as JSON.
    pub contamination_output: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Linear,
            n: 200,
            d: 100,
            sparsity: 10,
            r: 0.0,
            magnitude: 5.0,
            seed: 0,
            output: None,
            latent_output: None,
            contamination_output: None,
            output_dir: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// 1 (identity margins) or 2 (cycled nonlinear margins) [default: 1].
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scheme: Option<u8>,
    /// [default: 200]
    #[arg(long)]
    pub n: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub d: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Contamination rate [default: 0].
    #[arg(long)]
    pub r: Option<f64>,
    /// Outlier magnitude [default: 5].
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV (default: `simulated.csv`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub latent_output: Option<PathBuf>,
    /// JSON list of contaminated `(row, column, positive)` positions.
    #[arg(long)]
    pub contamination_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// [default: 1]
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scheme: Option<u8>,
    /// Sample sizes, comma separated [default: 200].
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// [default: 100]
    #[arg(long)]
    pub d: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Contamination rates, comma separated [default: 0].
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    /// [default: tpower]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<MethodName>>,
    /// [default: pearson,spearman,oracle]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub estimators: Option<Vec<EstimatorName>>,
    /// [default: 100]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: project]
    #[arg(long, value_enum)]
    pub psd: Option<PsdHandling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub ns: Vec<usize>,
    pub d: usize,
    pub replicates: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            ns: vec![125, 500],
            d: 50,
            replicates: 200,
            seed: 0,
            output: None,
            output_dir: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Increasing sample sizes, comma separated [default: 125,500].
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// [default: 50]
    #[arg(long)]
    pub d: Option<usize>,
    /// [default: 200]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV (default: `rate_check.csv`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        *slot = flag.clone();
    }
}

fn scheme_of(v: u8) -> Scheme {
    if v == 2 {
        Scheme::Nonlinear
    } else {
        Scheme::Linear
    }
}

/// Read a JSON config file into `T`, or `T::default()` without one.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CocaError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CocaError::Config(format!("{}: {e}", path.display())))
}

fn resolve_dir(flag: &Option<PathBuf>, config: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| config.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Relative output paths are taken inside the output directory.
fn output_path(dir: &Path, given: &Option<PathBuf>, default: &str) -> PathBuf {
    match given {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => dir.join(p),
        None => dir.join(default),
    }
}

fn require_input(input: &Option<PathBuf>) -> Result<&Path> {
    input
        .as_deref()
        .ok_or_else(|| CocaError::Config("input: an input file is required".into()))
}

fn config_json(value: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

struct RunContext {
    dir: PathBuf,
    command: &'static str,
}

impl RunContext {
    fn new(dir: PathBuf, command: &'static str) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, command })
    }

    fn finish(&self, mut manifest: Manifest, outputs: &[PathBuf]) -> Result<()> {
        manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        write_json(
            &self.dir.join(format!("{}.manifest.json", self.command)),
            &manifest,
        )
    }
}

fn run_estimate(cli: &Cli, args: &EstimateArgs) -> Result<()> {
    let mut cfg: EstimateConfig = load_config(cli.config.as_deref())?;
    set_opt(&mut cfg.input, &args.input);
    cfg.header |= args.header;
    set(&mut cfg.method, &args.method);
    cfg.covariance |= args.covariance;
    cfg.project_psd |= args.project_psd;
    set_opt(&mut cfg.output, &args.output);
    if cfg.covariance
        && matches!(
            cfg.method,
            EstimateMethod::SpearmanRaw | EstimateMethod::NormalScores
        )
    {
        return Err(CocaError::Config(
            "covariance: only available for the spearman and pearson methods".into(),
        ));
    }
    let ctx = RunContext::new(resolve_dir(&cli.output_dir, &cfg.output_dir), "estimate")?;
    let data = read_data_csv(require_input(&cfg.input)?, cfg.header)?;
    let out = output_path(&ctx.dir, &cfg.output, "estimate.csv");

    let (mut matrix, mut kind) = match cfg.method {
        EstimateMethod::Spearman => (spearman_correlation(&data)?.matrix, "spearman-sine"),
        EstimateMethod::SpearmanRaw => (spearman_rho_matrix(&data)?.matrix, "spearman-raw"),
        EstimateMethod::Pearson => (pearson_correlation(&data)?.matrix, "pearson"),
        EstimateMethod::NormalScores => (
            pearson_correlation(&normal_scores(&data)?)?.matrix,
            "normal-scores",
        ),
    };
    let mut summary = json!({});
    if cfg.project_psd {
        let res = match project_matrix_maxnorm(&matrix, &PsdOptions::default()) {
            Ok(r) => r,
            Err(CocaError::NotConverged { best, .. }) => *best,
            Err(e) => return Err(e),
        };
        summary = json!({
            "achieved_distance": res.achieved_distance,
            "min_eigenvalue": res.min_eigenvalue,
            "converged": res.converged,
        });
        if cfg.covariance {
            matrix = scaled_covariance(&res, &marginal_moments(&data)?)?.matrix;
        } else {
            matrix = res.matrix;
        }
        kind = if cfg.covariance {
            "psd-projected-covariance"
        } else {
            "psd-projected"
        };
    } else if cfg.covariance {
        matrix = match cfg.method {
            EstimateMethod::Spearman => spearman_covariance(&data)?.matrix,
            _ => pearson_covariance(&data)?.matrix,
        };
        kind = if cfg.method == EstimateMethod::Spearman {
            "spearman-sine-covariance"
        } else {
            "pearson-covariance"
        };
    }
    if out.extension().is_some_and(|e| e == "json") {
        write_json(&out, &matrix_json(kind, &matrix))?;
    } else {
        write_matrix_csv(&out, &matrix, None)?;
    }
    let mut manifest = Manifest::new(ctx.command, config_json(&cfg)?, None);
    summary["kind"] = json!(kind);
    summary["n"] = json!(data.n());
    summary["d"] = json!(data.d());
    manifest.summary = Some(summary);
    ctx.finish(manifest, &[out])
}

fn run_project(cli: &Cli, args: &ProjectArgs) -> Result<()> {
    let mut cfg: ProjectConfig = load_config(cli.config.as_deref())?;
    set_opt(&mut cfg.input, &args.input);
    cfg.header |= args.header;
    set(&mut cfg.eig_tol, &args.eig_tol);
    set(&mut cfg.dist_tol, &args.dist_tol);
    set(&mut cfg.max_iters, &args.max_iters);
    set_opt(&mut cfg.output, &args.output);
    let ctx = RunContext::new(resolve_dir(&cli.output_dir, &cfg.output_dir), "project-psd")?;
    let input = read_matrix_csv(require_input(&cfg.input)?, cfg.header)?;
    let opts = PsdOptions {
        eig_tol: cfg.eig_tol,
        dist_tol: cfg.dist_tol,
        max_iters: cfg.max_iters,
        ..PsdOptions::default()
    };
    let (res, failure) = match project_matrix_maxnorm(&input, &opts) {
        Ok(r) => (r, None),
        Err(CocaError::NotConverged {
            width,
            iterations,
            best,
        }) => (
            *best.clone(),
            Some(CocaError::NotConverged {
                width,
                iterations,
                best,
            }),
        ),
        Err(e) => return Err(e),
    };
    let out = output_path(&ctx.dir, &cfg.output, "projected.csv");
    write_matrix_csv(&out, &res.matrix, None)?;
    let summary = json!({
        "kind": CorrelationKind::PsdProjected,
        "achieved_distance": res.achieved_distance,
        "certified_lower_bound": res.certified_lower_bound,
        "min_eigenvalue": res.min_eigenvalue,
        "iterations": res.iterations,
        "converged": res.converged,
    });
    let sidecar = out.with_extension("json");
    write_json(&sidecar, &summary)?;
    let mut manifest = Manifest::new(ctx.command, config_json(&cfg)?, None);
    manifest.summary = Some(summary);
    ctx.finish(manifest, &[out, sidecar])?;
    failure.map_or(Ok(()), Err)
}

fn run_sparse_pca(cli: &Cli, args: &SparsePcaArgs) -> Result<()> {
    let mut cfg: SparsePcaConfig = load_config(cli.config.as_deref())?;
    set_opt(&mut cfg.input, &args.input);
    cfg.header |= args.header;
    set(&mut cfg.input_kind, &args.input_kind);
    set(&mut cfg.psd, &args.psd);
    set(&mut cfg.solver, &args.solver);
    set(&mut cfg.components, &args.components);
    set(&mut cfg.k, &args.k);
    set(&mut cfg.q, &args.q);
    set(&mut cfg.radius, &args.radius);
    set(&mut cfg.delta, &args.delta);
    set(&mut cfg.delta1, &args.delta1);
    set(&mut cfg.delta2, &args.delta2);
    set(&mut cfg.max_iters, &args.max_iters);
    set_opt(&mut cfg.output, &args.output);
    if cfg.components == 0 {
        return Err(CocaError::Config("components: must be positive".into()));
    }
    let ctx = RunContext::new(resolve_dir(&cli.output_dir, &cfg.output_dir), "sparse-pca")?;
    let path = require_input(&cfg.input)?;
    let gamma = match cfg.input_kind {
        InputKind::Matrix => read_matrix_csv(path, cfg.header)?,
        InputKind::Data => spearman_correlation(&read_data_csv(path, cfg.header)?)?.matrix,
    };
    let gamma = crate::evalkit::prepare_matrix(gamma, cfg.psd, &PsdOptions::default())?;
    let opts = SolverOptions {
        max_iters: cfg.max_iters,
        shift: if cfg.psd == PsdHandling::None {
            Shift::Auto
        } else {
            Shift::None
        },
        ..SolverOptions::default()
    };
    let method = match cfg.solver {
        SolverName::Tpower => SparseMethod::Qtpm {
            opts: SolverOptions {
                radius: cfg.k as f64,
                ..opts
            },
        },
        SolverName::Qtpm => SparseMethod::Qtpm {
            opts: SolverOptions {
                q: cfg.q,
                radius: cfg.radius,
                ..opts
            },
        },
        SolverName::Pmd => SparseMethod::Pmd {
            delta: cfg.delta,
            opts,
        },
        SolverName::Spca => SparseMethod::Spca {
            delta1: cfg.delta1,
            delta2: cfg.delta2,
            opts,
        },
    };
    let results = top_m_eigenvectors(&gamma, &vec![method; cfg.components])?;
    let out = output_path(&ctx.dir, &cfg.output, "sparse_pca.json");
    write_json(&out, &json!({ "components": results }))?;
    let mut manifest = Manifest::new(ctx.command, config_json(&cfg)?, None);
    manifest.summary = Some(json!({
        "supports": results.iter().map(|r| r.support.clone()).collect::<Vec<_>>(),
        "converged": results.iter().map(|r| r.converged).collect::<Vec<_>>(),
    }));
    ctx.finish(manifest, &[out])
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let mut cfg: SimulateConfig = load_config(cli.config.as_deref())?;
    if let Some(s) = args.scheme {
        cfg.scheme = scheme_of(s);
    }
    set(&mut cfg.n, &args.n);
    set(&mut cfg.d, &args.d);
    set(&mut cfg.sparsity, &args.sparsity);
    set(&mut cfg.r, &args.r);
    set(&mut cfg.magnitude, &args.magnitude);
    set(&mut cfg.seed, &args.seed);
    set_opt(&mut cfg.output, &args.output);
    set_opt(&mut cfg.latent_output, &args.latent_output);
    set_opt(&mut cfg.contamination_output, &args.contamination_output);

    let mut problems = Vec::new();
    if cfg.n == 0 {
        problems.push("n: must be positive".to_string());
    }
    if cfg.sparsity == 0 || cfg.d < 2 * cfg.sparsity {
        problems.push(format!(
            "d: must be at least 2 * sparsity ({}), got {}",
            2 * cfg.sparsity,
            cfg.d
        ));
    }
    let spec = ContaminationSpec {
        rate: cfg.r,
        magnitude: cfg.magnitude,
    };
    if let Err(e) = spec.validate() {
        problems.push(format!("r: {e}"));
    }
    if !problems.is_empty() {
        return Err(CocaError::Config(problems.join("; ")));
    }

    let ctx = RunContext::new(resolve_dir(&cli.output_dir, &cfg.output_dir), "simulate")?;
    let model = synthesize_model(cfg.d, cfg.sparsity)?;
    let transforms = TransformSet::for_scheme(cfg.scheme, cfg.d);
    let sample = sample_latent_and_observed(&model.sigma0, &transforms, cfg.n, derive_seed(cfg.seed, 0))?;
    let contaminated = contaminate(&sample.observed, &spec, derive_seed(cfg.seed, 1))?;

    let header: Vec<String> = (1..=cfg.d).map(|j| format!("x{j}")).collect();
    let out = output_path(&ctx.dir, &cfg.output, "simulated.csv");
    write_matrix_csv(&out, contaminated.data.values(), Some(&header))?;
    let mut outputs = vec![out];
    if cfg.latent_output.is_some() {
        let latent = output_path(&ctx.dir, &cfg.latent_output, "latent.csv");
        write_matrix_csv(&latent, sample.latent.values(), Some(&header))?;
        outputs.push(latent);
    }
    if cfg.contamination_output.is_some() {
        let path = output_path(&ctx.dir, &cfg.contamination_output, "contamination.json");
        write_json(&path, &contaminated.entries)?;
        outputs.push(path);
    }
    let mut manifest = Manifest::new(ctx.command, config_json(&cfg)?, Some(cfg.seed));
    manifest.summary = Some(json!({
        "sample_seed": derive_seed(cfg.seed, 0),
        "contamination_seed": derive_seed(cfg.seed, 1),
        "contaminated_entries": contaminated.entries.len(),
        "theta1_support": model.theta1_support(),
        "theta2_support": model.theta2_support(),
    }));
    ctx.finish(manifest, &outputs)
}

/// Resolve the experiment configuration from defaults, file and flags.
pub fn resolve_experiment_config(
    config: Option<&Path>,
    args: &ExperimentArgs,
    threads: Option<usize>,
) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = load_config(config)?;
    if let Some(s) = args.scheme {
        cfg.scheme = scheme_of(s);
    }
    set(&mut cfg.ns, &args.n);
    set(&mut cfg.d, &args.d);
    set(&mut cfg.sparsity, &args.sparsity);
    set(&mut cfg.rates, &args.r);
    set(&mut cfg.methods, &args.methods);
    set(&mut cfg.estimators, &args.estimators);
    set(&mut cfg.replicates, &args.replicates);
    set(&mut cfg.base_seed, &args.seed);
    set(&mut cfg.psd, &args.psd);
    set_opt(&mut cfg.threads, &threads);
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(cli: &Cli, args: &ExperimentArgs) -> Result<()> {
    let mut cfg = resolve_experiment_config(cli.config.as_deref(), args, cli.threads)?;
    let dir = resolve_dir(&cli.output_dir, &cfg.output_dir);
    cfg.output_dir = Some(dir.clone());
    let ctx = RunContext::new(dir, "experiment")?;
    let report = replicate_experiment(&cfg)?;

    let table = ctx.dir.join("table.csv");
    write_table_csv(&table, &report)?;
    let mut outputs = vec![table];
    outputs.extend(write_roc_csvs(&ctx.dir, &report)?);

    let mut resolved = cfg.clone();
    resolved.grids = cfg.grids.resolve(cfg.d);
    let mut manifest = Manifest::new(ctx.command, config_json(&resolved)?, Some(cfg.base_seed));
    manifest.summary = Some(json!({
        "seed_derivation": "replicate i of sample size n uses derive_seed(derive_seed(base_seed, n), i); \
                            sampling uses derive_seed(that, 0), contamination derive_seed(that, 1)",
        "cells": report.cells.iter().map(|c| json!({
            "method": c.summary.key.method,
            "estimator": c.summary.key.estimator,
            "n": c.summary.key.n,
            "r": c.summary.key.r,
            "excluded": c.summary.excluded,
            "solver_failures": c.solver_failures,
            "auc": c.roc.auc,
        })).collect::<Vec<_>>(),
    }));
    ctx.finish(manifest, &outputs)
}

fn run_rate(cli: &Cli, args: &RateArgs) -> Result<()> {
    let mut cfg: RateConfig = load_config(cli.config.as_deref())?;
    set(&mut cfg.ns, &args.ns);
    set(&mut cfg.d, &args.d);
    set(&mut cfg.replicates, &args.replicates);
    set(&mut cfg.seed, &args.seed);
    set_opt(&mut cfg.output, &args.output);
    let ctx = RunContext::new(resolve_dir(&cli.output_dir, &cfg.output_dir), "rate-check")?;
    let table = rate_check(&cfg.ns, cfg.d, cfg.replicates, cfg.seed).map_err(|e| match e {
        CocaError::InvalidInput(m) | CocaError::InvalidDimension(m) => CocaError::Config(m),
        other => other,
    })?;
    let out = output_path(&ctx.dir, &cfg.output, "rate_check.csv");
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record([
        "n",
        "mean_error",
        "max_error",
        "rate",
        "scaled_error",
        "bound",
        "bound_holds",
        "bound_vacuous",
    ])?;
    for row in &table.rows {
        w.write_record([
            row.n.to_string(),
            fmt_f64(row.mean_error),
            fmt_f64(row.max_error),
            fmt_f64(row.rate),
            fmt_f64(row.scaled_error),
            fmt_f64(row.bound),
            row.bound_holds.to_string(),
            row.bound_vacuous.to_string(),
        ])?;
    }
    w.flush()?;
    let ratios: Vec<f64> = (1..table.rows.len())
        .map(|i| table.error_ratio(i - 1, i))
        .collect();
    let mut manifest = Manifest::new(ctx.command, config_json(&cfg)?, Some(cfg.seed));
    manifest.summary = Some(json!({ "consecutive_error_ratios": ratios, "monotone": table.monotone() }));
    ctx.finish(manifest, &[out])
}

/// Process exit code for an error.
pub fn exit_code(err: &CocaError) -> i32 {
    match err {
        CocaError::Config(_)
        | CocaError::InvalidInput(_)
        | CocaError::InvalidRadius(_)
        | CocaError::InvalidDimension(_) => 2,
        CocaError::Io(_) | CocaError::Csv(_) | CocaError::Json(_) | CocaError::InvalidData(_) => 1,
        _ => 3,
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => run_estimate(cli, a),
        Command::ProjectPsd(a) => run_project(cli, a),
        Command::SparsePca(a) => run_sparse_pca(cli, a),
        Command::Simulate(a) => run_simulate(cli, a),
        Command::Experiment(a) => run_experiment(cli, a),
        Command::RateCheck(a) => run_rate(cli, a),
    }
}

/// Execute a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.threads {
        Some(0) => Err(CocaError::Config("threads: must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CocaError::Config(format!("threads: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli))),
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            let code = exit_code(&err);
            if cli.json_errors {
                eprintln!(
                    "{}",
                    json!({ "error": err.name(), "message": err.to_string(), "exit_code": code })
                );
            } else {
                eprintln!("error [{}]: {err}", err.name());
            }
            code
        }
    }
}

/// Parse `args` (including the program name) and run.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn experiment_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"d": 60, "replicates": 7, "base_seed": 3}"#).unwrap();
        let cli = Cli::try_parse_from(["coca", "experiment", "--replicates", "5"]).unwrap();
        let Command::Experiment(args) = &cli.command else {
            panic!()
        };
        let cfg = resolve_experiment_config(Some(&path), args, None).unwrap();
        assert_eq!(cfg.replicates, 5);
        assert_eq!(cfg.d, 60);
        assert_eq!(cfg.base_seed, 3);
        assert_eq!(cfg.ns, vec![200]);
    }

    #[test]
    fn unknown_config_field_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"replicatez": 7}"#).unwrap();
        let err = load_config::<ExperimentConfig>(Some(&path)).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(err.to_string().contains("replicatez"));
    }

    #[test]
    fn config_round_trips() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }
}
