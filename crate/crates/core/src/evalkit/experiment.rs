//! Monte Carlo replication of the synthetic support-recovery experiments.
//!
//! For each cell `(n, r)` and replicate: draw latent Gaussian rows, apply the
//! scheme's marginal transforms, contaminate, then estimate a correlation
//! matrix three ways (Pearson on the observed data, sine-transformed Spearman
//! on the observed data, Pearson on the latent draws as an oracle). Every
//! sparse solver is run over its tuning grid and scored against the true
//! leading eigenvector. Replicates run in parallel with derived seeds and are
//! folded in index order, so results do not depend on the thread count.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CocaError, Result};
use crate::linalg::min_eigenvalue;
use crate::nonparanormal::{
    contaminate, derive_seed, sample_latent_and_observed, synthesize_model, ContaminationSpec, Scheme,
    SyntheticModel, TransformSet,
};
use crate::psd_project::{project_matrix_maxnorm, PsdOptions};
use crate::rank_stats::{pearson_correlation, spearman_correlation, DataMatrix};
use crate::sparse_eigen::{default_qtpm_init, SPCA_INIT_DELTA1};
use crate::sparse_eigen::{
    pmd_rank_one, power_init, qtpm, spca_leading, InitStrategy, Shift, SolverOptions, SparseEigenResult,
};

use super::metrics::{sin_angle, support_metrics, SupportMetrics};
use super::roc::{roc_curve, RocCurve, SparserWhen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Pmd,
    Spca,
    Tpower,
    Qtpm,
}

impl MethodName {
    pub fn label(self) -> &'static str {
        match self {
            MethodName::Pmd => "PMD",
            MethodName::Spca => "SPCA",
            MethodName::Tpower => "TPower",
            MethodName::Qtpm => "qTPM",
        }
    }

    pub fn sparser_when(self) -> SparserWhen {
        match self {
            MethodName::Spca => SparserWhen::Larger,
            _ => SparserWhen::Smaller,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorName {
    Pearson,
    Spearman,
    Oracle,
}

impl EstimatorName {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorName::Pearson => "Pearson",
            EstimatorName::Spearman => "Spearman",
            EstimatorName::Oracle => "Oracle",
        }
    }
}

/// What to do with an indefinite estimate before running the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PsdHandling {
    /// Max-norm PSD projection when the estimate is indefinite.
    Project,
    /// Add `max(0, −λ_min)·(1 + 1e-3)` to the diagonal.
    Shift,
    None,
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Tuning paths. `None` entries resolve against `d` (see [`Grids::resolve`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Support sizes; default `2, 4, …, 40`, capped at `d`.
    pub tpower: Option<Vec<usize>>,
    /// `ℓ1` bounds; default 20 log-spaced points in `[1, √d]`.
    pub pmd: Option<Vec<f64>>,
    pub spca_delta1: f64,
    pub spca_delta2: Vec<f64>,
    pub qtpm_q: f64,
    /// Radii; default 20 log-spaced points in `[1.05, d^{1 − q/2}]`.
    pub qtpm_radii: Option<Vec<f64>>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            tpower: None,
            pmd: None,
            spca_delta1: SPCA_INIT_DELTA1,
            spca_delta2: log_spaced(0.01, 2.0, 20),
            qtpm_q: 1.0,
            qtpm_radii: None,
        }
    }
}

impl Grids {
    /// Fill in the dimension-dependent defaults.
    pub fn resolve(&self, d: usize) -> Grids {
        let mut out = self.clone();
        let df = d as f64;
        if out.tpower.is_none() {
            out.tpower = Some((1..=20).map(|i| 2 * i).filter(|&k| k <= d).collect());
        }
        if out.pmd.is_none() {
            out.pmd = Some(log_spaced(1.0, df.sqrt(), 20));
        }
        if out.qtpm_radii.is_none() {
            out.qtpm_radii = Some(log_spaced(1.05, df.powf(1.0 - out.qtpm_q / 2.0), 20));
        }
        out
    }

    fn path(&self, method: MethodName) -> Vec<f64> {
        match method {
            MethodName::Tpower => self.tpower.iter().flatten().map(|&k| k as f64).collect(),
            MethodName::Pmd => self.pmd.clone().unwrap_or_default(),
            MethodName::Spca => self.spca_delta2.clone(),
            MethodName::Qtpm => self.qtpm_radii.clone().unwrap_or_default(),
        }
    }
}

/// Projection tolerances used inside the replication loop.
///
/// The estimate only feeds a sparse eigensolver, so a PSD matrix within about
/// 1e-4 of the optimal max-norm distance is plenty; the tighter library
/// defaults cost roughly twenty times more per replicate at `d = 100`.
pub fn harness_psd_options() -> PsdOptions {
    PsdOptions {
        dist_tol: 1e-4,
        inner_cap: 100,
        stall_window: 20,
        ..PsdOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    /// Sample sizes; one cell per `(n, r)` pair.
    pub ns: Vec<usize>,
    pub d: usize,
    /// Support size of each sparse eigenvector.
    pub sparsity: usize,
    /// Contamination rates.
    pub rates: Vec<f64>,
    pub magnitude: f64,
    pub methods: Vec<MethodName>,
    pub estimators: Vec<EstimatorName>,
    pub grids: Grids,
    pub replicates: usize,
    pub base_seed: u64,
    pub psd: PsdHandling,
    /// Tolerances for [`PsdHandling::Project`]; looser than the library
    /// defaults (see [`harness_psd_options`]).
    pub projection: PsdOptions,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Linear,
            ns: vec![200],
            d: 100,
            sparsity: 10,
            rates: vec![0.0],
            magnitude: 5.0,
            methods: vec![MethodName::Tpower],
            estimators: vec![
                EstimatorName::Pearson,
                EstimatorName::Spearman,
                EstimatorName::Oracle,
            ],
            grids: Grids::default(),
            replicates: 100,
            base_seed: 0,
            psd: PsdHandling::Project,
            projection: harness_psd_options(),
            output_dir: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Field-level validation; every problem is reported, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.sparsity == 0 || self.d < 2 * self.sparsity {
            problems.push(format!(
                "d: must be at least 2 * sparsity ({}), got {}",
                2 * self.sparsity,
                self.d
            ));
        }
        if self.ns.is_empty() {
            problems.push("ns: at least one sample size is required".into());
        }
        if let Some(n) = self.ns.iter().find(|&&n| n < 3) {
            problems.push(format!("ns: every n must be at least 3, got {n}"));
        }
        if self.rates.is_empty() {
            problems.push("rates: at least one contamination rate is required".into());
        }
        if let Some(r) = self.rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
            problems.push(format!("rates: must lie in [0, 1), got {r}"));
        }
        if !self.magnitude.is_finite() {
            problems.push("magnitude: must be finite".into());
        }
        if self.methods.is_empty() {
            problems.push("methods: at least one method is required".into());
        }
        if self.estimators.is_empty() {
            problems.push("estimators: at least one estimator is required".into());
        }
        if self.replicates == 0 {
            problems.push("replicates: must be positive".into());
        }
        if self.threads == Some(0) {
            problems.push("threads: must be positive".into());
        }
        let g = self.grids.resolve(self.d);
        for method in &self.methods {
            let path = g.path(*method);
            if path.len() < 2 {
                problems.push(format!("grids.{method:?}: needs at least two tuning values").to_lowercase());
            }
        }
        if let Some(k) = g.tpower.iter().flatten().find(|&&k| k == 0 || k > self.d) {
            problems.push(format!("grids.tpower: k must lie in 1..={}, got {k}", self.d));
        }
        if let Some(delta) = g.pmd.iter().flatten().find(|&&x| !(x >= 1.0)) {
            problems.push(format!("grids.pmd: l1 bounds must be >= 1, got {delta}"));
        }
        if !(g.spca_delta1 >= 0.0) {
            problems.push(format!(
                "grids.spca_delta1: must be nonnegative, got {}",
                g.spca_delta1
            ));
        }
        if let Some(x) = g.spca_delta2.iter().find(|&&x| !(x >= 0.0)) {
            problems.push(format!("grids.spca_delta2: must be nonnegative, got {x}"));
        }
        if !(g.qtpm_q > 0.0 && g.qtpm_q <= 1.0) {
            problems.push(format!("grids.qtpm_q: must lie in (0, 1], got {}", g.qtpm_q));
        }
        if let Some(r) = g.qtpm_radii.iter().flatten().find(|&&x| !(x > 1.0)) {
            problems.push(format!("grids.qtpm_radii: radii must exceed 1, got {r}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CocaError::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub method: MethodName,
    pub estimator: EstimatorName,
    pub scheme: Scheme,
    pub n: usize,
    pub r: f64,
}

/// Mean and standard deviation of `sin∠(θ₁, θ̃₁)` at the oracle tuning value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub key: CellKey,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` divisor; 0 for a single replicate).
    pub sd: f64,
    pub replicates: usize,
    /// Replicates without a usable estimate at the oracle tuning value.
    pub excluded: usize,
    pub oracle_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub summary: ReplicationSummary,
    pub roc: RocCurve,
    /// Per-replicate `sin∠` at the oracle tuning value (`None` when excluded).
    pub sin_values: Vec<Option<f64>>,
    /// Solver calls that failed outright, over the whole grid.
    pub solver_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(
        &self,
        method: MethodName,
        estimator: EstimatorName,
        n: usize,
        r: f64,
    ) -> Option<&CellReport> {
        self.cells.iter().find(|c| {
            let k = &c.summary.key;
            k.method == method && k.estimator == estimator && k.n == n && k.r == r
        })
    }
}

/// Outcome of one solver call at one tuning value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridOutcome {
    Scored {
        metrics: SupportMetrics,
        sin: f64,
    },
    /// The solver returned no nonzero coordinates (e.g. full SPCA shrinkage).
    Empty {
        metrics: SupportMetrics,
    },
    Failed,
}

impl GridOutcome {
    fn metrics(&self) -> Option<SupportMetrics> {
        match self {
            GridOutcome::Scored { metrics, .. } | GridOutcome::Empty { metrics } => Some(*metrics),
            GridOutcome::Failed => None,
        }
    }

    fn sin(&self) -> Option<f64> {
        match self {
            GridOutcome::Scored { sin, .. } => Some(*sin),
            _ => None,
        }
    }
}

/// The input shared by every replicate of one cell.
struct CellContext<'a> {
    config: &'a ExperimentConfig,
    grids: &'a Grids,
    model: &'a SyntheticModel,
    truth: &'a [usize],
    transforms: &'a TransformSet,
    contamination: ContaminationSpec,
    n: usize,
}

/// Apply the configured PSD handling to an estimate.
pub fn prepare_matrix(
    gamma: DMatrix<f64>,
    handling: PsdHandling,
    projection: &PsdOptions,
) -> Result<DMatrix<f64>> {
    match handling {
        PsdHandling::None => Ok(gamma),
        PsdHandling::Shift => {
            let lambda = min_eigenvalue(&gamma)?;
            let mut out = gamma;
            if lambda < 0.0 {
                let c = -lambda * (1.0 + 1e-3);
                for i in 0..out.nrows() {
                    out[(i, i)] += c;
                }
            }
            Ok(out)
        }
        PsdHandling::Project => match project_matrix_maxnorm(&gamma, projection) {
            Ok(res) => Ok(res.matrix),
            Err(CocaError::NotConverged { best, .. }) => Ok(best.matrix),
            Err(e) => Err(e),
        },
    }
}

/// Solve one method over its whole grid on a prepared matrix.
pub fn solve_path(
    gamma: &DMatrix<f64>,
    method: MethodName,
    grids: &Grids,
) -> Vec<(f64, Result<SparseEigenResult>)> {
    let path = grids.path(method);
    let init = match method {
        MethodName::Tpower | MethodName::Qtpm => default_qtpm_init(gamma),
        MethodName::Pmd | MethodName::Spca => power_init(gamma).map(|p| p.vector),
    };
    let init = match init {
        Ok(v) => InitStrategy::Vector(v.as_slice().to_vec()),
        Err(e) => {
            let msg = e.to_string();
            return path
                .into_iter()
                .map(|delta| (delta, Err(CocaError::NumericalError(msg.clone()))))
                .collect();
        }
    };
    let base = SolverOptions::default().with_init(init).with_shift(Shift::None);
    path.into_iter()
        .map(|delta| {
            let res = match method {
                MethodName::Tpower => qtpm(
                    gamma,
                    &SolverOptions {
                        radius: delta,
                        ..base.clone()
                    },
                ),
                MethodName::Qtpm => qtpm(
                    gamma,
                    &SolverOptions {
                        q: grids.qtpm_q,
                        radius: delta,
                        ..base.clone()
                    },
                ),
                MethodName::Pmd => pmd_rank_one(gamma, delta, &base),
                MethodName::Spca => spca_leading(gamma, grids.spca_delta1, delta, &base),
            };
            (delta, res)
        })
        .collect()
}

fn score(res: Result<SparseEigenResult>, truth: &[usize], theta1: &DVector<f64>) -> GridOutcome {
    let d = theta1.len();
    match res {
        Ok(r) => match (
            support_metrics(truth, &r.support, d),
            sin_angle(theta1, &r.as_dvector()),
        ) {
            (Ok(metrics), Ok(sin)) => GridOutcome::Scored { metrics, sin },
            _ => GridOutcome::Failed,
        },
        Err(CocaError::AllZeroSolution(_)) => match support_metrics(truth, &[], d) {
            Ok(metrics) => GridOutcome::Empty { metrics },
            Err(_) => GridOutcome::Failed,
        },
        Err(_) => GridOutcome::Failed,
    }
}

/// `[estimator][method]` → grid outcomes, or `None` if the estimator failed.
type ReplicateOutcome = Vec<Option<Vec<Vec<(f64, GridOutcome)>>>>;

fn run_replicate(ctx: &CellContext<'_>, index: usize) -> Result<ReplicateOutcome> {
    let cfg = ctx.config;
    let rep_seed = derive_seed(derive_seed(cfg.base_seed, ctx.n as u64), index as u64);
    let sample =
        sample_latent_and_observed(&ctx.model.sigma0, ctx.transforms, ctx.n, derive_seed(rep_seed, 0))?;
    let observed = contaminate(&sample.observed, &ctx.contamination, derive_seed(rep_seed, 1))?.data;

    Ok(cfg
        .estimators
        .iter()
        .map(|&est| {
            let gamma = estimate(est, &observed, &sample.latent).ok()?;
            let working = prepare_matrix(gamma, cfg.psd, &cfg.projection).ok()?;
            Some(
                cfg.methods
                    .iter()
                    .map(|&method| {
                        solve_path(&working, method, ctx.grids)
                            .into_iter()
                            .map(|(delta, res)| (delta, score(res, ctx.truth, &ctx.model.theta1)))
                            .collect()
                    })
                    .collect(),
            )
        })
        .collect())
}

/// Correlation estimate for one of the three compared estimators.
pub fn estimate(est: EstimatorName, observed: &DataMatrix, latent: &DataMatrix) -> Result<DMatrix<f64>> {
    Ok(match est {
        EstimatorName::Pearson => pearson_correlation(observed)?.matrix,
        EstimatorName::Spearman => spearman_correlation(observed)?.matrix,
        EstimatorName::Oracle => pearson_correlation(latent)?.matrix,
    })
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(key: CellKey, outcomes: &[Option<&Vec<(f64, GridOutcome)>>]) -> Result<CellReport> {
    let mut pairs = Vec::new();
    let mut solver_failures = 0;
    for path in outcomes.iter().flatten() {
        for (delta, outcome) in path.iter() {
            match outcome.metrics() {
                Some(m) => pairs.push((*delta, m)),
                None => solver_failures += 1,
            }
        }
    }
    let roc = roc_curve(&pairs)?;
    let oracle_delta = roc.oracle_delta(key.method.sparser_when())?;
    let sin_values: Vec<Option<f64>> = outcomes
        .iter()
        .map(|path| {
            path.and_then(|p| {
                p.iter()
                    .find(|(delta, _)| *delta == oracle_delta)
                    .and_then(|(_, o)| o.sin())
            })
        })
        .collect();
    let kept: Vec<f64> = sin_values.iter().flatten().copied().collect();
    let (mean, sd) = mean_sd(&kept);
    Ok(CellReport {
        summary: ReplicationSummary {
            key,
            mean,
            sd,
            replicates: outcomes.len(),
            excluded: outcomes.len() - kept.len(),
            oracle_delta,
        },
        roc,
        sin_values,
        solver_failures,
    })
}

fn run_cell(
    config: &ExperimentConfig,
    grids: &Grids,
    model: &SyntheticModel,
    n: usize,
    r: f64,
) -> Result<Vec<CellReport>> {
    let truth = model.theta1_support();
    let transforms = TransformSet::for_scheme(config.scheme, config.d);
    let ctx = CellContext {
        config,
        grids,
        model,
        truth: &truth,
        transforms: &transforms,
        contamination: ContaminationSpec {
            rate: r,
            magnitude: config.magnitude,
        },
        n,
    };
    let replicates: Vec<ReplicateOutcome> = (0..config.replicates)
        .into_par_iter()
        .map(|i| run_replicate(&ctx, i))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (mi, &method) in config.methods.iter().enumerate() {
        for (ei, &estimator) in config.estimators.iter().enumerate() {
            let outcomes: Vec<Option<&Vec<(f64, GridOutcome)>>> = replicates
                .iter()
                .map(|rep| rep[ei].as_ref().map(|per_method| &per_method[mi]))
                .collect();
            let key = CellKey {
                method,
                estimator,
                scheme: config.scheme,
                n,
                r,
            };
            cells.push(aggregate(key, &outcomes)?);
        }
    }
    Ok(cells)
}

/// Run every `(n, r)` cell of the configuration.
pub fn replicate_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let grids = config.grids.resolve(config.d);
    let model = synthesize_model(config.d, config.sparsity)?;
    let run = || -> Result<ExperimentReport> {
        let mut cells = Vec::new();
        for &n in &config.ns {
            for &r in &config.rates {
                cells.extend(run_cell(config, &grids, &model, n, r)?);
            }
        }
        Ok(ExperimentReport { cells })
    };
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CocaError::Config(format!("threads: {e}")))?
            .install(run),
        None => run(),
    }
}
