//! Rank-based sparse principal component analysis for high-dimensional,
//! heavy-tailed data.
//!
//! The pipeline estimates a latent correlation matrix from Spearman's rho
//! (`2 sin(πρ/6)`), optionally projects it onto the PSD cone under the
//! entrywise max norm, and extracts sparse leading eigenvectors with an
//! `ℓq`-constrained truncated power method. Baseline solvers (PMD, SPCA), a
//! nonparanormal simulator and a replication harness are included.
//!
//! ```
//! use coca::{spearman_correlation, qtpm, DataMatrix, SolverOptions};
//! use nalgebra::DMatrix;
//!
//! let x = DMatrix::from_fn(50, 4, |i, j| ((i * (j + 3)) % 17) as f64 + j as f64);
//! let r = spearman_correlation(&DataMatrix::new(x).unwrap()).unwrap();
//! let lead = qtpm(&r.matrix, &SolverOptions::tpower(2)).unwrap();
//! assert_eq!(lead.support.len(), 2);
//! ```

pub mod cli;
pub mod error;
pub mod evalkit;
pub mod io;
pub mod linalg;
pub mod nonparanormal;
pub mod psd_project;
pub mod rank_stats;
pub mod sparse_eigen;

pub use error::{CocaError, Result};
pub use nonparanormal::{
    contaminate, derive_seed, sample_latent_and_observed, sample_nonparanormal, synthesize_model,
    ContaminationSpec, Scheme, SyntheticModel, TransformId, TransformSet,
};
pub use psd_project::{
    clip_eigenvalues, project_matrix_maxnorm, project_psd_maxnorm, PsdOptions, PsdProjectionResult,
};
pub use rank_stats::{
    compute_ranks, marginal_moments, normal_scores, pearson_correlation, pearson_covariance, sine_transform,
    spearman_correlation, spearman_covariance, spearman_rho_matrix, CorrelationEstimate, CorrelationKind,
    CovarianceEstimate, CovarianceKind, DataMatrix, MarginalMoments, RankMatrix,
};
pub use sparse_eigen::{
    deflate, pmd_rank_one, power_init, qtpm, spca_leading, top_m_eigenvectors, InitStrategy, Shift,
    SolverOptions, SparseEigenResult, SparseMethod,
};
