//! Synthetic latent models, nonparanormal sampling and outlier contamination.
//!
//! A nonparanormal vector `X` has strictly increasing marginal maps `f` with
//! `f(X) ~ N(0, Σ⁰)`. Sampling draws `Z ~ N(0, Σ⁰)` and sets `Xⱼ = fⱼ⁻¹(Zⱼ)`.

use std::f64::consts::{E, PI};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{CocaError, Result};
use crate::linalg::{canonical_sign, sym_eigen};
use crate::rank_stats::DataMatrix;

/// Leading spiked eigenvalues of the latent covariance.
pub const OMEGA1: f64 = 5.0;
pub const OMEGA2: f64 = 2.0;
/// Default support size of each spike.
pub const DEFAULT_SPARSITY: usize = 10;

/// Entries with magnitude below this are treated as exact zeros when reading
/// supports off a computed eigenvector.
pub const SUPPORT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub d: usize,
    pub s: usize,
    /// `Σ = I + (ω₁ − 1)u₁u₁ᵀ + (ω₂ − 1)u₂u₂ᵀ`.
    pub sigma: DMatrix<f64>,
    /// `D^{-1/2} Σ D^{-1/2}`.
    pub sigma0: DMatrix<f64>,
    pub u1: DVector<f64>,
    pub u2: DVector<f64>,
    /// Leading eigenvectors of `Σ⁰` from a dense eigendecomposition.
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
    pub sigma_eigenvalues: DVector<f64>,
    pub sigma0_eigenvalues: DVector<f64>,
}

impl SyntheticModel {
    pub fn theta1_support(&self) -> Vec<usize> {
        support_with_tol(&self.theta1)
    }

    pub fn theta2_support(&self) -> Vec<usize> {
        support_with_tol(&self.theta2)
    }
}

fn support_with_tol(v: &DVector<f64>) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > SUPPORT_TOL)
        .map(|(i, _)| i)
        .collect()
}

/// Zero numerically-null entries and renormalize, with the canonical sign.
fn clean_eigenvector(mut v: DVector<f64>) -> DVector<f64> {
    v.apply(|x| {
        if x.abs() <= SUPPORT_TOL {
            *x = 0.0
        }
    });
    let n = v.norm();
    v /= n;
    canonical_sign(&mut v);
    v
}

/// Two-spike covariance with sparse leading eigenvectors on `{0..s}` and `{s..2s}`.
pub fn synthesize_model(d: usize, s: usize) -> Result<SyntheticModel> {
    if s == 0 || d < 2 * s {
        return Err(CocaError::InvalidDimension(format!(
            "need d >= 2s with s >= 1, got d = {d}, s = {s}"
        )));
    }
    let entry = 1.0 / (s as f64).sqrt();
    let u1 = DVector::from_fn(d, |j, _| if j < s { entry } else { 0.0 });
    let u2 = DVector::from_fn(d, |j, _| if (s..2 * s).contains(&j) { entry } else { 0.0 });

    let sigma = DMatrix::identity(d, d)
        + &u1 * u1.transpose() * (OMEGA1 - 1.0)
        + &u2 * u2.transpose() * (OMEGA2 - 1.0);
    let scale: Vec<f64> = (0..d).map(|j| sigma[(j, j)].sqrt()).collect();
    let sigma0 = DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            1.0
        } else {
            sigma[(j, k)] / (scale[j] * scale[k])
        }
    });

    let sigma_eig = sym_eigen(&sigma)?;
    let eig = sym_eigen(&sigma0)?;
    let theta1 = clean_eigenvector(eig.vectors.column(0).into_owned());
    let theta2 = clean_eigenvector(eig.vectors.column(1).into_owned());
    Ok(SyntheticModel {
        d,
        s,
        sigma,
        sigma0,
        u1,
        u2,
        theta1,
        theta2,
        sigma_eigenvalues: sigma_eig.values,
        sigma0_eigenvalues: eig.values,
    })
}

/// Marginal inverse transformations `hⱼ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformId {
    H0,
    H1,
    H2,
    H3,
    H4,
    H5,
}

/// Moments of the standard normal that standardize the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationConstants {
    /// `E|Z|`.
    pub abs_mean: f64,
    /// `E Φ(Z)` and `Var Φ(Z)`.
    pub cdf_mean: f64,
    pub cdf_var: f64,
    /// `E Z⁶`.
    pub sixth_moment: f64,
    /// `E e^Z` and `Var e^Z`.
    pub exp_mean: f64,
    pub exp_var: f64,
}

impl NormalizationConstants {
    pub fn closed_form() -> Self {
        Self {
            abs_mean: (2.0 / PI).sqrt(),
            cdf_mean: 0.5,
            cdf_var: 1.0 / 12.0,
            sixth_moment: 15.0,
            exp_mean: E.sqrt(),
            exp_var: E * E - E,
        }
    }

    /// The same constants by adaptive Simpson quadrature against the normal density.
    pub fn by_quadrature() -> Self {
        let normal = Normal::standard();
        let pdf = |t: f64| normal.pdf(t);
        let cdf = |t: f64| normal.cdf(t);
        let integrate = |f: &dyn Fn(f64) -> f64| {
            adaptive_simpson(f, -12.0, 0.0, 1e-13, 50) + adaptive_simpson(f, 0.0, 12.0, 1e-13, 50)
        };
        let abs_mean = integrate(&|t| t.abs() * pdf(t));
        let cdf_mean = integrate(&|t| cdf(t) * pdf(t));
        let cdf_var = integrate(&|t| (cdf(t) - cdf_mean).powi(2) * pdf(t));
        let sixth_moment = integrate(&|t| t.powi(6) * pdf(t));
        let exp_mean = integrate(&|t| t.exp() * pdf(t));
        let exp_var = integrate(&|t| (t.exp() - exp_mean).powi(2) * pdf(t));
        Self {
            abs_mean,
            cdf_mean,
            cdf_var,
            sixth_moment,
            exp_mean,
            exp_var,
        }
    }

    /// Largest absolute difference between two sets of constants.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.abs_mean - other.abs_mean,
            self.cdf_mean - other.cdf_mean,
            self.cdf_var - other.cdf_var,
            self.sixth_moment - other.sixth_moment,
            self.exp_mean - other.exp_mean,
            self.exp_var - other.exp_var,
        ]
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

impl TransformId {
    /// `h⁻¹(z)`, standardized so that `h⁻¹(Z)` has unit variance for `Z ~ N(0, 1)`
    /// (`h₃` and `h₅` are also centered).
    pub fn inverse(self, z: f64) -> f64 {
        let c = NormalizationConstants::closed_form();
        match self {
            TransformId::H0 | TransformId::H1 => z,
            TransformId::H2 => z.signum() * z.abs().sqrt() / c.abs_mean.sqrt(),
            TransformId::H3 => (Normal::standard().cdf(z) - c.cdf_mean) / c.cdf_var.sqrt(),
            TransformId::H4 => z.powi(3) / c.sixth_moment.sqrt(),
            TransformId::H5 => (z.exp() - c.exp_mean) / c.exp_var.sqrt(),
        }
    }
}

/// Per-coordinate transform assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSet {
    pub ids: Vec<TransformId>,
}

impl TransformSet {
    pub fn identity(d: usize) -> Self {
        Self {
            ids: vec![TransformId::H0; d],
        }
    }

    /// `h₁, h₂, h₃, h₄, h₅, h₁, …` across coordinates.
    pub fn cycled(d: usize) -> Self {
        const CYCLE: [TransformId; 5] = [
            TransformId::H1,
            TransformId::H2,
            TransformId::H3,
            TransformId::H4,
            TransformId::H5,
        ];
        Self {
            ids: (0..d).map(|j| CYCLE[j % 5]).collect(),
        }
    }

    pub fn for_scheme(scheme: Scheme, d: usize) -> Self {
        match scheme {
            Scheme::Linear => Self::identity(d),
            Scheme::Nonlinear => Self::cycled(d),
        }
    }
}

/// Simulation scheme: identity margins (1) or the cycled nonlinear margins (2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scheme {
    Linear,
    Nonlinear,
}

impl TryFrom<u8> for Scheme {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Scheme::Linear),
            2 => Ok(Scheme::Nonlinear),
            other => Err(format!("scheme must be 1 or 2, got {other}")),
        }
    }
}

impl From<Scheme> for u8 {
    fn from(s: Scheme) -> u8 {
        match s {
            Scheme::Linear => 1,
            Scheme::Nonlinear => 2,
        }
    }
}

/// Mix `index` into `base` (SplitMix64 finalizer) to get an independent stream seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15_u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Name of the generator behind every seeded draw.
pub const RNG_NAME: &str = "rand_chacha::ChaCha8Rng 0.9";

/// A factor `L` with `L Lᵀ = Σ⁰`: Cholesky when it succeeds, else spectral.
fn latent_factor(sigma0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = Cholesky::new(sigma0.clone()) {
        return Ok(ch.l());
    }
    let eig = sym_eigen(sigma0)?;
    let scale = eig.values.amax().max(1.0);
    if eig.min_value() < -1e-10 * scale {
        return Err(CocaError::NotPsd(format!(
            "latent correlation has eigenvalue {:.3e}",
            eig.min_value()
        )));
    }
    let mut factor = eig.vectors.clone();
    for (j, &lambda) in eig.values.iter().enumerate() {
        factor.column_mut(j).scale_mut(lambda.max(0.0).sqrt());
    }
    Ok(factor)
}

/// Latent Gaussian draws and their transformed observations.
#[derive(Debug, Clone, PartialEq)]
pub struct NpnSample {
    pub latent: DataMatrix,
    pub observed: DataMatrix,
}

pub fn sample_latent_and_observed(
    sigma0: &DMatrix<f64>,
    transforms: &TransformSet,
    n: usize,
    seed: u64,
) -> Result<NpnSample> {
    let d = sigma0.nrows();
    if !sigma0.is_square() || transforms.ids.len() != d {
        return Err(CocaError::InvalidDimension(format!(
            "{}x{} latent matrix with {} transforms",
            sigma0.nrows(),
            sigma0.ncols(),
            transforms.ids.len()
        )));
    }
    if n == 0 {
        return Err(CocaError::InvalidDimension("n must be positive".into()));
    }
    let factor = latent_factor(sigma0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            g[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let z = g * factor.transpose();
    let x = DMatrix::from_fn(n, d, |i, j| transforms.ids[j].inverse(z[(i, j)]));
    Ok(NpnSample {
        latent: DataMatrix::new(z)?,
        observed: DataMatrix::new(x)?,
    })
}

/// `n` draws from the nonparanormal law with latent correlation `sigma0`.
pub fn sample_nonparanormal(
    sigma0: &DMatrix<f64>,
    transforms: &TransformSet,
    n: usize,
    seed: u64,
) -> Result<DataMatrix> {
    Ok(sample_latent_and_observed(sigma0, transforms, n, seed)?.observed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub rate: f64,
    pub magnitude: f64,
}

impl ContaminationSpec {
    pub fn new(rate: f64) -> Result<Self> {
        let spec = Self { rate, magnitude: 5.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(CocaError::InvalidInput(format!(
                "contamination rate must lie in [0, 1), got {}",
                self.rate
            )));
        }
        if !self.magnitude.is_finite() {
            return Err(CocaError::InvalidInput(
                "contamination magnitude must be finite".into(),
            ));
        }
        Ok(())
    }

    /// `⌊n·r⌋`, with a small guard so e.g. `100 × 0.29` counts 29.
    pub fn count(&self, n: usize) -> usize {
        ((n as f64) * self.rate + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContaminatedEntry {
    pub row: usize,
    pub column: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contamination {
    pub data: DataMatrix,
    pub entries: Vec<ContaminatedEntry>,
}

/// In each column replace `⌊n·r⌋` distinct rows by `±magnitude` with fair signs.
pub fn contaminate(data: &DataMatrix, spec: &ContaminationSpec, seed: u64) -> Result<Contamination> {
    spec.validate()?;
    let (n, d) = (data.n(), data.d());
    let count = spec.count(n);
    if count == 0 {
        return Ok(Contamination {
            data: data.clone(),
            entries: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = data.values().clone();
    let mut entries = Vec::with_capacity(count * d);
    for column in 0..d {
        let mut rows = index::sample(&mut rng, n, count).into_vec();
        rows.sort_unstable();
        for row in rows {
            let positive = rng.random_bool(0.5);
            values[(row, column)] = if positive { spec.magnitude } else { -spec.magnitude };
            entries.push(ContaminatedEntry {
                row,
                column,
                positive,
            });
        }
    }
    Ok(Contamination {
        data: DataMatrix::new(values)?,
        entries,
    })
}
