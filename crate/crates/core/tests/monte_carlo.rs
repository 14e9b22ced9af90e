//! Simulation checks against known distributions and closed forms.

mod common;

use coca::evalkit::{roc_curve, support_metrics};
use coca::nonparanormal::NormalizationConstants;
use coca::{
    contaminate, marginal_moments, pearson_correlation, sample_nonparanormal, spearman_correlation,
    synthesize_model, ContaminationSpec, Scheme, TransformSet,
};
use nalgebra::DMatrix;
use rand::seq::index;

#[test]
fn quadrature_matches_closed_form_constants() {
    let q = NormalizationConstants::by_quadrature();
    let c = NormalizationConstants::closed_form();
    assert!(q.max_abs_diff(&c) <= 1e-6, "{q:?}");
}

#[test]
fn model_spectrum_and_diagonal() {
    let m = synthesize_model(100, 10).unwrap();
    let mut eig: Vec<f64> = m.sigma.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    assert!((eig[0] - 5.0).abs() < 1e-8 && (eig[1] - 2.0).abs() < 1e-8);
    assert!(eig[2..].iter().all(|x| (x - 1.0).abs() < 1e-8));
    assert!((m.sigma[(0, 0)] - 1.4).abs() < 1e-15 && (m.sigma[(10, 10)] - 1.1).abs() < 1e-15);
    assert!((m.sigma0_eigenvalues[0] - 25.0 / 7.0).abs() < 1e-10);
    assert_eq!(m.theta1_support(), (0..10).collect::<Vec<_>>());
    assert_eq!(m.theta2_support(), (10..20).collect::<Vec<_>>());
}

#[test]
fn gaussian_moments_and_independence() {
    let d = 4;
    let x = sample_nonparanormal(&DMatrix::identity(d, d), &TransformSet::identity(d), 100_000, 9).unwrap();
    let m = marginal_moments(&x).unwrap();
    for j in 0..d {
        assert!(m.means[j].abs() <= 0.02 && (m.stds[j] - 1.0).abs() <= 0.02);
    }
    let r = pearson_correlation(&x).unwrap().matrix;
    assert!((r - DMatrix::identity(d, d)).amax() <= 0.02);
}

#[test]
fn spearman_recovers_latent_entry_under_nonlinear_margins() {
    let d = 5;
    let mut sigma0 = DMatrix::identity(d, d);
    sigma0[(0, 1)] = 0.5;
    sigma0[(1, 0)] = 0.5;
    let x = sample_nonparanormal(
        &sigma0,
        &TransformSet::for_scheme(Scheme::Nonlinear, d),
        100_000,
        10,
    )
    .unwrap();
    let r = spearman_correlation(&x).unwrap().matrix;
    assert!((r[(0, 1)] - 0.5).abs() <= 0.02, "{}", r[(0, 1)]);
}

#[test]
fn contamination_signs_are_fair() {
    let x = sample_nonparanormal(&DMatrix::identity(3, 3), &TransformSet::identity(3), 100, 1).unwrap();
    let spec = ContaminationSpec::new(0.1).unwrap();
    let (mut positive, mut total) = (0usize, 0usize);
    for seed in 0..200 {
        let c = contaminate(&x, &spec, seed).unwrap();
        for j in 0..3 {
            assert_eq!(c.entries.iter().filter(|e| e.column == j).count(), 10);
        }
        positive += c.entries.iter().filter(|e| e.positive).count();
        total += c.entries.len();
        for e in &c.entries {
            let v = c.data.values()[(e.row, e.column)];
            assert_eq!(v, if e.positive { 5.0 } else { -5.0 });
        }
    }
    let share = positive as f64 / total as f64;
    assert!((share - 0.5).abs() <= 0.05, "{share}");
}

#[test]
fn random_supports_trace_the_diagonal() {
    let (d, s) = (50, 10);
    let truth: Vec<usize> = (0..s).collect();
    let mut rng = common::rng(12);
    let mut results = Vec::new();
    for _ in 0..400 {
        for k in (1..=d).step_by(7) {
            let guess = index::sample(&mut rng, d, k).into_vec();
            results.push((k as f64, support_metrics(&truth, &guess, d).unwrap()));
        }
    }
    let roc = roc_curve(&results).unwrap();
    for p in &roc.points {
        assert!((p.tpr - p.fpr).abs() <= 0.1, "{p:?}");
    }
}
