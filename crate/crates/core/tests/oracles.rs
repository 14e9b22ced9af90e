//! Library outputs checked against independent, slower reference computations.

mod common;

use coca::linalg::max_norm_distance;
use coca::sparse_eigen::{
    elastic_net_objective, elastic_net_step, find_truncation_level, l1_constrained_direction, lq_norm_pow,
};
use coca::{
    marginal_moments, normal_scores, pearson_correlation, sine_transform, spearman_covariance,
    spearman_rho_matrix, DataMatrix,
};
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[test]
fn spearman_and_pearson_match_double_loops() {
    let mut rng = rng(1);
    for _ in 0..50 {
        let x = uniform_matrix(&mut rng, 20, 5);
        let data = DataMatrix::new(x.clone()).unwrap();
        let rho = spearman_rho_matrix(&data).unwrap().matrix;
        assert!(max_norm_distance(&rho, &brute_spearman_rho(&x)) <= 1e-12);
        let p = pearson_correlation(&data).unwrap().matrix;
        assert!(max_norm_distance(&p, &brute_pearson(&x)) <= 1e-12);
    }
}

#[test]
fn midranks_with_ties_match_counting() {
    let mut rng = rng(2);
    for _ in 0..20 {
        // small integer range forces ties
        let x = DMatrix::from_fn(15, 3, |_, _| rng.random_range(0..5) as f64);
        let data = DataMatrix::new(x.clone()).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            assert_eq!(coca::compute_ranks(&col).unwrap(), brute_ranks(&col));
        }
        if let Ok(rho) = spearman_rho_matrix(&data) {
            assert!(max_norm_distance(&rho.matrix, &brute_spearman_rho(&x)) <= 1e-12);
        }
    }
}

#[test]
fn spearman_covariance_by_independent_path() {
    let mut rng = rng(3);
    let x = uniform_matrix(&mut rng, 50, 4);
    let data = DataMatrix::new(x.clone()).unwrap();
    let s = spearman_covariance(&data).unwrap().matrix;
    let r = sine_transform(&spearman_rho_matrix(&data).unwrap())
        .unwrap()
        .matrix;
    let sd: Vec<f64> = (0..4)
        .map(|j| {
            let c = x.column(j);
            let m = c.mean();
            (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 50.0).sqrt()
        })
        .collect();
    let expected = DMatrix::from_fn(4, 4, |j, k| sd[j] * sd[k] * r[(j, k)]);
    assert!(max_norm_distance(&s, &expected) <= 1e-12);
    let m = marginal_moments(&data).unwrap();
    for j in 0..4 {
        assert!((m.stds[j] - sd[j]).abs() <= 1e-12);
    }
}

#[test]
fn normal_scores_quantiles() {
    let data = DataMatrix::from_rows(&[vec![5.0], vec![1.0], vec![9.0]]).unwrap();
    let z = normal_scores(&data).unwrap();
    let expected = [0.0, -0.674_489_750_196_081_7, 0.674_489_750_196_081_7];
    for (a, b) in z.column(0).iter().zip(expected) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

/// Scan every `k` and keep the largest feasible one.
fn linear_scan_level(x: &DVector<f64>, q: f64, radius: f64) -> Option<usize> {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut best = None;
    for k in 1..=mags.len() {
        let head = &mags[..k];
        let l2: f64 = head.iter().map(|v| v * v).sum::<f64>().sqrt();
        let normalized: Vec<f64> = head.iter().map(|v| v / l2).collect();
        if lq_norm_pow(&normalized, q) <= radius {
            best = Some(k);
        }
    }
    best
}

#[test]
fn truncation_level_matches_linear_scan() {
    let mut rng = rng(4);
    let mut compared = 0;
    for _ in 0..2000 {
        let d = rng.random_range(2..30);
        let x = DVector::from_fn(d, |_, _| {
            rng.random_range(-1.0..1.0) * rng.random::<f64>().powi(3)
        });
        let q = [0.25, 0.5, 0.75, 1.0][rng.random_range(0..4)];
        let radius = rng.random_range(1.01..(d as f64).powf(1.0 - q / 2.0) + 0.5);
        match (
            find_truncation_level(&x, q, radius),
            linear_scan_level(&x, q, radius),
        ) {
            (Ok(k), Some(expected)) => {
                // summation order differs; allow a disagreement only on a boundary case
                if k != expected {
                    let mags: Vec<f64> = {
                        let mut m: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                        m.sort_by(|a, b| b.total_cmp(a));
                        m
                    };
                    let k2 = k.max(expected);
                    let l2: f64 = mags[..k2].iter().map(|v| v * v).sum::<f64>().sqrt();
                    let val: f64 = mags[..k2].iter().map(|v| (v / l2).powf(q)).sum();
                    assert!((val - radius).abs() < 1e-9, "k {k} vs {expected}");
                }
                compared += 1;
            }
            (Err(_), None) => {}
            (got, want) => panic!("{got:?} vs {want:?}"),
        }
    }
    assert!(compared > 1000);
}

#[test]
fn l1_direction_beats_threshold_grid() {
    let mut rng = rng(5);
    for _ in 0..200 {
        let d = rng.random_range(3..15);
        let a = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let delta = rng.random_range(1.0..(d as f64).sqrt());
        let u = l1_constrained_direction(&a, delta).unwrap();
        assert!(u.lp_norm(1) <= delta + 1e-12);
        assert!((u.norm() - 1.0).abs() < 1e-12);

        let amax = a.amax();
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..=20_000 {
            let lambda = amax * i as f64 / 20_000.0;
            let s = a.map(|x| x.signum() * (x.abs() - lambda).max(0.0));
            let n = s.norm();
            if n == 0.0 {
                continue;
            }
            let cand = s / n;
            if cand.lp_norm(1) <= delta {
                grid_best = grid_best.max(cand.dot(&a));
            }
        }
        assert!(u.dot(&a) >= grid_best - 1e-9, "{} < {grid_best}", u.dot(&a));
    }
}

/// Proximal gradient on the elastic-net objective, run far past convergence.
fn ista(gamma: &DMatrix<f64>, v: &DVector<f64>, delta1: f64, delta2: f64) -> DVector<f64> {
    let d = gamma.nrows();
    let a = gamma + DMatrix::identity(d, d) * delta1;
    let b = gamma * v;
    let lipschitz = 2.0 * a.symmetric_eigenvalues().max();
    let step = 1.0 / lipschitz;
    let mut w = DVector::zeros(d);
    for _ in 0..200_000 {
        let grad = (&a * &w - &b) * 2.0;
        let z = &w - grad * step;
        w = z.map(|x| x.signum() * (x.abs() - step * delta2).max(0.0));
    }
    w
}

#[test]
fn elastic_net_step_matches_proximal_gradient() {
    let mut rng = rng(6);
    for _ in 0..10 {
        let d = rng.random_range(3..7);
        let f = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let gamma = &f * f.transpose();
        let v = random_unit(&mut rng, d);
        let (delta1, delta2) = (rng.random_range(0.01..0.5), rng.random_range(0.01..0.5));
        let w = elastic_net_step(&gamma, &v, delta1, delta2, None);
        let reference = ista(&gamma, &v, delta1, delta2);
        assert!((&w - &reference).amax() < 1e-6, "{w} vs {reference}");
        let obj = elastic_net_objective(&gamma, &v, &w, delta1, delta2);
        let ref_obj = elastic_net_objective(&gamma, &v, &reference, delta1, delta2);
        assert!(obj <= ref_obj + 1e-10);
    }
}
