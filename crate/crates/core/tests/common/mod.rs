//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.random_range(-3.0..3.0))
}

/// Midrank by counting: 1 + #{smaller} + (#{equal} − 1)/2.
pub fn brute_ranks(col: &[f64]) -> Vec<f64> {
    col.iter()
        .map(|&x| {
            let less = col.iter().filter(|&&y| y < x).count() as f64;
            let equal = col.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_corr_of_columns(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn columns(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.ncols())
        .map(|j| x.column(j).iter().copied().collect())
        .collect()
}

pub fn brute_pearson(x: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = columns(x);
    let d = cols.len();
    DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            1.0
        } else {
            brute_corr_of_columns(&cols[j], &cols[k])
        }
    })
}

/// Rank correlation with the rank mean fixed at `(n + 1) / 2`.
pub fn brute_spearman_rho(x: &DMatrix<f64>) -> DMatrix<f64> {
    let ranks: Vec<Vec<f64>> = columns(x).iter().map(|c| brute_ranks(c)).collect();
    let d = ranks.len();
    let rbar = (x.nrows() as f64 + 1.0) / 2.0;
    DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            return 1.0;
        }
        let (mut num, mut sj, mut sk) = (0.0, 0.0, 0.0);
        for i in 0..x.nrows() {
            let a = ranks[j][i] - rbar;
            let b = ranks[k][i] - rbar;
            num += a * b;
            sj += a * a;
            sk += b * b;
        }
        num / (sj * sk).sqrt()
    })
}

/// `‖v_A‖_q / ‖v_A‖₂` for the first `k` entries of a sorted vector.
pub fn head_ratio(v: &[f64], k: usize, q: f64) -> f64 {
    let lq: f64 = v[..k].iter().map(|x| x.powf(q)).sum::<f64>().powf(1.0 / q);
    let l2: f64 = v[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
    lq / l2
}

/// Count violations of `1 ≤ r(k) ≤ r(k + 1)` over all `k`.
pub fn lemma_violations(v: &[f64], q: f64) -> usize {
    let mut violations = 0;
    let mut prev = 1.0;
    for k in 1..=v.len() {
        if v[k - 1] == 0.0 {
            break;
        }
        let r = head_ratio(v, k, q);
        if r < prev * (1.0 - 1e-12) {
            violations += 1;
        }
        prev = r;
    }
    violations
}

pub fn sorted_nonnegative(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            let x: f64 = rng.random();
            // mix of scales so both flat and spiky vectors appear
            x.powf(rng.random_range(0.2..6.0))
        })
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let n = v.norm();
    v / n
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}
