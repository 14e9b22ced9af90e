//! Outliers in every column: how far each estimator's leading sparse
//! eigenvector moves away from the truth.
//!
//! cargo run --release --example contamination -- [r]

use coca::evalkit::{harness_psd_options, prepare_matrix, sin_angle, PsdHandling};
use coca::{
    contaminate, derive_seed, pearson_correlation, qtpm, sample_nonparanormal, spearman_correlation,
    synthesize_model, ContaminationSpec, SolverOptions, TransformSet,
};

fn main() -> coca::Result<()> {
    let r: f64 = std::env::args().nth(1).map_or(0.05, |a| a.parse().expect("rate"));
    let model = synthesize_model(60, 10)?;
    let clean = sample_nonparanormal(
        &model.sigma0,
        &TransformSet::identity(60),
        200,
        derive_seed(11, 0),
    )?;
    let dirty = contaminate(&clean, &ContaminationSpec::new(r)?, derive_seed(11, 1))?;
    println!("{} entries replaced by +-5 (r = {r})", dirty.entries.len());

    for (label, data) in [("clean", &clean), ("contaminated", &dirty.data)] {
        let pearson = pearson_correlation(data)?.matrix;
        // Rank correlations can be indefinite; project before the power method.
        let spearman = prepare_matrix(
            spearman_correlation(data)?.matrix,
            PsdHandling::Project,
            &harness_psd_options(),
        )?;
        for (name, m) in [("pearson", pearson), ("spearman", spearman)] {
            let v = qtpm(&m, &SolverOptions::tpower(10))?;
            println!(
                "{label:<13} {name:<9} sin = {:.4}",
                sin_angle(&v.as_dvector(), &model.theta1)?
            );
        }
    }
    Ok(())
}
