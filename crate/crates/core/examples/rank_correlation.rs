//! Rank-based correlation of heavy-tailed data next to the Pearson estimate.
//!
//! cargo run --release --example rank_correlation

use coca::linalg::max_norm_distance;
use coca::{
    normal_scores, pearson_correlation, sample_nonparanormal, spearman_correlation, synthesize_model, Scheme,
    TransformSet,
};

fn main() -> coca::Result<()> {
    let model = synthesize_model(20, 5)?;
    let transforms = TransformSet::for_scheme(Scheme::Nonlinear, 20);
    let data = sample_nonparanormal(&model.sigma0, &transforms, 400, 7)?;

    let spearman = spearman_correlation(&data)?;
    let pearson = pearson_correlation(&data)?;
    let scores = pearson_correlation(&normal_scores(&data)?)?;

    println!("max-norm error against the latent correlation (n = 400, d = 20)");
    println!(
        "  spearman (sine transformed) {:.4}",
        max_norm_distance(&spearman.matrix, &model.sigma0)
    );
    println!(
        "  pearson                     {:.4}",
        max_norm_distance(&pearson.matrix, &model.sigma0)
    );
    println!(
        "  normal scores               {:.4}",
        max_norm_distance(&scores.matrix, &model.sigma0)
    );
    println!(
        "latent (0,1) = {:.4}, spearman {:.4}",
        model.sigma0[(0, 1)],
        spearman.matrix[(0, 1)]
    );
    Ok(())
}
