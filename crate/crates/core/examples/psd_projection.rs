//! Nearest PSD matrix in the max norm versus eigenvalue clipping.
//!
//! cargo run --release --example psd_projection

use coca::linalg::{max_norm_distance, min_eigenvalue};
use coca::{clip_eigenvalues, project_matrix_maxnorm, PsdOptions};
use nalgebra::DMatrix;

fn main() -> coca::Result<()> {
    let r = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.6, 0.9, 1.0, 0.3, -0.6, 0.3, 1.0]);
    println!("input min eigenvalue {:.4}", min_eigenvalue(&r)?);

    let out = project_matrix_maxnorm(&r, &PsdOptions::default())?;
    let clipped = clip_eigenvalues(&r)?;
    println!(
        "max-norm projection: distance {:.6}, certified >= {:.6}, {} steps",
        out.achieved_distance, out.certified_lower_bound, out.iterations
    );
    println!(
        "eigenvalue clipping: distance {:.6}",
        max_norm_distance(&clipped, &r)
    );
    println!("projected matrix min eigenvalue {:.2e}", out.min_eigenvalue);
    println!("{:.4}", out.matrix);
    Ok(())
}
