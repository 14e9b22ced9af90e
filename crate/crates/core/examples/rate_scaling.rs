//! Max-norm error of the Spearman estimator as n grows.
//!
//! cargo run --release --example rate_scaling

use coca::evalkit::rate_check;

fn main() -> coca::Result<()> {
    let table = rate_check(&[125, 250, 500, 1000], 50, 100, 0)?;
    println!(
        "{:>6} {:>10} {:>10} {:>12}",
        "n", "mean err", "max err", "err/rate"
    );
    for row in &table.rows {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>12.3}",
            row.n, row.mean_error, row.max_error, row.scaled_error
        );
    }
    println!("error(125) / error(500) = {:.3}", table.error_ratio(0, 2));
    Ok(())
}
