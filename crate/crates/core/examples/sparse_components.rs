//! First two sparse components of the two-spike model, by each solver.
//!
//! cargo run --release --example sparse_components

use coca::evalkit::sin_angle;
use coca::{synthesize_model, top_m_eigenvectors, SolverOptions, SparseMethod};

fn main() -> coca::Result<()> {
    let model = synthesize_model(50, 10)?;
    let opts = SolverOptions::tpower(10);
    let solvers = [
        ("TPower", SparseMethod::Qtpm { opts: opts.clone() }),
        (
            "qTPM q=0.5",
            SparseMethod::Qtpm {
                opts: SolverOptions::lq(0.5, 6.0),
            },
        ),
        // The true l1 norm is sqrt(10) ≈ 3.162; a tighter bound trades angle for sparsity.
        (
            "PMD",
            SparseMethod::Pmd {
                delta: 3.1,
                opts: opts.clone(),
            },
        ),
        (
            "SPCA",
            SparseMethod::Spca {
                delta1: 1e-4,
                delta2: 0.05,
                opts: opts.clone(),
            },
        ),
    ];
    for (name, method) in solvers {
        let comps = top_m_eigenvectors(&model.sigma0, &[method.clone(), method])?;
        let s1 = sin_angle(&comps[0].as_dvector(), &model.theta1)?;
        let s2 = sin_angle(&comps[1].as_dvector(), &model.theta2)?;
        println!(
            "{name:<11} sin1 {s1:.2e} |supp1| {:>2}  sin2 {s2:.2e} |supp2| {:>2}",
            comps[0].support.len(),
            comps[1].support.len()
        );
    }
    Ok(())
}
