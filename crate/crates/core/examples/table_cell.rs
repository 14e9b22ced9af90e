//! One cell of the support-recovery experiment: mean sin-angle of the
//! truncated power method over replicates, for each correlation estimator.
//!
//! cargo run --release --example table_cell -- [scheme] [n] [r] [replicates]

use std::time::Instant;

use coca::evalkit::{replicate_experiment, ExperimentConfig, MethodName};
use coca::Scheme;

fn main() -> coca::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let scheme = if arg(0, "1") == "2" {
        Scheme::Nonlinear
    } else {
        Scheme::Linear
    };
    let n: usize = arg(1, "200").parse().expect("n");
    let r: f64 = arg(2, "0").parse().expect("r");
    let replicates: usize = arg(3, "100").parse().expect("replicates");

    let cfg = ExperimentConfig {
        scheme,
        ns: vec![n],
        rates: vec![r],
        replicates,
        methods: vec![MethodName::Tpower],
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let report = replicate_experiment(&cfg)?;
    println!(
        "scheme {} n = {n} r = {r}, {replicates} replicates",
        u8::from(scheme)
    );
    println!(
        "{:<10} {:>8} {:>8} {:>6} {:>8}",
        "estimator", "mean", "sd", "k*", "AUC"
    );
    for cell in &report.cells {
        let s = &cell.summary;
        println!(
            "{:<10} {:>8.4} {:>8.4} {:>6} {:>8}",
            s.key.estimator.label(),
            s.mean,
            s.sd,
            s.oracle_delta,
            cell.roc.auc.map_or("-".into(), |a| format!("{a:.4}")),
        );
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
