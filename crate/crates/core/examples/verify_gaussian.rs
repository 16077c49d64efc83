//! Empirical limit for the Gaussian sample mean at lambda = 1.

use ldp_pointwise::families::{builtin_family, FamilySpec};
use ldp_pointwise::harness::{verify_theorem, Scenario};

fn main() -> ldp_pointwise::Result<()> {
    let seq = builtin_family(&FamilySpec::GaussianMean { m: 0.0, sigma: 1.0 })?;
    let report = verify_theorem(&Scenario::new(seq, 1.0)?)?;
    for p in &report.per_n {
        println!(
            "n = {:>6}  x_n = {:.5}  c_n log mu_n = {}",
            p.n, p.x_n, p.empirical
        );
    }
    println!(
        "limit {:.5} ({}), target {}, error {:.2e}: {:?}",
        report.extrapolated_limit,
        report.extrapolation,
        report.target,
        report.abs_error,
        report.verdict
    );
    Ok(())
}
