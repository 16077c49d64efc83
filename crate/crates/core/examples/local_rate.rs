//! Local rate at a few points for Bernoulli(0.3) means, against L*.

use ldp_pointwise::families::{builtin_family, FamilySpec};
use ldp_pointwise::harness::{default_eps_grid, l0_estimate, DEFAULT_N_GRID};
use ldp_pointwise::legendre::conjugate_at;

fn main() -> ldp_pointwise::Result<()> {
    let seq = builtin_family(&FamilySpec::BernoulliMean { p: 0.3 })?;
    let l = seq.log_mgf_limit()?;
    for x in [0.1, 0.3, 0.5, 0.9] {
        let est = l0_estimate(&seq, x, &default_eps_grid(), &DEFAULT_N_GRID)?;
        println!(
            "x = {x}: l0 = {}  L* = {}",
            est.value,
            conjugate_at(&l, x.into())?
        );
    }
    Ok(())
}
