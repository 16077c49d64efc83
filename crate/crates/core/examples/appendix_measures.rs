//! Chord-modified seed and the atomic measures built from its conjugate.

use ldp_pointwise::appendix::{build_lf, build_measure, SeedSpec};
use ldp_pointwise::legendre::conjugate;
use ldp_pointwise::{ConvexFn, NegInf, Oracle, PosInf};

fn main() -> ldp_pointwise::Result<()> {
    let f = ConvexFn::from_oracle(
        NegInf,
        PosInf,
        Oracle::Quadratic {
            a: 0.5,
            b: 0.0,
            c: 0.0,
        },
    )?;
    let seed = SeedSpec::new(f, 1.0, 0.5).with_depth(8);
    println!("chord points: {:?}", &seed.lambdas()?[..4]);
    let lf = build_lf(&seed)?;
    let star = conjugate(&lf)?;
    for n in [10, 100, 1000] {
        let mu = build_measure(&star, n)?;
        println!(
            "n = {n}: {} atoms, scale {}, log total mass {:.1e}",
            mu.len(),
            mu.scale(),
            mu.total_log_mass()
        );
    }
    Ok(())
}
