//! Conjugate of a piecewise-linear function and of `t²/2`, plus the
//! biconjugate round trip.

use ldp_pointwise::legendre::{biconjugate_check, conjugate, conjugate_at};
use ldp_pointwise::{ConvexFn, ExtReal, NegInf, Oracle, PosInf};

fn main() -> ldp_pointwise::Result<()> {
    let f = ConvexFn::pwl(vec![(-1.0, 1.0), (0.0, 0.0), (2.0, 1.0)])?;
    let star = conjugate(&f)?;
    println!("dom f* = {:?}", star.domain());
    for x in [-1.0, 0.0, 0.5, 1.0] {
        println!("f*({x}) = {}", star.eval(ExtReal::from(x))?);
    }

    let q = ConvexFn::from_oracle(
        NegInf,
        PosInf,
        Oracle::Quadratic {
            a: 0.5,
            b: 0.0,
            c: 0.0,
        },
    )?;
    for x in [-2.0, 1.0, 3.0] {
        println!("(t²/2)*({x}) = {}", conjugate_at(&q, x.into())?);
    }

    let grid: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
    let bi = biconjugate_check(&q, &grid, None)?;
    println!("max |f - f**| on [-2, 2] = {:.2e}", bi.max_deviation);
    Ok(())
}
