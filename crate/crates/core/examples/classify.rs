//! Point cases of a few functions.

use ldp_pointwise::{ConvexFn, ExcludedCase, NegInf, Oracle, PosInf};

fn main() -> ldp_pointwise::Result<()> {
    let pwl = ConvexFn::pwl(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)])?;
    let ray = ConvexFn::pwl_with_rays(vec![(0.0, 0.0), (1.0, 1.0)], None, Some(1.0))?;
    let smooth = ConvexFn::from_oracle(
        NegInf,
        PosInf,
        Oracle::Quadratic {
            a: 0.5,
            b: 0.0,
            c: 0.0,
        },
    )?;
    let cases = [
        ("pwl at 0", &pwl, 0.0),
        ("pwl at 2", &pwl, 2.0),
        ("ray at 0", &ray, 0.0),
        ("t^2/2 at 1", &smooth, 1.0),
    ];
    for (name, f, lambda) in cases {
        let case = f.classify_point(lambda)?;
        let excluded = ExcludedCase::from_point_case(case).map(|e| e.label());
        println!(
            "{name}: {case}  lambda~ = {:?}  L'_r(lambda+) = {}  excluded: {excluded:?}",
            f.lambda_tilde(lambda).ok(),
            f.right_deriv_limit(lambda)?,
        );
    }
    Ok(())
}
