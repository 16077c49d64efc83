//! Rate curve for `t²/2` near lambda = 1.

use ldp_pointwise::harness::{corollary_curve, curve_grid, z_range};
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
    let (lo, hi) = z_range(&f, 1.0, 0.5)?;
    let report = corollary_curve(&f, 1.0, 0.5, &curve_grid(lo, hi, 9)?)?;
    for p in &report.points {
        println!("z = {:.3}  t_z = {:.3}  value = {:.4}", p.z, p.t_z, p.value);
    }
    println!("shape holds: {}", report.holds());
    Ok(())
}
