use serde::Serialize;

use super::target::grid_inf_positive;
use crate::convex::ConvexFn;
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};

const DIFF_SAMPLES: usize = 32;
const DIFF_TOL: f64 = 1e-5;
const CONCAVE_TOL: f64 = 1e-8;
const VANISH_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvePoint {
    pub z: f64,
    pub t_z: f64,
    /// `L(t_z+) - t_z z`.
    pub value: f64,
    /// `inf_{t>0} {L(t) - t z}` on a grid.
    pub grid_inf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveReport {
    pub lambda: f64,
    pub epsilon: f64,
    /// `[L'_r(λ+), L'_l(λ+ε)[`.
    pub z_range: (ExtReal, ExtReal),
    pub points: Vec<CurvePoint>,
    pub non_positive: bool,
    pub strictly_decreasing: bool,
    pub strictly_concave: bool,
    pub max_second_difference: f64,
    /// The curve should vanish at `L'_r(λ+)`.
    pub vanishes_expected: bool,
    /// `L(λ+) - λ L'_r(λ+)` is zero.
    pub vanishes_observed: bool,
    /// `L'_l(λ+ε) = +∞`.
    pub unbounded_below_expected: bool,
    pub max_oracle_error: f64,
}

impl CurveReport {
    /// All shape checks hold and the vanishing behaviour is as expected.
    pub fn holds(&self) -> bool {
        self.non_positive
            && self.strictly_decreasing
            && self.strictly_concave
            && self.vanishes_expected == self.vanishes_observed
    }
}

fn fin(x: ExtReal, what: &str) -> Result<f64> {
    match x {
        ExtReal::Finite(v) => Ok(v),
        v => Err(Error::CurveHypothesis(format!("{what} is {v}"))),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Checks differentiability on `]λ, λ+ε[` on a sample grid, and that the
/// supremum of the derivative over that interval is not attained.
pub fn check_curve_hypotheses(l: &ConvexFn, lambda: f64, epsilon: f64) -> Result<()> {
    if l.is_improper() {
        return Err(Error::ImproperInput);
    }
    if !(lambda >= 0.0 && lambda.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::BadParams(format!(
            "need lambda >= 0 and epsilon > 0, got {lambda}, {epsilon}"
        )));
    }
    let end = lambda + epsilon;
    if ExtReal::from(end) > l.dom_hi() || ExtReal::from(lambda) < l.dom_lo() {
        return Err(Error::CurveHypothesis(format!(
            "[{lambda}, {end}] is not inside the domain"
        )));
    }
    fin(l.eval(end)?, "L(lambda + epsilon)")?;
    for i in 1..=DIFF_SAMPLES {
        let t = lambda + epsilon * i as f64 / (DIFF_SAMPLES + 1) as f64;
        let r = fin(l.right_deriv(t)?, "right derivative")?;
        let left = fin(l.left_deriv(t)?, "left derivative")?;
        if !close(r, left, DIFF_TOL) {
            return Err(Error::CurveHypothesis(format!(
                "not differentiable at t = {t}: left {left}, right {r}"
            )));
        }
    }
    let near = l.right_deriv(lambda + epsilon * (1.0 - 2f64.powi(-20)))?;
    let top = l.left_deriv(end)?;
    let attained = match (near, top) {
        (_, PosInf) => false,
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a >= b || close(a, b, 1e-12),
        _ => true,
    };
    if attained {
        return Err(Error::CurveHypothesis(format!(
            "derivative supremum {top} is attained before lambda + epsilon"
        )));
    }
    if l.right_deriv_limit(lambda)? == NegInf && !l.is_right_continuous_at(lambda, 1e-9)? {
        return Err(Error::CurveHypothesis(format!(
            "L'_r({lambda}+) = -inf and L jumps at {lambda}"
        )));
    }
    Ok(())
}

/// `(L'_r(λ+), L'_l(λ+ε))`.
pub fn z_range(l: &ConvexFn, lambda: f64, epsilon: f64) -> Result<(ExtReal, ExtReal)> {
    Ok((
        l.right_deriv_limit(lambda)?,
        l.left_deriv(lambda + epsilon)?,
    ))
}

/// Smallest `t ∈ [λ, λ+ε[` with `L'_r(t+) = z`, by bisection on the
/// right-derivative map.
pub fn solve_t_z(l: &ConvexFn, lambda: f64, epsilon: f64, z: ExtReal) -> Result<f64> {
    check_curve_hypotheses(l, lambda, epsilon)?;
    let range = z_range(l, lambda, epsilon)?;
    solve_in_range(l, lambda, epsilon, range, z)
}

fn solve_in_range(
    l: &ConvexFn,
    lambda: f64,
    epsilon: f64,
    (zl, zh): (ExtReal, ExtReal),
    z: ExtReal,
) -> Result<f64> {
    if z < zl || z >= zh {
        return Err(Error::ZOutOfRange(format!("{z} not in [{zl}, {zh}[")));
    }
    let zf = match z {
        ExtReal::Finite(v) => v,
        _ => return Ok(lambda),
    };
    if let ExtReal::Finite(a) = zl {
        if zf <= a + 1e-12 * a.abs().max(1.0) {
            return Ok(lambda);
        }
    }
    let (mut lo, mut hi) = (lambda, lambda + epsilon);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if l.right_deriv(mid)? >= z {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(hi)
}

/// `z_j = zl + j (zh - zl) / count`, `j = 0..count`; both ends finite.
pub fn curve_grid(zl: ExtReal, zh: ExtReal, count: usize) -> Result<Vec<f64>> {
    match (zl, zh) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) if b > a && count > 0 => Ok((0..count)
            .map(|j| a + (b - a) * j as f64 / count as f64)
            .collect()),
        _ => Err(Error::BadParams(format!(
            "automatic z grid needs a finite range, got [{zl}, {zh}[; pass z values explicitly"
        ))),
    }
}

/// `z ↦ L(t_z+) - t_z z` over `z_grid`, with the shape checks.
pub fn corollary_curve(
    l: &ConvexFn,
    lambda: f64,
    epsilon: f64,
    z_grid: &[f64],
) -> Result<CurveReport> {
    check_curve_hypotheses(l, lambda, epsilon)?;
    let range = z_range(l, lambda, epsilon)?;
    let mut zs = z_grid.to_vec();
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    let mut points = Vec::with_capacity(zs.len());
    for &z in &zs {
        let t_z = solve_in_range(l, lambda, epsilon, range, z.into())?;
        let value = l
            .right_limit_value(t_z)?
            .checked_sub(ExtReal::from(t_z * z))?
            .to_f64();
        let grid_inf = grid_inf_positive(l, z)?.to_f64();
        points.push(CurvePoint {
            z,
            t_z,
            value,
            grid_inf,
        });
    }

    let non_positive = points.iter().all(|p| p.value <= VANISH_TOL);
    let strictly_decreasing = points.windows(2).all(|w| w[1].value < w[0].value);
    let mut max_second_difference = f64::NEG_INFINITY;
    for w in points.windows(3) {
        let s0 = (w[1].value - w[0].value) / (w[1].z - w[0].z);
        let s1 = (w[2].value - w[1].value) / (w[2].z - w[1].z);
        let d = (s1 - s0) * 0.5 * (w[2].z - w[0].z);
        max_second_difference = max_second_difference.max(d);
    }
    let strictly_concave = points.len() < 3 || max_second_difference < -CONCAVE_TOL;
    let max_oracle_error = points
        .iter()
        .map(|p| (p.value - p.grid_inf).abs())
        .fold(0.0, f64::max);

    let zl = range.0;
    let at_start = l
        .right_limit_value(lambda)?
        .checked_sub(ExtReal::from(lambda).mul_zero_convention(zl))?;
    let vanishes_observed = at_start.is_finite() && at_start.to_f64().abs() <= VANISH_TOL;

    Ok(CurveReport {
        lambda,
        epsilon,
        z_range: range,
        points,
        non_positive,
        strictly_decreasing,
        strictly_concave,
        max_second_difference,
        vanishes_expected: vanish_conditions(l, lambda)?,
        vanishes_observed,
        unbounded_below_expected: range.1 == PosInf,
        max_oracle_error,
    })
}

/// `λ > 0` with `L` linear on `[0, λ]` and differentiable at `λ`, or `λ = 0`
/// with `L` right continuous at 0.
fn vanish_conditions(l: &ConvexFn, lambda: f64) -> Result<bool> {
    if lambda == 0.0 {
        return l.is_right_continuous_at(0.0, 1e-9);
    }
    let (Ok(l0), Ok(ll)) = (fin(l.eval(0.0)?, "L(0)"), fin(l.eval(lambda)?, "L(lambda)")) else {
        return Ok(false);
    };
    let slope = (ll - l0) / lambda;
    for i in 1..16 {
        let t = lambda * i as f64 / 16.0;
        match l.eval(t)? {
            ExtReal::Finite(v) if close(v, l0 + slope * t, 1e-9) => {}
            _ => return Ok(false),
        }
    }
    let (left, right) = (l.left_deriv(lambda)?, l.right_deriv(lambda)?);
    Ok(match (left, right) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => close(a, b, DIFF_TOL),
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::Oracle;

    fn half_square() -> ConvexFn {
        ConvexFn::from_oracle(
            NegInf,
            PosInf,
            Oracle::Quadratic {
                a: 0.5,
                b: 0.0,
                c: 0.0,
            },
        )
        .unwrap()
    }

    fn exp_minus_one() -> ConvexFn {
        ConvexFn::from_oracle(
            ExtReal::ZERO,
            2.0.into(),
            Oracle::Exp {
                a: 1.0,
                b: 1.0,
                c: 0.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn t_z_examples() {
        let t = solve_t_z(&half_square(), 0.0, 2.0, 1.0.into()).unwrap();
        assert!((t - 1.0).abs() < 1e-9);
        let t = solve_t_z(&exp_minus_one(), 0.0, 2.0, 1.0.into()).unwrap();
        assert!(t.abs() < 1e-9);
        assert!(matches!(
            solve_t_z(&half_square(), 0.0, 2.0, 2.5.into()),
            Err(Error::ZOutOfRange(_))
        ));
    }

    #[test]
    fn affine_start_maps_to_lambda() {
        let l = ConvexFn::new(
            ExtReal::ZERO,
            PosInf,
            vec![(0.0, 0.0), (1.0, 1.0)],
            Some(Oracle::Quadratic {
                a: 0.5,
                b: 0.0,
                c: 0.5,
            }),
        )
        .unwrap();
        // t_z is the smallest t of the run
        let t = solve_t_z(&l, 1.0, 1.0, 1.0.into()).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn half_square_curve() {
        let r = corollary_curve(&half_square(), 0.0, 2.0, &[0.0, 0.5, 1.0]).unwrap();
        let want = [0.0, -0.125, -0.5];
        for (p, w) in r.points.iter().zip(want) {
            assert!((p.value - w).abs() < 1e-7, "{p:?}");
        }
        assert!((r.max_second_difference + 0.25).abs() < 1e-6);
        assert!(r.holds(), "{r:?}");
        assert!(r.vanishes_expected);
    }

    #[test]
    fn flat_derivative_end_is_rejected() {
        // t^2/2 up to 1, then affine: the derivative supremum over ]0, 2[ is attained
        let l = ConvexFn::new(
            ExtReal::ZERO,
            3.0.into(),
            vec![(1.0, 0.5), (3.0, 2.5)],
            Some(Oracle::Quadratic {
                a: 0.5,
                b: 0.0,
                c: 0.0,
            }),
        )
        .unwrap();
        assert!(matches!(
            check_curve_hypotheses(&l, 0.0, 2.0),
            Err(Error::CurveHypothesis(_))
        ));
        let kink = ConvexFn::pwl(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert!(check_curve_hypotheses(&kink, 0.0, 2.0).is_err());
    }

    #[test]
    fn grid_spacing() {
        let g = curve_grid(0.0.into(), 2.0.into(), 4).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5]);
        assert!(curve_grid(0.0.into(), PosInf, 4).is_err());
    }
}
