use serde::Serialize;

use crate::convex::{ClassifyOptions, ConvexFn, PointCase};
use crate::error::{Error, ExcludedCase, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::legendre::{conjugate_at, golden_max};

/// Points in the brute-force grid of [`grid_inf_positive`].
const INF_GRID: usize = 4096;
/// Right continuity at λ is accepted within this tolerance.
const CONTINUITY_TOL: f64 = 1e-9;

/// `L(λ+) - λ L'_r(λ+)` together with the two equivalent expressions used as
/// cross-checks.
#[derive(Clone, Debug, Serialize)]
pub struct LimitTarget {
    pub lambda: f64,
    pub value: ExtReal,
    /// `L'_r(λ+)`.
    pub slope: ExtReal,
    /// `L(λ+)`.
    pub right_limit: ExtReal,
    pub case: PointCase,
    pub lambda_tilde: Option<ExtReal>,
    /// `-L*(L'_r(λ+))`, or `-L*(-∞) = L(0+)` when the slope is `-∞`.
    pub via_conjugate: ExtReal,
    /// `inf_{t>0} {L(t) - t L'_r(λ+)}` by grid search; finite slopes only.
    pub via_grid_inf: Option<ExtReal>,
    pub hypotheses_checked: bool,
}

impl LimitTarget {
    /// Largest disagreement between the three expressions.
    pub fn max_route_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for other in [Some(self.via_conjugate), self.via_grid_inf]
            .into_iter()
            .flatten()
        {
            let d = match (self.value, other) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
                (a, b) if a == b => 0.0,
                _ => f64::INFINITY,
            };
            gap = gap.max(d);
        }
        gap
    }
}

/// Limit target at `lambda`, rejecting the excluded cases.
pub fn ps_limit_target(l: &ConvexFn, lambda: f64) -> Result<LimitTarget> {
    ps_limit_target_with(l, lambda, true)
}

/// As [`ps_limit_target`]; with `enforce = false` the formula is evaluated
/// even when the point falls into an excluded case.
pub fn ps_limit_target_with(l: &ConvexFn, lambda: f64, enforce: bool) -> Result<LimitTarget> {
    if l.is_improper() {
        return Err(Error::ImproperInput);
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::BadParams(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let a = l.analyze_point(lambda, &ClassifyOptions::default())?;
    if a.case == PointCase::Improper {
        return Err(Error::ImproperInput);
    }
    if enforce {
        if let Some(excluded) = ExcludedCase::from_point_case(a.case) {
            return Err(Error::HypothesisViolated {
                excluded,
                case: a.case,
            });
        }
        if a.slope == NegInf && !l.is_right_continuous_at(lambda, CONTINUITY_TOL)? {
            return Err(Error::HypothesisViolated {
                excluded: ExcludedCase::RightDiscontinuousAtZero,
                case: a.case,
            });
        }
    }
    let right_limit = l.right_limit_value(lambda)?;
    let value = right_limit.checked_sub(ExtReal::from(lambda).mul_zero_convention(a.slope))?;
    let (via_conjugate, via_grid_inf) = match a.slope {
        NegInf => (-conjugate_at(l, NegInf)?, None),
        s => (
            -conjugate_at(l, s)?,
            Some(grid_inf_positive(l, s.to_f64())?),
        ),
    };
    Ok(LimitTarget {
        lambda,
        value,
        slope: a.slope,
        right_limit,
        case: a.case,
        lambda_tilde: a.run_end,
        via_conjugate,
        via_grid_inf,
        hypotheses_checked: enforce,
    })
}

/// `inf_{t>0} {L(t) - t s}` by a uniform grid over `]0, b]` refined with a
/// golden-section search, `b` being the right end of the domain or the
/// point past which the objective increases.
pub fn grid_inf_positive(l: &ConvexFn, s: f64) -> Result<ExtReal> {
    // maximise the concave map t ↦ s t - L(t) and negate
    let g = |t: f64| -> Result<f64> {
        Ok(match l.eval(t)? {
            ExtReal::Finite(v) => s * t - v,
            PosInf => f64::NEG_INFINITY,
            NegInf => f64::INFINITY,
        })
    };
    let a = l.dom_lo().to_f64().max(0.0);
    if ExtReal::from(a) > l.dom_hi() {
        return Ok(PosInf);
    }
    let b = match l.dom_hi() {
        ExtReal::Finite(b) => b,
        _ => {
            let mut prev = g(a)?;
            let mut found = None;
            for k in 0..=62 {
                let q = a + 2f64.powi(k);
                let gq = g(q)?;
                if gq <= prev + 1e-12 * gq.abs().max(1.0) {
                    found = Some(q);
                    break;
                }
                prev = gq;
            }
            match found {
                Some(b) => b,
                None => return Ok(NegInf),
            }
        }
    };
    // t → 0+ (or the left end) is approached through the right limit
    let mut best = match l.right_limit_value(a)? {
        ExtReal::Finite(v) => s * a - v,
        PosInf => f64::NEG_INFINITY,
        NegInf => f64::INFINITY,
    };
    if b > a {
        let step = (b - a) / INF_GRID as f64;
        let mut imax = 1;
        let mut vmax = f64::NEG_INFINITY;
        for i in 1..=INF_GRID {
            let t = if i == INF_GRID {
                b
            } else {
                a + step * i as f64
            };
            let v = g(t)?;
            if v > vmax {
                vmax = v;
                imax = i;
            }
        }
        best = best.max(vmax);
        let lo = a + step * (imax - 1) as f64;
        let hi = (a + step * (imax + 1) as f64).min(b);
        let lo = if imax == 1 { a + step * 1e-9 } else { lo };
        best = best.max(golden_max(&g, lo, hi)?);
    }
    Ok(ExtReal::from(-best))
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

    #[test]
    fn smooth_target_and_routes() {
        let t = ps_limit_target(&half_square(), 1.0).unwrap();
        assert!((t.value.to_f64() + 0.5).abs() < 1e-7, "{:?}", t);
        assert!(t.max_route_gap() < 1e-6, "{:?}", t);
    }

    #[test]
    fn linear_then_differentiable_vanishes() {
        // slope 1 on [0, 1], then t^2/2 + 1/2: differentiable at 1
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
        let t = ps_limit_target(&l, 1.0).unwrap();
        assert!(t.value.to_f64().abs() < 1e-7, "{:?}", t);
    }

    #[test]
    fn excluded_cases() {
        let l = ConvexFn::pwl(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).unwrap();
        match ps_limit_target(&l, 0.0) {
            Err(Error::HypothesisViolated { excluded, case }) => {
                assert_eq!(excluded, ExcludedCase::AffineRun);
                assert_eq!(case, PointCase::AffineThenKink);
            }
            other => panic!("{other:?}"),
        }
        let jump = ConvexFn::from_oracle(
            ExtReal::ZERO,
            1.0.into(),
            Oracle::Power {
                terms: vec![[-1.0, 0.5]],
                linear: 1.0,
                jump: -1.0,
            },
        )
        .unwrap();
        assert!(matches!(
            ps_limit_target(&jump, 0.0),
            Err(Error::HypothesisViolated {
                excluded: ExcludedCase::RightDiscontinuousAtZero,
                ..
            })
        ));
        let imp = ConvexFn::improper(PosInf).unwrap();
        assert!(matches!(
            ps_limit_target(&imp, 0.0),
            Err(Error::ImproperInput)
        ));
    }

    #[test]
    fn zero_with_infinite_slope() {
        let l = ConvexFn::from_oracle(
            ExtReal::ZERO,
            1.0.into(),
            Oracle::Power {
                terms: vec![[-1.0, 0.5], [1.0, 2.0]],
                linear: 0.0,
                jump: 0.0,
            },
        )
        .unwrap();
        let t = ps_limit_target(&l, 0.0).unwrap();
        assert_eq!(t.slope, NegInf);
        assert!(t.value.to_f64().abs() < 1e-9);
        assert!(t.via_conjugate.to_f64().abs() < 1e-9);
    }
}
