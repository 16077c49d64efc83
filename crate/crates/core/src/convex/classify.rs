//! Local structure of a convex function to the right of a point: which of
//! the five mutually exclusive cases holds, where the affine run starting at
//! the point ends, and the behaviour at zero.

use serde::{Deserialize, Serialize};

use super::{ConvexFn, Oracle};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointCase {
    /// `L'_r(λ+)` is a limit of right-derivative values strictly above it.
    #[serde(rename = "I_limit_point")]
    LimitPoint,
    /// Affine on `]λ, λ+ε]`, then the slope increases.
    #[serde(rename = "II_affine_then_kink")]
    AffineThenKink,
    /// Affine on `]λ, +∞[`.
    #[serde(rename = "III_affine_ray")]
    AffineRay,
    /// Finite at λ, `+∞` beyond.
    #[serde(rename = "IV_finite_then_infinite")]
    FiniteThenInfinite,
    /// `+∞` on `[λ, +∞[`.
    #[serde(rename = "V_all_infinite")]
    AllInfinite,
    #[serde(rename = "IMPROPER")]
    Improper,
}

impl PointCase {
    pub fn tag(self) -> &'static str {
        match self {
            PointCase::LimitPoint => "I_limit_point",
            PointCase::AffineThenKink => "II_affine_then_kink",
            PointCase::AffineRay => "III_affine_ray",
            PointCase::FiniteThenInfinite => "IV_finite_then_infinite",
            PointCase::AllInfinite => "V_all_infinite",
            PointCase::Improper => "IMPROPER",
        }
    }
}

impl std::fmt::Display for PointCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    /// Slope agreement treated as affinity on knot-backed functions.
    pub tol_affine_pwl: f64,
    /// Slope agreement treated as affinity on oracle-backed functions.
    pub tol_affine_oracle: f64,
    /// Finest probe is `λ + w 2^-probe_depth`.
    pub probe_depth: i32,
    /// A slope increase at the end of an affine run counts as a kink when it
    /// exceeds `jump_factor * tol`.
    pub jump_factor: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol_affine_pwl: 1e-9,
            tol_affine_oracle: 1e-6,
            probe_depth: 16,
            jump_factor: 10.0,
        }
    }
}

impl ClassifyOptions {
    pub fn halved(&self) -> Self {
        ClassifyOptions {
            tol_affine_pwl: self.tol_affine_pwl / 2.0,
            tol_affine_oracle: self.tol_affine_oracle / 2.0,
            ..*self
        }
    }
}

/// Classification together with the quantities computed along the way.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PointAnalysis {
    pub case: PointCase,
    pub slope: ExtReal,
    /// End of the affine run starting at λ; `None` for cases IV, V and
    /// improper functions.
    pub run_end: Option<ExtReal>,
}

impl ConvexFn {
    pub fn classify_point(&self, lambda: f64) -> Result<PointCase> {
        self.classify_point_with(lambda, &ClassifyOptions::default())
    }

    pub fn classify_point_with(&self, lambda: f64, opts: &ClassifyOptions) -> Result<PointCase> {
        Ok(self.analyze_point(lambda, opts)?.case)
    }

    /// `sup{t > λ : f affine on ]λ, t]}`, or `λ` when no such `t` exists.
    ///
    /// Defined in cases I, II (end of the affine run) and III (`+∞`).
    pub fn lambda_tilde(&self, lambda: f64) -> Result<ExtReal> {
        let a = self.analyze_point(lambda, &ClassifyOptions::default())?;
        a.run_end.ok_or_else(|| {
            Error::PreconditionViolated(format!(
                "lambda_tilde undefined in case {} at {lambda}",
                a.case
            ))
        })
    }

    pub(crate) fn analyze_point(
        &self,
        lambda: f64,
        opts: &ClassifyOptions,
    ) -> Result<PointAnalysis> {
        if lambda.is_nan() {
            return Err(Error::Domain("NaN lambda".into()));
        }
        let none = |case| PointAnalysis {
            case,
            slope: self.right_deriv_limit(lambda).unwrap_or(PosInf),
            run_end: None,
        };
        if self.improper {
            return Ok(none(PointCase::Improper));
        }
        match self.eval(lambda)? {
            PosInf => return Ok(none(PointCase::AllInfinite)),
            NegInf => return Ok(none(PointCase::Improper)),
            ExtReal::Finite(_) => {}
        }
        if ExtReal::from(lambda) >= self.dom_hi {
            return Ok(none(PointCase::FiniteThenInfinite));
        }
        let s0 = match self.right_deriv_limit(lambda)? {
            NegInf => {
                return Ok(PointAnalysis {
                    case: PointCase::LimitPoint,
                    slope: NegInf,
                    run_end: Some(lambda.into()),
                })
            }
            PosInf => {
                return Err(Error::NoConvergence {
                    t: lambda,
                    what: "infinite right-derivative limit inside the domain",
                })
            }
            ExtReal::Finite(s) => s,
        };
        let tol = if self.pwl_model().is_some() {
            opts.tol_affine_pwl
        } else {
            opts.tol_affine_oracle
        };
        let w = self.probe_width(lambda);
        let mut prev = f64::INFINITY;
        let mut finest = f64::INFINITY;
        for k in 1..=opts.probe_depth {
            let t = lambda + w * 2f64.powi(-k);
            let d = match self.right_deriv(t)? {
                ExtReal::Finite(s) => s - s0,
                PosInf => f64::INFINITY,
                NegInf => {
                    return Err(Error::NoConvergence {
                        t,
                        what: "right derivative -inf right of lambda",
                    })
                }
            };
            if d > prev + tol || d < -tol {
                return Err(Error::NoConvergence {
                    t,
                    what: "sampled slopes are not monotone",
                });
            }
            prev = d;
            finest = d;
        }
        let found = |case, end| PointAnalysis {
            case,
            slope: s0.into(),
            run_end: Some(end),
        };
        if finest > tol {
            return Ok(found(PointCase::LimitPoint, lambda.into()));
        }
        let end = self.affine_run_end(lambda, s0, tol)?;
        let e = match end {
            PosInf => return Ok(found(PointCase::AffineRay, PosInf)),
            ExtReal::Finite(e) => e,
            NegInf => unreachable!("run end lies right of lambda"),
        };
        if end >= self.dom_hi {
            return Ok(found(PointCase::AffineThenKink, end));
        }
        let jump = match self.right_deriv_limit(e)? {
            ExtReal::Finite(s) => s - s0,
            _ => f64::INFINITY,
        };
        let case = if jump > opts.jump_factor * tol {
            PointCase::AffineThenKink
        } else {
            PointCase::LimitPoint
        };
        Ok(found(case, end))
    }

    /// First point right of `lambda` past which the right derivative exceeds
    /// `s0 + tol`; `+∞` for an affine ray.
    fn affine_run_end(&self, lambda: f64, s0: f64, tol: f64) -> Result<ExtReal> {
        let in_run = |s: ExtReal| matches!(s, ExtReal::Finite(v) if v <= s0 + tol);
        let mut from = lambda;
        if let Some((k0, k1)) = self.knot_span() {
            // A left ray is affine up to the first knot.
            let lambda = if lambda < k0 && matches!(self.oracle, Some(Oracle::Linear { .. })) {
                k0
            } else {
                lambda
            };
            if k0 <= lambda && lambda < k1 {
                let i0 = self.knots.partition_point(|k| k.0 <= lambda);
                let mut i = i0;
                while i < self.knots.len() {
                    let (a, b) = (self.knots[i - 1], self.knots[i]);
                    let s = (b.1 - a.1) / (b.0 - a.0);
                    if s > s0 + tol {
                        return Ok(a.0.into());
                    }
                    i += 1;
                }
                if ExtReal::from(k1) >= self.dom_hi {
                    return Ok(k1.into());
                }
                if let Some(Oracle::Linear { right_slope, .. }) = &self.oracle {
                    return Ok(match right_slope {
                        Some(r) if *r <= s0 + tol => PosInf,
                        _ => k1.into(),
                    });
                }
                if !in_run(self.right_deriv(k1)?) {
                    return Ok(k1.into());
                }
                from = k1;
            }
        }
        // Bracket the end of the run, then bisect on the monotone predicate.
        let w = self.probe_width(from).max(f64::MIN_POSITIVE);
        let mut a = from;
        let mut b = None;
        for k in (0..=20).rev() {
            let t = from + w * 2f64.powi(-k);
            if in_run(self.right_deriv(t)?) {
                a = t;
            } else {
                b = Some(t);
                break;
            }
        }
        let mut b = match (b, self.dom_hi) {
            (Some(b), _) => b,
            (None, ExtReal::Finite(hi)) => hi,
            (None, _) => {
                let mut found = None;
                for j in 1..=40 {
                    let t = from + w * 2f64.powi(j);
                    if in_run(self.right_deriv(t)?) {
                        a = t;
                    } else {
                        found = Some(t);
                        break;
                    }
                }
                match found {
                    Some(t) => t,
                    None => return Ok(PosInf),
                }
            }
        };
        let width = 1e-10 * (b - lambda).max(1.0);
        while b - a > width {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if in_run(self.right_deriv(m)?) {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(b.into())
    }

    /// Behaviour at zero: value, right limit, one-sided slope and the right
    /// limit of the slope map.
    pub fn zero_diagnostics(&self) -> Result<ZeroDiagnostics> {
        let value = self.eval(0.0)?;
        let right_limit = self.right_limit_value(0.0)?;
        let rd = self.right_deriv(0.0)?;
        let rdl = self.right_deriv_limit(0.0)?;
        let lsc = match (value, right_limit) {
            (ExtReal::Finite(v), ExtReal::Finite(r)) => v <= r + ZERO_TOL,
            (v, r) => v <= r,
        };
        let rc = match (rd, rdl) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                (a - b).abs() <= ZERO_TOL * b.abs().max(1.0)
            }
            (a, b) => a == b,
        };
        Ok(ZeroDiagnostics {
            value,
            right_limit,
            right_deriv: rd,
            right_deriv_limit: rdl,
            lower_semicontinuous: lsc,
            right_deriv_right_continuous: rc,
        })
    }

    /// Whether `f(t+) = f(t)` within `tol`.
    pub fn is_right_continuous_at(&self, t: f64, tol: f64) -> Result<bool> {
        Ok(match (self.eval(t)?, self.right_limit_value(t)?) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= tol,
            (a, b) => a == b,
        })
    }
}

const ZERO_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZeroDiagnostics {
    pub value: ExtReal,
    pub right_limit: ExtReal,
    pub right_deriv: ExtReal,
    pub right_deriv_limit: ExtReal,
    pub lower_semicontinuous: bool,
    pub right_deriv_right_continuous: bool,
}

impl ZeroDiagnostics {
    /// `L'_r(0) = -∞` together with `L'_r(0+) > -∞`.
    pub fn slope_jumps_from_minus_infinity(&self) -> bool {
        self.right_deriv == NegInf && self.right_deriv_limit > NegInf
    }
}

/// Sampled properties of the right-derivative map on `]0, ∞[`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivativeMapCheck {
    /// No sampled value equals `-∞`.
    pub above_minus_infinity: bool,
    pub non_decreasing: bool,
    pub right_continuous: bool,
}

impl DerivativeMapCheck {
    pub fn holds(&self) -> bool {
        self.above_minus_infinity && self.non_decreasing && self.right_continuous
    }
}

/// Checks the right-derivative map at the positive sample points `ts`.
pub fn derivative_map_check(f: &ConvexFn, ts: &[f64]) -> Result<DerivativeMapCheck> {
    let mut ts: Vec<f64> = ts.iter().copied().filter(|t| *t > 0.0).collect();
    ts.sort_by(f64::total_cmp);
    let mut out = DerivativeMapCheck {
        above_minus_infinity: true,
        non_decreasing: true,
        right_continuous: true,
    };
    let mut prev = NegInf;
    for &t in &ts {
        let r = f.right_deriv(t)?;
        if r == NegInf {
            out.above_minus_infinity = false;
        }
        if let (ExtReal::Finite(a), ExtReal::Finite(b)) = (prev, r) {
            if b < a - 1e-7 * a.abs().max(1.0) {
                out.non_decreasing = false;
            }
        } else if r < prev {
            out.non_decreasing = false;
        }
        prev = r;
        let lim = f.right_deriv_limit(t)?;
        let same = match (r, lim) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= 1e-6 * a.abs().max(1.0),
            (a, b) => a == b,
        };
        if !same {
            out.right_continuous = false;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pwl(k: &[(f64, f64)]) -> ConvexFn {
        ConvexFn::pwl(k.to_vec()).unwrap()
    }

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
    fn pwl_cases() {
        let f = pwl(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]);
        assert_eq!(f.classify_point(0.0).unwrap(), PointCase::AffineThenKink);
        assert_eq!(f.lambda_tilde(0.0).unwrap(), ExtReal::from(1.0));
        assert_eq!(
            f.classify_point(2.0).unwrap(),
            PointCase::FiniteThenInfinite
        );
        assert_eq!(f.classify_point(2.5).unwrap(), PointCase::AllInfinite);
        let g = pwl(&[(0.0, 0.0), (2.0, 2.0)]);
        assert_eq!(
            g.classify_point(2.0).unwrap(),
            PointCase::FiniteThenInfinite
        );
        assert!(matches!(
            g.lambda_tilde(2.0),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn affine_run_end_on_knots() {
        let f = pwl(&[(0.0, 0.0), (2.0, 2.0), (3.0, 4.0), (4.0, 7.0)]);
        assert_eq!(f.lambda_tilde(0.5).unwrap(), ExtReal::from(2.0));
    }

    #[test]
    fn ray_case() {
        let f = ConvexFn::pwl_with_rays(vec![(0.0, 0.0), (1.0, 1.0)], None, Some(1.0)).unwrap();
        assert_eq!(f.classify_point(0.0).unwrap(), PointCase::AffineRay);
        assert_eq!(f.lambda_tilde(0.0).unwrap(), PosInf);
        let q = ConvexFn::from_oracle(
            0.0.into(),
            PosInf,
            Oracle::Quadratic {
                a: 0.0,
                b: 2.0,
                c: 0.0,
            },
        )
        .unwrap();
        assert_eq!(q.classify_point(1.0).unwrap(), PointCase::AffineRay);
    }

    #[test]
    fn strictly_convex_is_limit_point() {
        let f = half_square();
        assert_eq!(f.classify_point(1.0).unwrap(), PointCase::LimitPoint);
        assert_eq!(f.lambda_tilde(1.0).unwrap(), ExtReal::from(1.0));
        let sq = ConvexFn::from_oracle(
            0.0.into(),
            PosInf,
            Oracle::Quadratic {
                a: 1.0,
                b: 0.0,
                c: 0.0,
            },
        )
        .unwrap();
        assert_eq!(sq.classify_point(1.0).unwrap(), PointCase::LimitPoint);
    }

    #[test]
    fn affine_then_smooth_is_limit_point_at_run_end() {
        // t on [0, 1], then t^2/2 + 1/2: differentiable at 1
        let f = ConvexFn::new(
            0.0.into(),
            PosInf,
            vec![(0.0, 0.0), (1.0, 1.0)],
            Some(Oracle::Quadratic {
                a: 0.5,
                b: 0.0,
                c: 0.5,
            }),
        )
        .unwrap();
        assert_eq!(f.classify_point(0.0).unwrap(), PointCase::LimitPoint);
        let lt = f.lambda_tilde(0.0).unwrap().to_f64();
        assert!((lt - 1.0).abs() < 1e-5, "{lt}");
        assert_eq!(f.classify_point(1.0).unwrap(), PointCase::LimitPoint);
        // t on [0, 1], then t^2 (slope jumps from 1 to 2)
        let g = ConvexFn::new(
            0.0.into(),
            PosInf,
            vec![(0.0, 0.0), (1.0, 1.0)],
            Some(Oracle::Quadratic {
                a: 1.0,
                b: 0.0,
                c: 0.0,
            }),
        )
        .unwrap();
        assert_eq!(g.classify_point(0.0).unwrap(), PointCase::AffineThenKink);
        assert_eq!(g.classify_point(1.0).unwrap(), PointCase::LimitPoint);
    }

    #[test]
    fn improper_is_flagged() {
        let f = ConvexFn::improper(PosInf).unwrap();
        assert_eq!(f.classify_point(0.0).unwrap(), PointCase::Improper);
        assert_eq!(f.classify_point(3.0).unwrap(), PointCase::Improper);
    }

    #[test]
    fn halved_tolerances_agree() {
        let cases = [
            pwl(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]),
            half_square(),
            pwl(&[(0.0, 0.0), (2.0, 2.0)]),
        ];
        let opts = ClassifyOptions::default();
        for f in &cases {
            for lam in [0.0, 0.5, 1.0, 2.0] {
                let a = f.classify_point_with(lam, &opts).unwrap();
                let b = f.classify_point_with(lam, &opts.halved()).unwrap();
                assert_eq!(a, b, "lambda {lam}");
            }
        }
    }

    #[test]
    fn zero_point_equivalence() {
        let jump = ConvexFn::from_oracle(
            0.0.into(),
            2.0.into(),
            Oracle::Power {
                terms: vec![],
                linear: 1.0,
                jump: -1.0,
            },
        )
        .unwrap();
        let d = jump.zero_diagnostics().unwrap();
        assert!(!d.lower_semicontinuous);
        assert!(d.slope_jumps_from_minus_infinity());
        assert!(!d.right_deriv_right_continuous);

        let root = ConvexFn::from_oracle(
            0.0.into(),
            1.0.into(),
            Oracle::Power {
                terms: vec![[-1.0, 0.5]],
                linear: 0.0,
                jump: 0.0,
            },
        )
        .unwrap();
        let d = root.zero_diagnostics().unwrap();
        assert!(d.lower_semicontinuous);
        assert!(!d.slope_jumps_from_minus_infinity());
        assert!(d.right_deriv_right_continuous);
    }

    #[test]
    fn derivative_map_is_monotone_and_right_continuous() {
        let f = pwl(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]);
        let ts: Vec<f64> = (1..40).map(|i| i as f64 * 0.05).collect();
        assert!(derivative_map_check(&f, &ts).unwrap().holds());
        let imp = ConvexFn::improper(2.0.into()).unwrap();
        assert!(!derivative_map_check(&imp, &ts).unwrap().holds());
    }
}
