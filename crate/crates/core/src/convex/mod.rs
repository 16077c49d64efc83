//! One-dimensional extended-real convex functions.
//!
//! A [`ConvexFn`] is a closed interval `[dom_lo, dom_hi]` (outside of which it
//! is `+∞`), an optional list of knots giving exact piecewise-linear structure
//! on `[first knot, last knot]`, and an optional [`Oracle`] for the rest of the
//! domain. Values are immutable after construction.

mod classify;
mod deriv;
mod oracle;
pub(crate) mod pwl;

use serde::{Deserialize, Serialize};

pub use classify::{
    derivative_map_check, ClassifyOptions, DerivativeMapCheck, PointCase, ZeroDiagnostics,
};
pub use deriv::FdSchedule;
pub(crate) use oracle::log_bernoulli;
pub use oracle::{CustomOracle, Oracle};

use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use pwl::PwlModel;

/// Slopes of adjacent knot pieces may decrease by at most this much
/// (relative) before a knot list is rejected as non-convex.
const KNOT_SLOPE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ConvexFnRepr", into = "ConvexFnRepr")]
pub struct ConvexFn {
    dom_lo: ExtReal,
    dom_hi: ExtReal,
    knots: Vec<(f64, f64)>,
    oracle: Option<Oracle>,
    improper: bool,
}

#[derive(Serialize, Deserialize)]
struct ConvexFnRepr {
    dom: [ExtReal; 2],
    #[serde(default)]
    knots: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oracle: Option<Oracle>,
    #[serde(default)]
    improper: bool,
}

impl TryFrom<ConvexFnRepr> for ConvexFn {
    type Error = Error;
    fn try_from(r: ConvexFnRepr) -> Result<Self> {
        if r.improper {
            return ConvexFn::improper(r.dom[1]);
        }
        ConvexFn::new(
            r.dom[0],
            r.dom[1],
            r.knots.into_iter().map(|[t, v]| (t, v)).collect(),
            r.oracle,
        )
    }
}

impl From<ConvexFn> for ConvexFnRepr {
    fn from(f: ConvexFn) -> Self {
        ConvexFnRepr {
            dom: [f.dom_lo, f.dom_hi],
            knots: f.knots.iter().map(|&(t, v)| [t, v]).collect(),
            oracle: f.oracle,
            improper: f.improper,
        }
    }
}

impl ConvexFn {
    /// General constructor; validates domain, knot convexity and coverage.
    pub fn new(
        dom_lo: ExtReal,
        dom_hi: ExtReal,
        knots: Vec<(f64, f64)>,
        oracle: Option<Oracle>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidFunction(m));
        if dom_lo > dom_hi || dom_lo == PosInf || dom_hi == NegInf {
            return bad(format!("empty domain [{dom_lo}, {dom_hi}]"));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return bad("knots must be finite".into());
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return bad("knot abscissae must be strictly increasing".into());
        }
        let slopes: Vec<f64> = knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        for w in slopes.windows(2) {
            if w[1] < w[0] - KNOT_SLOPE_TOL * w[0].abs().max(1.0) {
                return bad(format!("knot slopes decrease ({} then {})", w[0], w[1]));
            }
        }
        if let (Some(first), Some(last)) = (knots.first(), knots.last()) {
            if ExtReal::from(first.0) < dom_lo || ExtReal::from(last.0) > dom_hi {
                return bad("knots outside the domain".into());
            }
        }
        if let Some(o) = &oracle {
            o.validate().map_err(Error::InvalidFunction)?;
        }
        let covered_left = knots.first().is_some_and(|k| ExtReal::from(k.0) == dom_lo);
        let covered_right = knots.last().is_some_and(|k| ExtReal::from(k.0) == dom_hi);
        match &oracle {
            None if !(covered_left && covered_right) => {
                return bad("knots do not cover the domain and no oracle is given".into())
            }
            Some(Oracle::Linear {
                left_slope,
                right_slope,
            }) => {
                if knots.is_empty() {
                    return bad("linear rays need at least one knot".into());
                }
                if !covered_left && (left_slope.is_none() || dom_lo != NegInf) {
                    return bad("left ray must run to -inf".into());
                }
                if !covered_right && (right_slope.is_none() || dom_hi != PosInf) {
                    return bad("right ray must run to +inf".into());
                }
                if let (Some(l), Some(s)) = (left_slope, slopes.first()) {
                    if *l > s + KNOT_SLOPE_TOL * s.abs().max(1.0) {
                        return bad("left ray steeper than first piece".into());
                    }
                }
                if let (Some(r), Some(s)) = (right_slope, slopes.last()) {
                    if *r < s - KNOT_SLOPE_TOL * s.abs().max(1.0) {
                        return bad("right ray flatter than last piece".into());
                    }
                }
            }
            Some(Oracle::Power { .. }) if dom_lo < ExtReal::ZERO => {
                return bad("power oracle requires dom_lo >= 0".into())
            }
            _ => {}
        }
        Ok(ConvexFn {
            dom_lo,
            dom_hi,
            knots,
            oracle,
            improper: false,
        })
    }

    /// Piecewise-linear function on `[first knot, last knot]`, `+∞` elsewhere.
    pub fn pwl(knots: Vec<(f64, f64)>) -> Result<Self> {
        let (lo, hi) = match (knots.first(), knots.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => return Err(Error::InvalidFunction("no knots".into())),
        };
        Self::new(lo.into(), hi.into(), knots, None)
    }

    /// Piecewise-linear function continued by affine rays on the sides where a
    /// slope is given.
    pub fn pwl_with_rays(
        knots: Vec<(f64, f64)>,
        left_slope: Option<f64>,
        right_slope: Option<f64>,
    ) -> Result<Self> {
        let (lo, hi) = match (knots.first(), knots.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => return Err(Error::InvalidFunction("no knots".into())),
        };
        if left_slope.is_none() && right_slope.is_none() {
            return Self::pwl(knots);
        }
        let lo = if left_slope.is_some() {
            NegInf
        } else {
            lo.into()
        };
        let hi = if right_slope.is_some() {
            PosInf
        } else {
            hi.into()
        };
        Self::new(
            lo,
            hi,
            knots,
            Some(Oracle::Linear {
                left_slope,
                right_slope,
            }),
        )
    }

    pub fn from_oracle(dom_lo: ExtReal, dom_hi: ExtReal, oracle: Oracle) -> Result<Self> {
        Self::new(dom_lo, dom_hi, Vec::new(), Some(oracle))
    }

    /// Improper function of the only admissible shape on `[0, ∞)`: `0` at
    /// zero, `-∞` on `]0, T]` and `+∞` beyond `T`.
    pub fn improper(t_end: ExtReal) -> Result<Self> {
        if t_end <= ExtReal::ZERO {
            return Err(Error::InvalidFunction("improper ray needs T > 0".into()));
        }
        Ok(ConvexFn {
            dom_lo: ExtReal::ZERO,
            dom_hi: t_end,
            knots: Vec::new(),
            oracle: None,
            improper: true,
        })
    }

    pub fn dom_lo(&self) -> ExtReal {
        self.dom_lo
    }

    pub fn dom_hi(&self) -> ExtReal {
        self.dom_hi
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn oracle(&self) -> Option<&Oracle> {
        self.oracle.as_ref()
    }

    pub fn is_improper(&self) -> bool {
        self.improper
    }

    /// Proper on `[0, ∞)`: never `-∞` there and finite at zero.
    pub fn is_proper_on_nonneg(&self) -> bool {
        !self.improper && self.eval(0.0).is_ok_and(|v| v.is_finite())
    }

    pub(crate) fn in_domain(&self, t: f64) -> bool {
        let t = ExtReal::from(t);
        self.dom_lo <= t && t <= self.dom_hi
    }

    pub(crate) fn knot_span(&self) -> Option<(f64, f64)> {
        Some((self.knots.first()?.0, self.knots.last()?.0))
    }

    pub fn eval(&self, t: f64) -> Result<ExtReal> {
        if t.is_nan() {
            return Err(Error::Domain("NaN argument".into()));
        }
        if self.improper {
            return Ok(if t == 0.0 {
                ExtReal::ZERO
            } else if t > 0.0 && ExtReal::from(t) <= self.dom_hi {
                NegInf
            } else {
                PosInf
            });
        }
        if !self.in_domain(t) {
            return Ok(PosInf);
        }
        if let Some((k0, k1)) = self.knot_span() {
            if k0 <= t && t <= k1 {
                return Ok(ExtReal::from(self.interpolate(t)));
            }
            if let Some(Oracle::Linear {
                left_slope,
                right_slope,
            }) = &self.oracle
            {
                let (anchor, slope) = if t < k0 {
                    (self.knots[0], left_slope)
                } else {
                    (self.knots[self.knots.len() - 1], right_slope)
                };
                return match slope {
                    Some(s) => Ok(ExtReal::from(anchor.1 + s * (t - anchor.0))),
                    None => Ok(PosInf),
                };
            }
        }
        match &self.oracle {
            Some(o) => Ok(o.eval(t)),
            None => Err(Error::OracleMissing(t)),
        }
    }

    /// Linear interpolation; `t` must lie in the knot span.
    fn interpolate(&self, t: f64) -> f64 {
        let i = self.knots.partition_point(|k| k.0 <= t);
        if i == 0 {
            return self.knots[0].1;
        }
        let (t0, v0) = self.knots[i - 1];
        if t == t0 || i == self.knots.len() {
            return v0;
        }
        let (t1, v1) = self.knots[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Slope of the knot piece starting at or containing `t` from the right.
    fn knot_slope_right(&self, t: f64) -> Option<f64> {
        let (k0, k1) = self.knot_span()?;
        if t < k0 || t >= k1 {
            return None;
        }
        let i = self.knots.partition_point(|k| k.0 <= t);
        let (a, b) = (self.knots[i - 1], self.knots[i]);
        Some((b.1 - a.1) / (b.0 - a.0))
    }

    fn knot_slope_left(&self, t: f64) -> Option<f64> {
        let (k0, k1) = self.knot_span()?;
        if t <= k0 || t > k1 {
            return None;
        }
        let i = self.knots.partition_point(|k| k.0 < t);
        let (a, b) = (self.knots[i - 1], self.knots[i]);
        Some((b.1 - a.1) / (b.0 - a.0))
    }

    /// Exact piecewise-linear view when the function is knots plus (at most)
    /// affine rays.
    pub(crate) fn pwl_model(&self) -> Option<PwlModel> {
        if self.improper || self.knots.is_empty() {
            return None;
        }
        let (k0, k1) = self.knot_span()?;
        let (left, right) = match &self.oracle {
            None => (None, None),
            Some(Oracle::Linear {
                left_slope,
                right_slope,
            }) => (
                if self.dom_lo == ExtReal::from(k0) {
                    None
                } else {
                    *left_slope
                },
                if self.dom_hi == ExtReal::from(k1) {
                    None
                } else {
                    *right_slope
                },
            ),
            Some(_) => {
                if self.dom_lo == ExtReal::from(k0) && self.dom_hi == ExtReal::from(k1) {
                    (None, None)
                } else {
                    return None;
                }
            }
        };
        Some(PwlModel {
            vertices: self.knots.clone(),
            left_slope: left,
            right_slope: right,
        })
    }

    /// Stable identifier of the serialized function (hex SHA-256 prefix);
    /// `None` for functions carrying a custom oracle.
    pub fn fingerprint(&self) -> Option<String> {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).ok()?;
        let digest = Sha256::digest(&json);
        Some(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_knots() -> ConvexFn {
        ConvexFn::pwl(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).unwrap()
    }

    #[test]
    fn eval_interpolates_knots() {
        let f = three_knots();
        assert_eq!(f.eval(1.5).unwrap(), ExtReal::from(2.0));
        assert_eq!(f.eval(1.0).unwrap(), ExtReal::from(1.0));
        assert_eq!(f.eval(3.0).unwrap(), PosInf);
        assert_eq!(f.eval(-0.1).unwrap(), PosInf);
    }

    #[test]
    fn eval_oracle() {
        let f = ConvexFn::from_oracle(
            0.0.into(),
            4.0.into(),
            Oracle::Quadratic {
                a: 0.5,
                b: 0.0,
                c: 0.0,
            },
        )
        .unwrap();
        assert_eq!(f.eval(2.0).unwrap(), ExtReal::from(2.0));
        assert_eq!(f.eval(4.5).unwrap(), PosInf);
    }

    #[test]
    fn oracle_missing_is_reported() {
        // knots on [0, 1] inside a domain [0, 2] with nothing past 1
        let f = ConvexFn {
            dom_lo: 0.0.into(),
            dom_hi: 2.0.into(),
            knots: vec![(0.0, 0.0), (1.0, 1.0)],
            oracle: None,
            improper: false,
        };
        assert!(matches!(f.eval(1.5), Err(Error::OracleMissing(_))));
        assert!(ConvexFn::new(0.0.into(), 2.0.into(), vec![(0.0, 0.0), (1.0, 1.0)], None).is_err());
    }

    #[test]
    fn non_convex_knots_are_rejected() {
        assert!(ConvexFn::pwl(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]).is_err());
        assert!(ConvexFn::pwl(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn rays_extend_the_knots() {
        let f =
            ConvexFn::pwl_with_rays(vec![(1.0, 0.0), (2.0, 1.0)], Some(0.0), Some(2.0)).unwrap();
        assert_eq!(f.eval(-5.0).unwrap(), ExtReal::ZERO);
        assert_eq!(f.eval(3.0).unwrap(), ExtReal::from(3.0));
        assert!(f.pwl_model().is_some());
    }

    #[test]
    fn improper_shape() {
        let f = ConvexFn::improper(2.0.into()).unwrap();
        assert_eq!(f.eval(0.0).unwrap(), ExtReal::ZERO);
        assert_eq!(f.eval(1.0).unwrap(), NegInf);
        assert_eq!(f.eval(3.0).unwrap(), PosInf);
        assert!(!f.is_proper_on_nonneg());
    }

    #[test]
    fn json_round_trip_preserves_values() {
        let f = ConvexFn::pwl_with_rays(vec![(0.0, 0.0), (1.0, 1.0)], None, Some(3.0)).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"dom":[0.0,"+inf"],"knots":[[0.0,0.0],[1.0,1.0]],"oracle":{"kind":"linear","params":{"left_slope":null,"right_slope":3.0}},"improper":false}"#
        );
        let g: ConvexFn = serde_json::from_str(&s).unwrap();
        for t in [0.0, 0.5, 1.0, 7.0] {
            assert_eq!(f.eval(t).unwrap(), g.eval(t).unwrap());
        }
        assert_eq!(f.fingerprint(), g.fingerprint());
    }

    #[test]
    fn json_rejects_nonconvex_input() {
        let bad = r#"{"dom":[0,2],"knots":[[0,0],[1,2],[2,3]]}"#;
        assert!(serde_json::from_str::<ConvexFn>(bad).is_err());
    }
}
