//! One-sided derivatives.
//!
//! Knot pieces, affine rays and chord pieces give exact slopes. Everywhere
//! else a one-sided difference quotient is refined over `h = 2^-k`,
//! `k = 10..=40`, using the Richardson combination `2 D(h/2) - D(h)` (still
//! one-sided, so kinks are respected). The estimate is accepted once three
//! successive values agree to `tol` relative.

use super::{ConvexFn, Oracle};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdSchedule {
    pub k_min: i32,
    pub k_max: i32,
    pub tol: f64,
}

impl Default for FdSchedule {
    fn default() -> Self {
        FdSchedule {
            k_min: 10,
            k_max: 40,
            tol: 1e-8,
        }
    }
}

/// Samples used when taking the right limit of the right-derivative map.
const LIMIT_MAX_STEPS: i32 = 44;
const LIMIT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

impl ConvexFn {
    /// Right derivative with the conventions `+∞` when the function is `+∞`
    /// everywhere right of `t` and `-∞` when it is `-∞` somewhere right of `t`.
    pub fn right_deriv(&self, t: f64) -> Result<ExtReal> {
        self.right_deriv_with(t, &FdSchedule::default())
    }

    pub fn right_deriv_with(&self, t: f64, fd: &FdSchedule) -> Result<ExtReal> {
        if self.improper {
            return Ok(if ExtReal::from(t) < self.dom_hi {
                NegInf
            } else {
                PosInf
            });
        }
        if ExtReal::from(t) >= self.dom_hi {
            return Ok(PosInf);
        }
        if ExtReal::from(t) < self.dom_lo {
            return Ok(NegInf);
        }
        if let Some(s) = self.knot_slope_right(t) {
            return Ok(s.into());
        }
        match &self.oracle {
            Some(Oracle::Linear {
                right_slope,
                left_slope,
            }) => {
                let (k0, _) = self.knot_span().expect("linear oracle has knots");
                let s = if t < k0 { left_slope } else { right_slope };
                Ok(s.map_or(PosInf, ExtReal::from))
            }
            Some(Oracle::ChordComposite(cc)) => cc.right_deriv(t),
            _ => one_sided(self, t, Side::Right, fd),
        }
    }

    /// Mirror of [`ConvexFn::right_deriv`] with backward differences.
    pub fn left_deriv(&self, t: f64) -> Result<ExtReal> {
        self.left_deriv_with(t, &FdSchedule::default())
    }

    pub fn left_deriv_with(&self, t: f64, fd: &FdSchedule) -> Result<ExtReal> {
        if self.improper {
            return Ok(if ExtReal::from(t) > self.dom_hi {
                PosInf
            } else {
                NegInf
            });
        }
        if ExtReal::from(t) <= self.dom_lo {
            return Ok(NegInf);
        }
        if ExtReal::from(t) > self.dom_hi {
            return Ok(PosInf);
        }
        if let Some(s) = self.knot_slope_left(t) {
            return Ok(s.into());
        }
        match &self.oracle {
            Some(Oracle::Linear {
                right_slope,
                left_slope,
            }) => {
                let (_, k1) = self.knot_span().expect("linear oracle has knots");
                let s = if t > k1 { right_slope } else { left_slope };
                Ok(s.map_or(NegInf, ExtReal::from))
            }
            Some(Oracle::ChordComposite(cc)) => cc.left_deriv(t),
            _ => one_sided(self, t, Side::Left, fd),
        }
    }

    /// `L'_r(λ+)`, the right limit of the right-derivative map at `lambda`.
    ///
    /// Exact on knot pieces and rays; otherwise the right derivative is
    /// sampled at `λ + w 2^-k` and the sequence is either extrapolated
    /// (geometric convergence) or recognised as diverging to `-∞`.
    pub fn right_deriv_limit(&self, lambda: f64) -> Result<ExtReal> {
        if self.improper {
            return Ok(if ExtReal::from(lambda) < self.dom_hi {
                NegInf
            } else {
                PosInf
            });
        }
        let lam = ExtReal::from(lambda);
        if lam >= self.dom_hi {
            return Ok(PosInf);
        }
        if lam < self.dom_lo {
            return Ok(NegInf);
        }
        if let Some(s) = self.knot_slope_right(lambda) {
            return Ok(s.into());
        }
        // exact right derivatives are already right continuous
        if let Some(Oracle::Linear { .. } | Oracle::ChordComposite(_)) = &self.oracle {
            return self.right_deriv(lambda);
        }
        let w = self.probe_width(lambda);
        let mut samples: Vec<f64> = Vec::new();
        for k in 1..=LIMIT_MAX_STEPS {
            let t = lambda + w * 2f64.powi(-k);
            if t <= lambda {
                break;
            }
            let s = self.right_deriv(t)?;
            let s = match s {
                ExtReal::Finite(s) => s,
                NegInf => return Ok(NegInf),
                PosInf => {
                    return Err(Error::NoConvergence {
                        t: lambda,
                        what: "right derivative is +inf inside the domain",
                    })
                }
            };
            samples.push(s);
            let n = samples.len();
            if n >= 3 {
                let (a, b, c) = (samples[n - 3], samples[n - 2], samples[n - 1]);
                let scale = c.abs().max(1.0);
                if (a - b).abs() <= LIMIT_TOL * scale && (b - c).abs() <= LIMIT_TOL * scale {
                    return Ok((2.0 * c - b).into());
                }
            }
            if n >= 6 && diverges_down(&samples[n - 6..]) {
                return Ok(NegInf);
            }
        }
        let n = samples.len();
        if n >= 6 && diverges_down(&samples[n - 6..]) {
            return Ok(NegInf);
        }
        Err(Error::NoConvergence {
            t: lambda,
            what: "right-derivative samples did not settle",
        })
    }

    /// Width of the right probe window at `lambda`: at most 1, and at most
    /// half the distance to the right end of the domain.
    pub(crate) fn probe_width(&self, lambda: f64) -> f64 {
        match self.dom_hi {
            ExtReal::Finite(hi) => ((hi - lambda) / 2.0).min(1.0),
            _ => 1.0,
        }
    }

    /// `f(t+)` from the samples `f(t + w 2^-k)`, `k ≤ 50`, with an Aitken
    /// step on the last three when they form a geometric tail.
    pub fn right_limit_value(&self, t: f64) -> Result<ExtReal> {
        if self.improper {
            return self.eval(t + f64::EPSILON);
        }
        if ExtReal::from(t) >= self.dom_hi {
            return Ok(PosInf);
        }
        if let Some((k0, k1)) = self.knot_span() {
            if k0 < t && t < k1 {
                return self.eval(t);
            }
        }
        let w = self.probe_width(t);
        let mut samples = vec![self.eval(t + w)?];
        for k in 1..=50 {
            let s = t + w * 2f64.powi(-k);
            if s <= t {
                break;
            }
            samples.push(self.eval(s)?);
        }
        let n = samples.len();
        let last = samples[n - 1];
        if n < 3 {
            return Ok(last);
        }
        let (ExtReal::Finite(a), ExtReal::Finite(b), ExtReal::Finite(c)) =
            (samples[n - 3], samples[n - 2], samples[n - 1])
        else {
            return Ok(last);
        };
        let (d1, d2) = (b - a, c - b);
        let denom = d2 - d1;
        if denom == 0.0 || d1 * d2 <= 0.0 || d2.abs() >= d1.abs() {
            return Ok(last);
        }
        let corr = d2 * d2 / denom;
        if corr.abs() <= 8.0 * (c - a).abs() {
            Ok((c - corr).into())
        } else {
            Ok(last)
        }
    }
}

/// Strictly decreasing samples whose gaps do not shrink.
fn diverges_down(s: &[f64]) -> bool {
    let gaps: Vec<f64> = s.windows(2).map(|w| w[0] - w[1]).collect();
    gaps.iter().all(|&g| g > 0.0) && gaps.windows(2).all(|g| g[1] >= 0.9 * g[0])
}

fn one_sided(f: &ConvexFn, t: f64, side: Side, fd: &FdSchedule) -> Result<ExtReal> {
    let f0 = match f.eval(t)? {
        ExtReal::Finite(v) => v,
        other => {
            return Err(Error::Domain(format!(
                "one-sided derivative at t = {t} where the function is {other}"
            )))
        }
    };
    let dir = if side == Side::Right { 1.0 } else { -1.0 };
    let quotient = |h: f64| -> Result<Option<f64>> {
        match f.eval(t + dir * h)? {
            ExtReal::Finite(v) => Ok(Some(dir * (v - f0) / h)),
            _ => Ok(None),
        }
    };
    let mut est: Vec<Option<f64>> = Vec::new();
    for k in fd.k_min..=fd.k_max {
        let h = 2f64.powi(-k);
        let e = match (quotient(h)?, quotient(h / 2.0)?) {
            (Some(d1), Some(d2)) => Some(2.0 * d2 - d1),
            _ => None,
        };
        est.push(e);
        let n = est.len();
        if n >= 3 {
            if let (Some(a), Some(b), Some(c)) = (est[n - 3], est[n - 2], est[n - 1]) {
                let scale = c.abs().max(1.0);
                if (a - b).abs() <= fd.tol * scale && (b - c).abs() <= fd.tol * scale {
                    return Ok(c.into());
                }
            }
        }
    }
    // No plateau: a value jump or an infinite slope at t shows up as
    // estimates growing geometrically in magnitude.
    let tail: Vec<f64> = est.iter().rev().take(8).rev().filter_map(|e| *e).collect();
    if tail.len() == 8 {
        let growing = tail.windows(2).all(|w| w[1].abs() >= 1.2 * w[0].abs());
        let same_sign = tail.iter().all(|&x| x < 0.0) || tail.iter().all(|&x| x > 0.0);
        if growing && same_sign {
            return Ok(if tail[0] < 0.0 { NegInf } else { PosInf });
        }
    }
    Err(Error::NoConvergence {
        t,
        what: "difference quotients did not stabilise",
    })
}
