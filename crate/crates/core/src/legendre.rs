//! Legendre–Fenchel conjugation `f*(x) = sup_t (t x - f(t))`.
//!
//! Knot-backed functions are conjugated exactly by exchanging slopes and
//! breakpoints. Oracle-backed functions are maximised numerically
//! (grid bracketing followed by golden-section search) and conjugated on a
//! slope grid. The conjugate is extended to `-∞` by `f*(-∞) = -f(0+)` when
//! `f'_r(0+) = -∞`.

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexFn, Oracle};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};

/// Points in the bracketing grid before the golden-section refinement.
const BRACKET_GRID: usize = 64;
/// Slopes in the default grid for oracle-backed conjugation.
pub const DEFAULT_SLOPE_COUNT: usize = 256;
/// Stand-in for an infinite end of the domain when building the default
/// slope grid.
const FAR_END: f64 = 16.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjugateFn {
    #[serde(flatten)]
    pub inner: ConvexFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
    /// `f*(-∞) = -f(0+)`, present when `f'_r(0+) = -∞`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_inf_value: Option<ExtReal>,
}

impl ConjugateFn {
    pub fn eval(&self, x: ExtReal) -> Result<ExtReal> {
        match x {
            NegInf => self.minus_inf_value.ok_or(Error::ExtensionUnavailable),
            PosInf => Ok(PosInf),
            ExtReal::Finite(x) => self.inner.eval(x),
        }
    }

    /// Finite end points of the effective domain of the conjugate.
    pub fn domain(&self) -> (ExtReal, ExtReal) {
        (self.inner.dom_lo(), self.inner.dom_hi())
    }
}

fn ensure_proper(f: &ConvexFn) -> Result<()> {
    if f.is_improper() {
        return Err(Error::ImproperInput);
    }
    Ok(())
}

/// `-f(0+)` when `f'_r(0+) = -∞`, `None` otherwise.
fn minus_inf_extension(f: &ConvexFn) -> Result<Option<ExtReal>> {
    if !f.in_domain(0.0) || !f.eval(0.0)?.is_finite() {
        return Ok(None);
    }
    if f.right_deriv_limit(0.0)? != NegInf {
        return Ok(None);
    }
    Ok(Some(-f.right_limit_value(0.0)?))
}

/// `f*(x)`; for `x = -∞` the continuous extension `-f(0+)`.
pub fn conjugate_at(f: &ConvexFn, x: ExtReal) -> Result<ExtReal> {
    ensure_proper(f)?;
    let x = match x {
        NegInf => return minus_inf_extension(f)?.ok_or(Error::ExtensionUnavailable),
        PosInf => return Ok(PosInf),
        ExtReal::Finite(x) => x,
    };
    if let Some(m) = f.pwl_model() {
        return Ok(m.conjugate_at(x));
    }
    if let (true, Some(Oracle::ChordComposite(cc))) = (f.knots().is_empty(), f.oracle()) {
        return cc.conjugate_at(x);
    }
    sup_numeric(f, x)
}

enum Reach {
    Bracket(f64),
    Unbounded,
}

/// Numerical `sup_t (x t - f(t))` for a proper convex `f`.
fn sup_numeric(f: &ConvexFn, x: f64) -> Result<ExtReal> {
    let g = |t: f64| -> Result<f64> {
        Ok(match f.eval(t)? {
            ExtReal::Finite(v) => x * t - v,
            PosInf => f64::NEG_INFINITY,
            NegInf => f64::INFINITY,
        })
    };
    let (lo, hi) = (f.dom_lo(), f.dom_hi());
    let anchor = match (lo, hi) {
        (ExtReal::Finite(a), _) => a,
        (_, ExtReal::Finite(b)) => b,
        _ => {
            if f.in_domain(0.0) {
                0.0
            } else {
                f.knots().first().map_or(0.0, |k| k.0)
            }
        }
    };
    let reach = |dir: f64| -> Result<Reach> {
        let mut prev = g(anchor)?;
        for k in 0..=62 {
            let q = anchor + dir * 2f64.powi(k);
            let gq = g(q)?;
            if gq <= prev + 1e-12 * gq.abs().max(1.0) {
                return Ok(Reach::Bracket(q));
            }
            prev = gq;
        }
        Ok(Reach::Unbounded)
    };
    let a = match lo {
        ExtReal::Finite(a) => a,
        _ => match reach(-1.0)? {
            Reach::Bracket(a) => a,
            Reach::Unbounded => return Ok(PosInf),
        },
    };
    let b = match hi {
        ExtReal::Finite(b) => b,
        _ => match reach(1.0)? {
            Reach::Bracket(b) => b,
            Reach::Unbounded => return Ok(PosInf),
        },
    };
    let mut best = f64::NEG_INFINITY;
    if a == b {
        best = g(a)?;
    } else {
        let step = (b - a) / BRACKET_GRID as f64;
        let ts: Vec<f64> = (0..=BRACKET_GRID)
            .map(|i| {
                if i == BRACKET_GRID {
                    b
                } else {
                    a + step * i as f64
                }
            })
            .collect();
        let mut vals = Vec::with_capacity(ts.len());
        for &t in &ts {
            vals.push(g(t)?);
        }
        let (imax, vmax) =
            vals.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
                );
        best = best.max(vmax);
        let l = ts[imax.saturating_sub(1)];
        let r = ts[(imax + 1).min(ts.len() - 1)];
        best = best.max(golden_max(&g, l, r)?);
    }
    // A value jump at the left end is only seen through the right limit.
    if let ExtReal::Finite(a) = lo {
        if let ExtReal::Finite(v) = f.right_limit_value(a)? {
            best = best.max(x * a - v);
        }
    }
    ExtReal::new(best)
}

/// Maximum of a concave function on `[a, b]`.
pub(crate) fn golden_max(g: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    let mut best = g(a)?.max(g(b)?).max(gc).max(gd);
    for _ in 0..200 {
        if b - a <= 1e-13 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c)?;
            best = best.max(gc);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d)?;
            best = best.max(gd);
        }
    }
    Ok(best)
}

/// Conjugate of `f`: exact for knot-backed and chord-modified functions,
/// sampled on [`default_slope_grid`] otherwise.
pub fn conjugate(f: &ConvexFn) -> Result<ConjugateFn> {
    ensure_proper(f)?;
    let model = match (f.pwl_model(), f.oracle()) {
        (Some(m), _) => Some(m),
        (None, Some(Oracle::ChordComposite(cc))) if f.knots().is_empty() => Some(cc.skeleton()),
        _ => None,
    };
    match model {
        Some(m) => Ok(ConjugateFn {
            inner: m.conjugate().to_convex_fn()?,
            source_hash: f.fingerprint(),
            minus_inf_value: minus_inf_extension(f)?,
        }),
        None => conjugate_on_grid(f, &default_slope_grid(f)?),
    }
}

/// Piecewise-linear interpolation of `f*` through the finite values at
/// `slopes`; `+∞` outside the grid.
pub fn conjugate_on_grid(f: &ConvexFn, slopes: &[f64]) -> Result<ConjugateFn> {
    ensure_proper(f)?;
    let mut xs: Vec<f64> = slopes.iter().copied().filter(|x| x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut knots = Vec::with_capacity(xs.len());
    for x in xs {
        if let ExtReal::Finite(v) = conjugate_at(f, x.into())? {
            knots.push((x, v));
        }
    }
    if knots.is_empty() {
        return Err(Error::Domain(
            "conjugate is +inf on the whole slope grid".into(),
        ));
    }
    Ok(ConjugateFn {
        inner: ConvexFn::pwl(knots)?,
        source_hash: f.fingerprint(),
        minus_inf_value: minus_inf_extension(f)?,
    })
}

/// `DEFAULT_SLOPE_COUNT` uniform slopes between the right derivative near the
/// left end of the domain and the left derivative near the right end.
/// Infinite ends are replaced by `±16`, infinite slopes are re-probed
/// `1e-6 · span` inside the domain.
pub fn default_slope_grid(f: &ConvexFn) -> Result<Vec<f64>> {
    let lo = f.dom_lo().finite().unwrap_or(-FAR_END);
    let hi = f.dom_hi().finite().unwrap_or(FAR_END);
    let lo = lo.min(hi);
    let hi = hi.max(lo);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let mut s_lo = f.right_deriv(lo)?;
    if !s_lo.is_finite() {
        s_lo = f.right_deriv(lo + 1e-6 * span)?;
    }
    let mut s_hi = f.left_deriv(hi)?;
    if !s_hi.is_finite() {
        s_hi = f.left_deriv(hi - 1e-6 * span)?;
    }
    let (a, b) = match (s_lo, s_hi) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) if a < b => (a, b),
        (ExtReal::Finite(a), ExtReal::Finite(_)) => (a - 1.0, a + 1.0),
        _ => {
            return Err(Error::NoConvergence {
                t: lo,
                what: "infinite slope at the ends of the default slope grid",
            })
        }
    };
    let n = DEFAULT_SLOPE_COUNT;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct BiconjugatePoint {
    pub t: f64,
    pub value: ExtReal,
    pub biconjugate: ExtReal,
}

#[derive(Clone, Debug, Serialize)]
pub struct BiconjugateReport {
    pub points: Vec<BiconjugatePoint>,
    pub max_deviation: f64,
}

/// `max |f(t) - f**(t)|` over `grid`. The first conjugate uses
/// `slope_grid` when given and [`conjugate`] otherwise; the second is exact.
pub fn biconjugate_check(
    f: &ConvexFn,
    grid: &[f64],
    slope_grid: Option<&[f64]>,
) -> Result<BiconjugateReport> {
    let star = match slope_grid {
        Some(s) => conjugate_on_grid(f, s)?,
        None => conjugate(f)?,
    };
    let model = star
        .inner
        .pwl_model()
        .expect("conjugates are stored piecewise linear");
    let mut points = Vec::with_capacity(grid.len());
    let mut max_deviation: f64 = 0.0;
    for &t in grid {
        let value = f.eval(t)?;
        let biconjugate = model.conjugate_at(t);
        let dev = match (value, biconjugate) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
            (a, b) if a == b => 0.0,
            _ => f64::INFINITY,
        };
        max_deviation = max_deviation.max(dev);
        points.push(BiconjugatePoint {
            t,
            value,
            biconjugate,
        });
    }
    Ok(BiconjugateReport {
        points,
        max_deviation,
    })
}
