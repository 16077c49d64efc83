use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::appendix::ChordComposite;
use crate::extreal::{ExtReal, PosInf};

/// Closed-form or caller-supplied evaluator for the parts of a [`ConvexFn`]
/// not covered by knots.
///
/// Oracles must be deterministic and free of side effects.
///
/// [`ConvexFn`]: super::ConvexFn
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Oracle {
    /// `a t² + b t + c`, convex for `a ≥ 0`.
    Quadratic {
        a: f64,
        b: f64,
        #[serde(default)]
        c: f64,
    },
    /// `a (e^{b t} - 1) + c t`, convex for `a ≥ 0`.
    Exp {
        a: f64,
        b: f64,
        #[serde(default)]
        c: f64,
    },
    /// `Σ cᵢ t^{pᵢ} + linear · t + jump · 1[t > 0]` on `t ≥ 0`.
    ///
    /// A negative `jump` models a function that is lower than its value at
    /// zero immediately to the right of zero.
    Power {
        terms: Vec<[f64; 2]>,
        #[serde(default)]
        linear: f64,
        #[serde(default)]
        jump: f64,
    },
    /// `log(1 - p + p e^t)`.
    LogBernoulli { p: f64 },
    /// Affine rays continuing the first / last knot.
    Linear {
        #[serde(default)]
        left_slope: Option<f64>,
        #[serde(default)]
        right_slope: Option<f64>,
    },
    /// The chord-modified function built from a strictly convex seed.
    ChordComposite(Arc<ChordComposite>),
    #[serde(skip)]
    Custom(CustomOracle),
}

#[derive(Clone)]
pub struct CustomOracle {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomOracle {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomOracle {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for CustomOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomOracle")
            .field("name", &self.name)
            .finish()
    }
}

impl Oracle {
    /// Value at `t`. `Linear` needs its anchor knots and is evaluated by the
    /// owning function instead; here it reports `+∞`.
    pub(crate) fn eval(&self, t: f64) -> ExtReal {
        match self {
            Oracle::Quadratic { a, b, c } => ExtReal::from((a * t + b) * t + c),
            Oracle::Exp { a, b, c } => ExtReal::from(a * (b * t).exp_m1() + c * t),
            Oracle::Power {
                terms,
                linear,
                jump,
            } => {
                if t < 0.0 {
                    return PosInf;
                }
                if t == 0.0 {
                    return ExtReal::ZERO;
                }
                let s: f64 = terms.iter().map(|[c, p]| c * t.powf(*p)).sum();
                ExtReal::from(s + linear * t + jump)
            }
            Oracle::LogBernoulli { p } => ExtReal::from(log_bernoulli(*p, t)),
            Oracle::Linear { .. } => PosInf,
            Oracle::ChordComposite(cc) => cc.eval(t),
            Oracle::Custom(c) => {
                let v = (c.f)(t);
                if v.is_nan() {
                    PosInf
                } else {
                    ExtReal::from(v)
                }
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Oracle::Quadratic { .. } => "quadratic",
            Oracle::Exp { .. } => "exp",
            Oracle::Power { .. } => "power",
            Oracle::LogBernoulli { .. } => "log_bernoulli",
            Oracle::Linear { .. } => "linear",
            Oracle::ChordComposite(_) => "chord_composite",
            Oracle::Custom(_) => "custom",
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        match self {
            Oracle::Quadratic { a, b, c } | Oracle::Exp { a, b, c } => {
                if ![a, b, c].iter().all(|v| v.is_finite()) {
                    return Err("oracle parameters must be finite".into());
                }
                if *a < 0.0 {
                    return Err(format!("{} oracle is concave for a < 0", self.kind()));
                }
            }
            Oracle::Power {
                terms,
                linear,
                jump,
            } => {
                if !linear.is_finite() || !jump.is_finite() {
                    return Err("power oracle parameters must be finite".into());
                }
                if *jump > 0.0 {
                    return Err("a positive jump at zero breaks convexity".into());
                }
                for [c, p] in terms {
                    let convex = (*c >= 0.0 && *p >= 1.0) || (*c <= 0.0 && *p > 0.0 && *p <= 1.0);
                    if !convex || !c.is_finite() || !p.is_finite() {
                        return Err(format!("term {c} t^{p} is not convex on t >= 0"));
                    }
                }
            }
            Oracle::LogBernoulli { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(format!("bernoulli parameter {p} outside (0, 1)"));
                }
            }
            Oracle::Linear {
                left_slope,
                right_slope,
            } => {
                if let (Some(l), Some(r)) = (left_slope, right_slope) {
                    if l > r {
                        return Err("left ray steeper than right ray".into());
                    }
                }
            }
            Oracle::ChordComposite(_) | Oracle::Custom(_) => {}
        }
        Ok(())
    }
}

/// `log(1 - p + p e^t)` without overflow for large `|t|`.
pub(crate) fn log_bernoulli(p: f64, t: f64) -> f64 {
    if t > 0.0 {
        t + (p + (1.0 - p) * (-t).exp()).ln()
    } else {
        (p * t.exp_m1()).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let o = Oracle::Quadratic {
            a: 0.5,
            b: 0.0,
            c: 0.0,
        };
        let s = serde_json::to_string(&o).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"quadratic","params":{"a":0.5,"b":0.0,"c":0.0}}"#
        );
        let back: Oracle =
            serde_json::from_str(r#"{"kind":"exp","params":{"a":1,"b":1}}"#).unwrap();
        assert_eq!(back.eval(0.0), ExtReal::ZERO);
    }

    #[test]
    fn custom_oracles_do_not_serialize() {
        let o = Oracle::Custom(CustomOracle::new("sq", |t| t * t));
        assert!(serde_json::to_string(&o).is_err());
    }

    #[test]
    fn power_with_jump() {
        let o = Oracle::Power {
            terms: vec![[-1.0, 0.5]],
            linear: 1.0,
            jump: -1.0,
        };
        assert!(o.validate().is_ok());
        assert_eq!(o.eval(0.0), ExtReal::ZERO);
        assert!((o.eval(1e-12).to_f64() + 1.0).abs() < 1e-5);
        assert_eq!(o.eval(-1.0), PosInf);
    }

    #[test]
    fn log_bernoulli_is_stable() {
        assert_eq!(log_bernoulli(0.5, 0.0), 0.0);
        assert!((log_bernoulli(0.5, 800.0) - (800.0 + 0.5f64.ln())).abs() < 1e-9);
        assert!((log_bernoulli(0.5, -800.0) - 0.5f64.ln()).abs() < 1e-12);
    }
}
