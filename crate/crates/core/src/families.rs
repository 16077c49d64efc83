//! Measure sequences `n ↦ (μ_n, c_n)`: the chord-modified atomic sequence
//! and closed-form parametric families.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::appendix::{build_lf, build_measure, SeedSpec};
use crate::convex::{ConvexFn, Oracle};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::legendre::{conjugate, ConjugateFn};
use crate::measure::{logsumexp, AtomicMeasure};

/// Parametric description of a sequence, as found in configs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Law of the mean of `n` i.i.d. `N(m, σ²)` variables.
    GaussianMean {
        m: f64,
        sigma: f64,
    },
    /// Law of the mean of `n` i.i.d. Bernoulli(`p`) variables.
    BernoulliMean {
        p: f64,
    },
    PointMass {
        z: f64,
    },
    Appendix(SeedSpec),
}

pub type MeasureFn = dyn Fn(u64) -> Result<AtomicMeasure> + Send + Sync;

/// Caller-supplied atomic sequence; `c_n` is the scale carried by each
/// measure.
#[derive(Clone)]
pub struct CustomSequence {
    pub name: String,
    pub measure: Arc<MeasureFn>,
    pub log_mgf_limit: Option<ConvexFn>,
}

impl fmt::Debug for CustomSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSequence")
            .field("name", &self.name)
            .finish()
    }
}

/// Chord-modified sequence; measures are cached per `n`.
#[derive(Debug)]
pub struct AppendixSequence {
    pub seed: SeedSpec,
    pub lf: ConvexFn,
    pub lf_star: ConjugateFn,
    cache: Mutex<HashMap<u64, Arc<AtomicMeasure>>>,
}

impl AppendixSequence {
    pub fn new(seed: SeedSpec) -> Result<Self> {
        let lf = build_lf(&seed)?;
        let lf_star = conjugate(&lf)?;
        Ok(AppendixSequence {
            seed,
            lf,
            lf_star,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn measure(&self, n: u64) -> Result<Arc<AtomicMeasure>> {
        if let Some(m) = self.cache.lock().expect("cache poisoned").get(&n) {
            return Ok(m.clone());
        }
        let m = Arc::new(build_measure(&self.lf_star, n as usize)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(n, m.clone());
        Ok(m)
    }
}

#[derive(Clone, Debug)]
pub enum MeasureSequence {
    GaussianMean { m: f64, sigma: f64 },
    BernoulliMean { p: f64 },
    PointMass { z: f64 },
    Appendix(Arc<AppendixSequence>),
    Custom(CustomSequence),
}

/// Sequence for a [`FamilySpec`], with parameter validation.
pub fn builtin_family(spec: &FamilySpec) -> Result<MeasureSequence> {
    match *spec {
        FamilySpec::GaussianMean { m, sigma } => {
            if !m.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::BadParams(format!(
                    "gaussian_mean needs finite m and sigma > 0, got {m}, {sigma}"
                )));
            }
            Ok(MeasureSequence::GaussianMean { m, sigma })
        }
        FamilySpec::BernoulliMean { p } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::BadParams(format!(
                    "bernoulli_mean needs p in (0, 1), got {p}"
                )));
            }
            Ok(MeasureSequence::BernoulliMean { p })
        }
        FamilySpec::PointMass { z } => {
            if !z.is_finite() {
                return Err(Error::BadParams("point_mass needs a finite atom".into()));
            }
            Ok(MeasureSequence::PointMass { z })
        }
        FamilySpec::Appendix(ref seed) => Ok(MeasureSequence::Appendix(Arc::new(
            AppendixSequence::new(seed.clone())?,
        ))),
    }
}

impl MeasureSequence {
    pub fn kind(&self) -> &'static str {
        match self {
            MeasureSequence::GaussianMean { .. } => "gaussian_mean",
            MeasureSequence::BernoulliMean { .. } => "bernoulli_mean",
            MeasureSequence::PointMass { .. } => "point_mass",
            MeasureSequence::Appendix(_) => "appendix",
            MeasureSequence::Custom(_) => "custom",
        }
    }

    /// `c_n`; `1/n` except for custom sequences, which carry their own.
    pub fn scale(&self, n: u64) -> Result<f64> {
        match self {
            MeasureSequence::Custom(c) => Ok((c.measure)(n)?.scale()),
            _ => Ok(1.0 / n as f64),
        }
    }

    /// The limiting log-MGF `L`.
    pub fn log_mgf_limit(&self) -> Result<ConvexFn> {
        match self {
            MeasureSequence::GaussianMean { m, sigma } => ConvexFn::from_oracle(
                NegInf,
                PosInf,
                Oracle::Quadratic {
                    a: sigma * sigma / 2.0,
                    b: *m,
                    c: 0.0,
                },
            ),
            MeasureSequence::BernoulliMean { p } => {
                ConvexFn::from_oracle(NegInf, PosInf, Oracle::LogBernoulli { p: *p })
            }
            MeasureSequence::PointMass { z } => {
                ConvexFn::pwl_with_rays(vec![(0.0, 0.0)], Some(*z), Some(*z))
            }
            MeasureSequence::Appendix(a) => Ok(a.lf.clone()),
            MeasureSequence::Custom(c) => c.log_mgf_limit.clone().ok_or_else(|| {
                Error::BadParams(format!("custom sequence {} has no log-MGF limit", c.name))
            }),
        }
    }

    /// The atomic measure `μ_n`, for atomic sequences.
    pub fn atomic(&self, n: u64) -> Result<Option<Arc<AtomicMeasure>>> {
        match self {
            MeasureSequence::Appendix(a) => a.measure(n).map(Some),
            MeasureSequence::Custom(c) => Ok(Some(Arc::new((c.measure)(n)?))),
            MeasureSequence::PointMass { z } => Ok(Some(Arc::new(AtomicMeasure::point_mass(
                *z,
                1.0 / n as f64,
            )?))),
            _ => Ok(None),
        }
    }

    /// `c_n log μ_n(I)` with `I = [x, y]` or `]x, y[`.
    pub fn log_prob(&self, n: u64, x: ExtReal, y: ExtReal, closed: bool) -> Result<ExtReal> {
        if n == 0 {
            return Err(Error::BadParams("n must be at least 1".into()));
        }
        let nf = n as f64;
        match self {
            MeasureSequence::GaussianMean { m, sigma } => {
                let s = nf.sqrt() / sigma;
                let std = |v: ExtReal| match v {
                    ExtReal::Finite(v) => ExtReal::from((v - m) * s),
                    other => other,
                };
                Ok(ExtReal::from(log_normal_interval(std(x), std(y)) / nf))
            }
            MeasureSequence::BernoulliMean { p } => Ok(ExtReal::from(
                log_binomial_interval(n, *p, x, y, closed) / nf,
            )),
            _ => {
                let mu = self.atomic(n)?.expect("atomic sequence");
                Ok(mu.interval_log_prob(x, y, closed))
            }
        }
    }

    /// `c_n log ∫ e^{t z / c_n} μ_n(dz)`.
    pub fn log_mgf(&self, n: u64, t: f64) -> Result<f64> {
        match self {
            MeasureSequence::GaussianMean { m, sigma } => Ok(m * t + sigma * sigma * t * t / 2.0),
            MeasureSequence::BernoulliMean { p } => Ok(crate::convex::log_bernoulli(*p, t)),
            _ => Ok(self.atomic(n)?.expect("atomic sequence").log_mgf(t)),
        }
    }
}

/// `log Q(x)` with `Q` the standard normal upper tail.
pub fn log_normal_tail(x: f64) -> f64 {
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x < 0.0 {
        return (-0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln_1p();
    }
    if x < 8.0 {
        return (0.5 * erfc(x / std::f64::consts::SQRT_2)).ln();
    }
    // Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + …))))
    let mut cf = x;
    for k in (1..=80).rev() {
        cf = x + k as f64 / cf;
    }
    -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln() - cf.ln()
}

/// `log P(a ≤ Z ≤ b)` for a standard normal `Z`.
pub fn log_normal_interval(a: ExtReal, b: ExtReal) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    let (a, b) = (a.to_f64(), b.to_f64());
    // differences of upper tails stay accurate far out
    let (a, b) = if a >= 0.0 {
        (a, b)
    } else if b <= 0.0 {
        (-b, -a)
    } else {
        let q = log_normal_tail(-a).exp() + log_normal_tail(b).exp();
        return (-q).ln_1p();
    };
    let la = log_normal_tail(a);
    let lb = log_normal_tail(b);
    la + (-(lb - la).exp()).ln_1p()
}

/// `log P(x ≤ S/n ≤ y)` (or strict) for `S ~ Bin(n, p)`.
pub fn log_binomial_interval(n: u64, p: f64, x: ExtReal, y: ExtReal, closed: bool) -> f64 {
    let nf = n as f64;
    let inside = |k: u64| {
        let r = ExtReal::from(k as f64 / nf);
        if closed {
            x <= r && r <= y
        } else {
            x < r && r < y
        }
    };
    let bound = |v: ExtReal, up: bool| match v {
        NegInf => 0,
        PosInf => n,
        ExtReal::Finite(v) => {
            let k = if up {
                (v * nf).ceil() + 1.0
            } else {
                (v * nf).floor() - 1.0
            };
            k.clamp(0.0, nf) as u64
        }
    };
    let (lo, hi) = (bound(x, false), bound(y, true));
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let lnf = ln_gamma(nf + 1.0);
    let terms = (lo..=hi).filter(|&k| inside(k)).map(|k| {
        let kf = k as f64;
        lnf - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + kf * lp + (nf - kf) * lq
    });
    let v: Vec<f64> = terms.collect();
    logsumexp(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tail_matches_erfc_and_asymptotics() {
        for x in [-3.0, 0.0, 1.0, 5.0, 7.9] {
            let direct = (0.5 * erfc(x / std::f64::consts::SQRT_2)).ln();
            assert!((log_normal_tail(x) - direct).abs() < 1e-10, "x = {x}");
        }
        // continuity at the switch and Mills ratio far out
        let a = (0.5 * erfc(8.0 / std::f64::consts::SQRT_2)).ln();
        assert!((log_normal_tail(8.0) - a).abs() < 1e-10);
        let x = 300.0f64;
        let approx = -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((log_normal_tail(x) - approx).abs() < 1e-4);
    }

    #[test]
    fn gaussian_interval_probabilities() {
        let g = builtin_family(&FamilySpec::GaussianMean { m: 0.0, sigma: 1.0 }).unwrap();
        assert_eq!(
            g.log_mgf_limit().unwrap().eval(1.0).unwrap(),
            ExtReal::from(0.5)
        );
        let full = g.log_prob(10, NegInf, PosInf, true).unwrap().to_f64();
        assert!(full.abs() < 1e-15);
        // P(Z in [0, 1]) for n = 1
        let v = g
            .log_prob(1, 0.0.into(), 1.0.into(), true)
            .unwrap()
            .to_f64();
        assert!((v - 0.341_344_746_068_542_9f64.ln()).abs() < 1e-9, "{v}");
        let neg = g
            .log_prob(1, (-1.0).into(), 0.0.into(), true)
            .unwrap()
            .to_f64();
        assert!((neg - v).abs() < 1e-12);
        let mid = g
            .log_prob(1, (-1.0).into(), 2.0.into(), true)
            .unwrap()
            .to_f64();
        assert!(
            (mid - 0.818_594_614_120_581_6f64.ln()).abs() < 1e-9,
            "{mid}"
        );
        // large deviation tail at n = 1e5
        let t = g
            .log_prob(100_000, 1.0.into(), PosInf, false)
            .unwrap()
            .to_f64();
        assert!((t + 0.5).abs() < 1e-3, "{t}");
    }

    #[test]
    fn bernoulli_sums() {
        let b = builtin_family(&FamilySpec::BernoulliMean { p: 0.5 }).unwrap();
        let l = b.log_mgf_limit().unwrap();
        assert_eq!(l.eval(0.0).unwrap(), ExtReal::ZERO);
        let t = 0.7f64;
        assert!((l.eval(t).unwrap().to_f64() - ((1.0 + t.exp()) / 2.0).ln()).abs() < 1e-15);
        // n = 4: P(S/4 in [0.5, 0.75]) = (6 + 4)/16
        let v = b
            .log_prob(4, 0.5.into(), 0.75.into(), true)
            .unwrap()
            .to_f64()
            * 4.0;
        assert!((v - (10.0f64 / 16.0).ln()).abs() < 1e-12, "{v}");
        let open = b.log_prob(4, 0.5.into(), 0.75.into(), false).unwrap();
        assert_eq!(open, NegInf);
        let full = b.log_prob(7, NegInf, PosInf, true).unwrap().to_f64();
        assert!(full.abs() < 1e-12);
    }

    #[test]
    fn point_mass_family() {
        let pm = builtin_family(&FamilySpec::PointMass { z: 2.0 }).unwrap();
        for n in [1, 10, 1000] {
            assert_eq!(
                pm.log_prob(n, 1.0.into(), 3.0.into(), true).unwrap(),
                ExtReal::ZERO
            );
            assert_eq!(
                pm.log_prob(n, 2.5.into(), 3.0.into(), true).unwrap(),
                NegInf
            );
        }
        assert_eq!(
            pm.log_mgf_limit().unwrap().eval(1.5).unwrap(),
            ExtReal::from(3.0)
        );
    }

    #[test]
    fn bad_params() {
        assert!(matches!(
            builtin_family(&FamilySpec::GaussianMean { m: 0.0, sigma: 0.0 }),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(
            builtin_family(&FamilySpec::BernoulliMean { p: 1.0 }),
            Err(Error::BadParams(_))
        ));
    }
}
