use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::target::{ps_limit_target_with, LimitTarget};
use crate::convex::{ConvexFn, PointCase};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::families::MeasureSequence;
use crate::legendre::conjugate_at;

pub const DEFAULT_N_GRID: [u64; 4] = [100, 1_000, 10_000, 100_000];
pub const DEFAULT_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    #[default]
    Open,
    Closed,
}

impl IntervalKind {
    pub fn is_closed(self) -> bool {
        self == IntervalKind::Closed
    }
}

/// Rule `n ↦ x_n` (or `y_n`), given `s = L'_r(λ+)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqRule {
    /// `x_n = s - n^{-1/2}` (or `-n` when `s = -∞`); `y_n = +∞`.
    #[default]
    Auto,
    /// `s + coef · n^{-power}`.
    SlopeOffset {
        coef: f64,
        power: f64,
    },
    /// `-n`.
    MinusN,
    Constant {
        value: ExtReal,
    },
}

impl SeqRule {
    fn x_at(self, s: ExtReal, n: u64) -> Result<ExtReal> {
        let nf = n as f64;
        match (self, s) {
            (SeqRule::Auto, NegInf) | (SeqRule::MinusN, _) => Ok((-nf).into()),
            (SeqRule::Auto, ExtReal::Finite(s)) => Ok((s - nf.powf(-0.5)).into()),
            (SeqRule::SlopeOffset { coef, power }, ExtReal::Finite(s)) => {
                Ok((s + coef * nf.powf(-power)).into())
            }
            (SeqRule::Constant { value }, _) => Ok(value),
            (rule, s) => Err(Error::BadParams(format!(
                "x rule {rule:?} undefined for slope {s}"
            ))),
        }
    }

    fn y_at(self, s: ExtReal, n: u64) -> Result<ExtReal> {
        match self {
            SeqRule::Auto => Ok(PosInf),
            other => other.x_at(s, n),
        }
    }

    fn check_x(self, s: ExtReal) -> Result<()> {
        let ok = match (self, s) {
            (SeqRule::Auto, _) => true,
            (SeqRule::MinusN, s) => s == NegInf,
            (SeqRule::SlopeOffset { power, .. }, ExtReal::Finite(_)) => power > 0.0,
            (SeqRule::Constant { value }, s) => value == s,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadParams(format!(
                "x rule {self:?} does not converge to {s}"
            )))
        }
    }

    fn check_y(self, s: ExtReal) -> Result<()> {
        let ok = match (self, s) {
            (SeqRule::Auto, _) => true,
            (SeqRule::Constant { value }, s) => value > s,
            (SeqRule::SlopeOffset { coef, power }, ExtReal::Finite(_)) => {
                power == 0.0 && coef > 0.0
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadParams(format!(
                "y rule {self:?} needs liminf y_n > {s}"
            )))
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub sequence: MeasureSequence,
    /// The claimed log-MGF limit.
    pub l: ConvexFn,
    pub lambda: f64,
    pub x_rule: SeqRule,
    pub y_rule: SeqRule,
    pub n_grid: Vec<u64>,
    pub interval: IntervalKind,
    pub tol: f64,
    /// When false the target formula is evaluated even in excluded cases.
    pub enforce_hypotheses: bool,
}

impl Scenario {
    /// Defaults: `L` from the sequence, `x_n`/`y_n` automatic, open
    /// intervals, `n ∈ {10², …, 10⁵}`, tolerance 0.05.
    pub fn new(sequence: MeasureSequence, lambda: f64) -> Result<Self> {
        let l = sequence.log_mgf_limit()?;
        Ok(Scenario {
            sequence,
            l,
            lambda,
            x_rule: SeqRule::Auto,
            y_rule: SeqRule::Auto,
            n_grid: DEFAULT_N_GRID.to_vec(),
            interval: IntervalKind::Open,
            tol: DEFAULT_TOL,
            enforce_hypotheses: true,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_n_grid(mut self, n_grid: Vec<u64>) -> Self {
        self.n_grid = n_grid;
        self
    }

    pub fn with_interval(mut self, interval: IntervalKind) -> Self {
        self.interval = interval;
        self
    }

    pub fn with_rules(mut self, x_rule: SeqRule, y_rule: SeqRule) -> Self {
        self.x_rule = x_rule;
        self.y_rule = y_rule;
        self
    }

    pub fn without_hypothesis_check(mut self) -> Self {
        self.enforce_hypotheses = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::BadParams(
                "n_grid must be non-empty and positive".into(),
            ));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadParams(
                "n_grid must be strictly increasing".into(),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::BadParams(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PerN {
    pub n: u64,
    pub c_n: f64,
    pub x_n: ExtReal,
    pub y_n: ExtReal,
    /// `c_n log μ_n(I_n)`.
    pub empirical: ExtReal,
    /// `L*(x_n)`.
    pub conjugate_at_x: ExtReal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub case: PointCase,
    pub lambda_tilde: Option<ExtReal>,
    /// `L'_r(λ+)`.
    pub slope: ExtReal,
    /// `L*(L'_r(λ+))`, or the extension `L*(-∞)`.
    pub conjugate_at_slope: ExtReal,
    pub target_via_conjugate: ExtReal,
    pub target_via_grid_inf: Option<ExtReal>,
    pub hypotheses_checked: bool,
    /// `x_n` left the domain of `L*` at the largest `n`; `L*(x_n)` is then
    /// not expected to converge to `L*(L'_r(λ+))`.
    pub x_below_conjugate_domain: bool,
    /// `L*(x_n)` at the largest `n`.
    pub conjugate_at_x_last: ExtReal,
    /// Top three empirical values agree within the tolerance.
    pub limit_stabilized: bool,
    /// Limit existence along the sequence is assumed, not certified.
    pub limit_existence_assumed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub family: String,
    pub lambda: f64,
    pub interval: IntervalKind,
    pub per_n: Vec<PerN>,
    pub extrapolated_limit: f64,
    pub extrapolation: String,
    /// Maximum over the top quartile of the grid.
    pub upper_limit: ExtReal,
    pub target: ExtReal,
    pub abs_error: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per `n`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "c_n", "x_n", "y_n", "empirical", "conjugate_at_x"])?;
        for r in &self.per_n {
            wr.write_record([
                r.n.to_string(),
                format!("{:e}", r.c_n),
                r.x_n.to_string(),
                r.y_n.to_string(),
                r.empirical.to_string(),
                r.conjugate_at_x.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Limit estimate from the last three points: a quadratic in `1/ln n`
/// evaluated at zero, kept only when the three values are monotone and the
/// correction stays within their spread; otherwise the last value.
pub fn extrapolate(ns: &[u64], vals: &[f64]) -> (f64, &'static str) {
    let k = vals.len();
    let last = vals[k - 1];
    if k < 3 || vals[k - 3..].iter().any(|v| !v.is_finite()) {
        return (last, "last_value");
    }
    let (e0, e1, e2) = (vals[k - 3], vals[k - 2], vals[k - 1]);
    let monotone = (e0 <= e1 && e1 <= e2) || (e0 >= e1 && e1 >= e2);
    if !monotone {
        return (last, "last_value");
    }
    let h: Vec<f64> = ns[k - 3..].iter().map(|&n| 1.0 / (n as f64).ln()).collect();
    let (h0, h1, h2) = (h[0], h[1], h[2]);
    let r = e0 * (h1 * h2) / ((h0 - h1) * (h0 - h2))
        + e1 * (h0 * h2) / ((h1 - h0) * (h1 - h2))
        + e2 * (h0 * h1) / ((h2 - h0) * (h2 - h1));
    if r.is_finite() && (r - e2).abs() <= (e2 - e0).abs() {
        (r, "richardson")
    } else {
        (last, "last_value")
    }
}

pub fn verify_theorem(s: &Scenario) -> Result<VerificationReport> {
    s.validate()?;
    let target: LimitTarget = ps_limit_target_with(&s.l, s.lambda, s.enforce_hypotheses)?;
    let slope = target.slope;
    s.x_rule.check_x(slope)?;
    s.y_rule.check_y(slope)?;
    let closed = s.interval.is_closed();
    let per_n: Vec<PerN> = s
        .n_grid
        .par_iter()
        .map(|&n| -> Result<PerN> {
            let x_n = s.x_rule.x_at(slope, n)?;
            let y_n = s.y_rule.y_at(slope, n)?;
            let empirical = s.sequence.log_prob(n, x_n, y_n, closed)?;
            let conjugate_at_x = conjugate_at(&s.l, x_n)?;
            Ok(PerN {
                n,
                c_n: s.sequence.scale(n)?,
                x_n,
                y_n,
                empirical,
                conjugate_at_x,
            })
        })
        .collect::<Result<_>>()?;

    let vals: Vec<f64> = per_n.iter().map(|r| r.empirical.to_f64()).collect();
    let (extrapolated_limit, how) = extrapolate(&s.n_grid, &vals);
    let tv = target.value.to_f64();
    let k = vals.len();
    if k >= 3 && vals[k - 3..].iter().all(|v| v.is_finite()) {
        let (d_first, d_last) = ((vals[k - 3] - tv).abs(), (vals[k - 1] - tv).abs());
        if d_last - d_first > s.tol {
            return Err(Error::NonMonotoneDivergence(format!(
                "distance to target grows from {d_first:.4} to {d_last:.4} over the top three n"
            )));
        }
    }
    let quartile = k.div_ceil(4).max(1);
    let upper_limit = per_n[k - quartile..]
        .iter()
        .map(|r| r.empirical)
        .max()
        .unwrap_or(NegInf);
    let top = &vals[k.saturating_sub(3)..];
    let spread = top.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - top.iter().cloned().fold(f64::INFINITY, f64::min);
    let abs_error = (extrapolated_limit - tv).abs();
    let abs_error = if abs_error.is_nan() {
        f64::INFINITY
    } else {
        abs_error
    };
    let last_x = per_n[k - 1].conjugate_at_x;
    let diagnostics = Diagnostics {
        case: target.case,
        lambda_tilde: target.lambda_tilde,
        slope,
        conjugate_at_slope: -target.via_conjugate,
        target_via_conjugate: target.via_conjugate,
        target_via_grid_inf: target.via_grid_inf,
        hypotheses_checked: target.hypotheses_checked,
        x_below_conjugate_domain: slope.is_finite() && last_x == PosInf,
        conjugate_at_x_last: last_x,
        limit_stabilized: spread <= s.tol,
        limit_existence_assumed: matches!(s.sequence, MeasureSequence::Custom(_)),
    };
    Ok(VerificationReport {
        family: s.sequence.kind().to_string(),
        lambda: s.lambda,
        interval: s.interval,
        per_n,
        extrapolated_limit,
        extrapolation: how.to_string(),
        upper_limit,
        target: target.value,
        abs_error,
        tolerance: s.tol,
        verdict: if abs_error <= s.tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{builtin_family, FamilySpec};

    #[test]
    fn gaussian_passes() {
        let g = builtin_family(&FamilySpec::GaussianMean { m: 0.0, sigma: 1.0 }).unwrap();
        let r = verify_theorem(&Scenario::new(g, 1.0).unwrap().with_tol(0.02)).unwrap();
        assert!(r.passed(), "{}", r.to_json().unwrap());
        assert!((r.target.to_f64() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn point_mass_degenerate() {
        let pm = builtin_family(&FamilySpec::PointMass { z: 0.0 }).unwrap();
        let s = Scenario::new(pm, 0.0)
            .unwrap()
            .with_rules(
                SeqRule::SlopeOffset {
                    coef: -1.0,
                    power: 1.0,
                },
                SeqRule::Constant { value: 1.0.into() },
            )
            .without_hypothesis_check();
        let r = verify_theorem(&s).unwrap();
        assert!(r.per_n.iter().all(|p| p.empirical == ExtReal::ZERO));
        assert_eq!(r.target, ExtReal::ZERO);
        assert!(r.passed());
        // the same scenario with the gate on is an affine ray
        let pm = builtin_family(&FamilySpec::PointMass { z: 0.0 }).unwrap();
        assert!(matches!(
            verify_theorem(&Scenario::new(pm, 0.0).unwrap()),
            Err(Error::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn extrapolation_rules() {
        let ns = [100, 1000, 10000];
        let (v, how) = extrapolate(&ns, &[1.0, 0.5, 0.8]);
        assert_eq!((v, how), (0.8, "last_value"));
        let (v, _) = extrapolate(&ns, &[0.3, 0.2, 0.1]);
        assert!((v - 0.1).abs() <= 0.2);
    }

    #[test]
    fn csv_has_one_row_per_n() {
        let g = builtin_family(&FamilySpec::GaussianMean { m: 0.0, sigma: 1.0 }).unwrap();
        let r = verify_theorem(&Scenario::new(g, 1.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + DEFAULT_N_GRID.len());
        assert!(text.starts_with("n,c_n,x_n,y_n,empirical,conjugate_at_x\n"));
    }
}
