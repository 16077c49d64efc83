//! Chord-modified log-MGFs built from a strictly convex seed, dense
//! enumerations of the conjugate's domain, and the atomic measures whose
//! scaled log-MGFs converge to the modified function.
//!
//! Given a seed `f` with `f(0) = 0`, `λ ≥ 0`, `ε > 0` and `λᵢ ↓ λ` with
//! `λ₀ = λ + ε`, the modified function `L_f` is the chord from `(0, 0)` to
//! `(λ, f(λ))` on `[0, λ]`, the chord between `(λᵢ₊₁, f(λᵢ₊₁))` and
//! `(λᵢ, f(λᵢ))` on each `[λᵢ₊₁, λᵢ]`, `f` itself on the unresolved tail
//! `[λ, λ_depth]`, and `+∞` off `[0, λ + ε]`.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convex::pwl::PwlModel;
use crate::convex::{ConvexFn, Oracle};
use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::legendre::{golden_max, ConjugateFn};
use crate::measure::{logsumexp, AtomicMeasure};

pub const DEFAULT_DEPTH: usize = 24;
/// Grid used for the strict-convexity check of a seed.
const CONVEXITY_SAMPLES: usize = 64;
/// Finest level of geometric sub-knots placed on the unresolved tail when
/// conjugating.
const TAIL_LEVELS: i32 = 40;

/// How the decreasing sequence `λᵢ ↓ λ` is generated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChordRule {
    /// `λᵢ = λ + ε 2^-i`.
    #[default]
    Geometric,
    /// `λ₁, λ₂, …` given explicitly; `depth` is ignored.
    Explicit { lambdas: Vec<f64> },
}

fn default_depth() -> usize {
    DEFAULT_DEPTH
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedSpec {
    pub f: ConvexFn,
    pub lambda: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub chord_seq: ChordRule,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

impl SeedSpec {
    pub fn new(f: ConvexFn, lambda: f64, epsilon: f64) -> Self {
        SeedSpec {
            f,
            lambda,
            epsilon,
            chord_seq: ChordRule::Geometric,
            depth: DEFAULT_DEPTH,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    /// `λ₀ = λ + ε, λ₁, …, λ_depth`, strictly decreasing inside `]λ, λ + ε]`.
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        let (lam, eps) = (self.lambda, self.epsilon);
        let mut out = vec![lam + eps];
        match &self.chord_seq {
            ChordRule::Geometric => {
                if self.depth == 0 {
                    return Err(Error::BadChordSeq("depth must be at least 1".into()));
                }
                out.extend((1..=self.depth).map(|i| lam + eps * 2f64.powi(-(i as i32))));
            }
            ChordRule::Explicit { lambdas } => {
                if lambdas.is_empty() {
                    return Err(Error::BadChordSeq("empty explicit sequence".into()));
                }
                out.extend(lambdas.iter().copied());
            }
        }
        for w in out.windows(2) {
            if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less) {
                return Err(Error::BadChordSeq(format!(
                    "{} does not decrease to {}",
                    w[0], w[1]
                )));
            }
        }
        if out.iter().skip(1).any(|&l| !(l > lam && l < lam + eps)) {
            return Err(Error::BadChordSeq(format!(
                "points must lie in ]{lam}, {}[",
                lam + eps
            )));
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let (lam, eps) = (self.lambda, self.epsilon);
        if !(lam >= 0.0 && lam.is_finite()) || !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::BadParams(format!(
                "need lambda >= 0 and epsilon > 0, got {lam}, {eps}"
            )));
        }
        if self.f.is_improper() {
            return Err(Error::ImproperInput);
        }
        let f0 = self.f.eval(0.0)?;
        if f0 != ExtReal::ZERO {
            return Err(Error::InvalidFunction(format!(
                "seed must vanish at 0, got {f0}"
            )));
        }
        let hi = lam + eps;
        let n = CONVEXITY_SAMPLES;
        let ts: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
        let mut vs = Vec::with_capacity(ts.len());
        for &t in &ts {
            match self.f.eval(t)? {
                ExtReal::Finite(v) => vs.push(v),
                other => {
                    return Err(Error::InvalidFunction(format!(
                        "seed is {other} at t = {t}"
                    )))
                }
            }
        }
        for i in 1..n {
            if vs[i - 1] + vs[i + 1] - 2.0 * vs[i] <= 0.0 {
                return Err(Error::NotStrictlyConvex(ts[i]));
            }
        }
        Ok(())
    }
}

/// Exact evaluator of the chord-modified function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SeedSpec", into = "SeedSpec")]
pub struct ChordComposite {
    spec: SeedSpec,
    /// `λ₀ > λ₁ > … > λ_depth`.
    lambdas: Vec<f64>,
    /// Seed values at `lambdas`.
    values: Vec<f64>,
    f_lambda: f64,
}

impl TryFrom<SeedSpec> for ChordComposite {
    type Error = Error;
    fn try_from(spec: SeedSpec) -> Result<Self> {
        spec.validate()?;
        let lambdas = spec.lambdas()?;
        let finite = |t: f64| -> Result<f64> {
            spec.f
                .eval(t)?
                .finite()
                .ok_or_else(|| Error::InvalidFunction(format!("seed not finite at {t}")))
        };
        let values = lambdas
            .iter()
            .map(|&t| finite(t))
            .collect::<Result<Vec<_>>>()?;
        let f_lambda = finite(spec.lambda)?;
        Ok(ChordComposite {
            spec,
            lambdas,
            values,
            f_lambda,
        })
    }
}

impl From<ChordComposite> for SeedSpec {
    fn from(c: ChordComposite) -> SeedSpec {
        c.spec
    }
}

impl ChordComposite {
    pub fn spec(&self) -> &SeedSpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    fn hi(&self) -> f64 {
        self.lambdas[0]
    }

    fn tail_end(&self) -> f64 {
        self.lambdas[self.lambdas.len() - 1]
    }

    /// Slope of the chord `D` on `[0, λ]`; `None` when `λ = 0`.
    pub fn chord_d_slope(&self) -> Option<f64> {
        (self.spec.lambda > 0.0).then(|| self.f_lambda / self.spec.lambda)
    }

    /// Slope of the chord `Dᵢ` on `[λᵢ₊₁, λᵢ]`.
    pub fn chord_slope(&self, i: usize) -> f64 {
        let (a, b) = (self.lambdas[i + 1], self.lambdas[i]);
        (self.values[i] - self.values[i + 1]) / (b - a)
    }

    pub fn eval(&self, t: f64) -> ExtReal {
        if t < 0.0 || t > self.hi() {
            return PosInf;
        }
        let lam = self.spec.lambda;
        if t <= lam {
            return match self.chord_d_slope() {
                Some(s) => (s * t).into(),
                None => ExtReal::ZERO,
            };
        }
        if t <= self.tail_end() {
            return self.spec.f.eval(t).unwrap_or(PosInf);
        }
        let i = self.lambdas.partition_point(|&l| l >= t) - 1;
        let (a, b) = (self.lambdas[i + 1], self.lambdas[i]);
        let (va, vb) = (self.values[i + 1], self.values[i]);
        if t == b {
            return vb.into();
        }
        (va + (vb - va) * (t - a) / (b - a)).into()
    }

    pub fn right_deriv(&self, t: f64) -> Result<ExtReal> {
        if t < 0.0 {
            return Ok(NegInf);
        }
        if t >= self.hi() {
            return Ok(PosInf);
        }
        let lam = self.spec.lambda;
        if t < lam {
            return Ok(self.chord_d_slope().map_or(PosInf, ExtReal::from));
        }
        if t < self.tail_end() {
            return self.spec.f.right_deriv(t);
        }
        let i = self.lambdas.partition_point(|&l| l > t) - 1;
        Ok(self.chord_slope(i).into())
    }

    pub fn left_deriv(&self, t: f64) -> Result<ExtReal> {
        if t <= 0.0 {
            return Ok(NegInf);
        }
        if t > self.hi() {
            return Ok(PosInf);
        }
        let lam = self.spec.lambda;
        if t <= lam {
            return Ok(self.chord_d_slope().map_or(NegInf, ExtReal::from));
        }
        if t <= self.tail_end() {
            return self.spec.f.left_deriv(t);
        }
        let i = self.lambdas.partition_point(|&l| l >= t) - 1;
        Ok(self.chord_slope(i).into())
    }

    /// Piecewise-linear skeleton: the chord vertices plus geometric
    /// sub-knots on the tail `[λ, λ_depth]`.
    pub(crate) fn skeleton(&self) -> PwlModel {
        let lam = self.spec.lambda;
        let tail = self.tail_end() - lam;
        let mut pts = vec![(0.0, 0.0), (lam, self.f_lambda)];
        for j in (1..=TAIL_LEVELS).rev() {
            let t = lam + tail * 2f64.powi(-j);
            if let ExtReal::Finite(v) = self.spec.f.eval(t).unwrap_or(PosInf) {
                pts.push((t, v));
            }
        }
        for (t, v) in self.lambdas.iter().zip(&self.values).rev() {
            pts.push((*t, *v));
        }
        PwlModel {
            vertices: PwlModel::strictly_convex_vertices(&pts, 1e-12),
            left_slope: None,
            right_slope: None,
        }
    }

    /// `sup_t (x t - L_f(t))`: the chord parts are maximised at their
    /// vertices, the tail by golden-section search on the seed.
    pub fn conjugate_at(&self, x: f64) -> Result<ExtReal> {
        let mut best = f64::NEG_INFINITY;
        best = best.max(0.0).max(x * self.spec.lambda - self.f_lambda);
        for (t, v) in self.lambdas.iter().zip(&self.values) {
            best = best.max(x * t - v);
        }
        let (a, b) = (self.spec.lambda, self.tail_end());
        let g = |t: f64| -> Result<f64> {
            Ok(match self.spec.f.eval(t)? {
                ExtReal::Finite(v) => x * t - v,
                _ => f64::NEG_INFINITY,
            })
        };
        best = best.max(golden_max(&g, a, b)?);
        ExtReal::new(best)
    }
}

/// `L_f` as a [`ConvexFn`] on `[0, λ + ε]`.
pub fn build_lf(seed: &SeedSpec) -> Result<ConvexFn> {
    let cc = ChordComposite::try_from(seed.clone())?;
    let hi = cc.hi();
    ConvexFn::from_oracle(
        ExtReal::ZERO,
        hi.into(),
        Oracle::ChordComposite(Arc::new(cc)),
    )
}

/// First `n` points of the windowed dyadic enumeration of `[lo, hi]`.
///
/// Bounded domains list `lo, hi` and then, level by level, the odd dyadic
/// points `lo + j (hi - lo) 2^-m`. A half-line `[lo, ∞)` uses the window
/// `[lo, lo + m + 1]` with mesh `2^-m` at level `m`, listing the points not
/// seen at earlier levels in increasing order; `(-∞, hi]` is its mirror
/// image, and the whole line uses `[-(m + 1), m + 1]` with mesh `2^(1-m)`.
/// A one-point domain yields that single point.
pub fn dense_points(lo: ExtReal, hi: ExtReal, n: usize) -> Result<Vec<f64>> {
    if lo > hi || lo == PosInf || hi == NegInf {
        return Err(Error::EmptyDomain);
    }
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    match (lo, hi) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => {
            out.push(a);
            if a == b {
                return Ok(out);
            }
            out.push(b);
            let mut m = 1;
            while out.len() < n {
                let step = (b - a) * 2f64.powi(-m);
                let count = 1u64 << m;
                for j in (1..count).step_by(2) {
                    if out.len() >= n {
                        break;
                    }
                    out.push(a + step * j as f64);
                }
                m += 1;
            }
        }
        (ExtReal::Finite(a), PosInf) => half_line(n, |p| a + p, &mut out),
        (NegInf, ExtReal::Finite(b)) => half_line(n, |p| b - p, &mut out),
        _ => {
            let mut seen = HashSet::new();
            let mut m: i32 = 0;
            while out.len() < n {
                let w = (m + 1) as f64;
                let mesh = 2f64.powi(1 - m);
                let count = (2.0 * w / mesh).round() as u64;
                for k in 0..=count {
                    if out.len() >= n {
                        break;
                    }
                    let p = -w + mesh * k as f64;
                    if seen.insert(p.to_bits()) {
                        out.push(p);
                    }
                }
                m += 1;
            }
        }
    }
    out.truncate(n);
    Ok(out)
}

/// Offsets `p ≥ 0` enumerated by the half-line rule, mapped through `place`.
fn half_line(n: usize, place: impl Fn(f64) -> f64, out: &mut Vec<f64>) {
    let mut seen = HashSet::new();
    let mut m: i32 = 0;
    while out.len() < n {
        let mesh = 2f64.powi(-m);
        let count = ((m + 1) as u64) << m;
        for k in 0..=count {
            if out.len() >= n {
                break;
            }
            let p = mesh * k as f64;
            if seen.insert(p.to_bits()) {
                out.push(place(p));
            }
        }
        m += 1;
    }
}

/// First `n` points of the dense enumeration of `dom lf_star`.
pub fn enumerate_dense(lf_star: &ConjugateFn, n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = lf_star.domain();
    dense_points(lo, hi, n)
}

/// The normalised atomic measure with weights `e^{-n L*(z_k)}` on the first
/// `n` enumerated points, at scale `1/n`.
pub fn build_measure(lf_star: &ConjugateFn, n: usize) -> Result<AtomicMeasure> {
    if n == 0 {
        return Err(Error::BadParams("n must be at least 1".into()));
    }
    let zs = enumerate_dense(lf_star, n)?;
    build_measure_on(lf_star, &zs, n)
}

/// Same as [`build_measure`] on caller-supplied atoms.
pub fn build_measure_on(lf_star: &ConjugateFn, zs: &[f64], n: usize) -> Result<AtomicMeasure> {
    let nf = n as f64;
    let mut atoms = Vec::with_capacity(zs.len());
    for &z in zs {
        if let ExtReal::Finite(v) = lf_star.eval(z.into())? {
            atoms.push((z, -nf * v));
        }
    }
    if atoms.is_empty() {
        return Err(Error::AllWeightsInfinite);
    }
    let lse = logsumexp(atoms.iter().map(|a| a.1));
    for a in &mut atoms {
        a.1 -= lse;
    }
    AtomicMeasure::new(atoms, 1.0 / nf, Some(n as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::conjugate;

    fn square_seed(depth: usize) -> SeedSpec {
        let f = ConvexFn::from_oracle(
            ExtReal::ZERO,
            PosInf,
            Oracle::Quadratic {
                a: 1.0,
                b: 0.0,
                c: 0.0,
            },
        )
        .unwrap();
        SeedSpec::new(f, 1.0, 1.0).with_depth(depth)
    }

    #[test]
    fn chord_values() {
        let lf = build_lf(&square_seed(8)).unwrap();
        assert_eq!(lf.eval(0.5).unwrap(), ExtReal::from(0.5));
        assert_eq!(lf.eval(1.25).unwrap(), ExtReal::from(1.5625));
        assert_eq!(lf.eval(2.5).unwrap(), PosInf);
        assert_eq!(lf.eval(-0.1).unwrap(), PosInf);
        // on [1.5, 2] the chord of t^2 is 3.5 t - 3
        assert!((lf.eval(1.75).unwrap().to_f64() - 3.125).abs() < 1e-12);
    }

    #[test]
    fn one_sided_slopes_at_lambda() {
        let lf = build_lf(&square_seed(8)).unwrap();
        assert_eq!(lf.left_deriv(1.0).unwrap(), ExtReal::from(1.0));
        let r = lf.right_deriv(1.0).unwrap().to_f64();
        assert!((r - 2.0).abs() < 2f64.powi(-7), "{r}");
        assert_eq!(lf.right_deriv_limit(0.0).unwrap(), ExtReal::from(1.0));
        let lim = lf.right_deriv_limit(1.0).unwrap().to_f64();
        assert!((lim - 2.0).abs() < 1e-6, "{lim}");
    }

    #[test]
    fn kinks_at_every_lambda_i() {
        let seed = square_seed(12);
        let lf = build_lf(&seed).unwrap();
        for &l in &seed.lambdas().unwrap()[1..12] {
            let jump = lf.right_deriv(l).unwrap().to_f64() - lf.left_deriv(l).unwrap().to_f64();
            assert!(jump > 0.0, "no kink at {l}");
        }
    }

    #[test]
    fn lambda_tilde_is_lambda() {
        let lf = build_lf(&square_seed(24)).unwrap();
        assert_eq!(
            lf.classify_point(1.0).unwrap(),
            crate::convex::PointCase::LimitPoint
        );
        assert_eq!(lf.lambda_tilde(1.0).unwrap(), ExtReal::from(1.0));
        assert_eq!(
            lf.classify_point(0.5).unwrap(),
            crate::convex::PointCase::AffineThenKink
        );
    }

    #[test]
    fn bad_seeds() {
        let lin = ConvexFn::pwl(vec![(0.0, 0.0), (3.0, 3.0)]).unwrap();
        assert!(matches!(
            build_lf(&SeedSpec::new(lin, 1.0, 1.0)),
            Err(Error::NotStrictlyConvex(_))
        ));
        let mut s = square_seed(4);
        s.chord_seq = ChordRule::Explicit {
            lambdas: vec![1.5, 1.7],
        };
        assert!(matches!(build_lf(&s), Err(Error::BadChordSeq(_))));
    }

    #[test]
    fn dyadic_enumeration() {
        let d = |lo: f64, hi: ExtReal, n| dense_points(lo.into(), hi, n).unwrap();
        assert_eq!(d(0.0, 1.0.into(), 3), vec![0.0, 1.0, 0.5]);
        assert_eq!(d(0.0, 1.0.into(), 5), vec![0.0, 1.0, 0.5, 0.25, 0.75]);
        assert_eq!(d(1.0, PosInf, 3), vec![1.0, 2.0, 1.5]);
        assert_eq!(
            dense_points(NegInf, PosInf, 5).unwrap(),
            vec![-1.0, 1.0, -2.0, 0.0, 2.0]
        );
        assert!(matches!(
            dense_points(PosInf, PosInf, 3),
            Err(Error::EmptyDomain)
        ));
        let many = dense_points(NegInf, PosInf, 5000).unwrap();
        let set: HashSet<u64> = many.iter().map(|z| z.to_bits()).collect();
        assert_eq!(set.len(), 5000);
    }

    #[test]
    fn measure_concentrates() {
        let lf = build_lf(&square_seed(24)).unwrap();
        let star = conjugate(&lf).unwrap();
        let mu = build_measure(&star, 10_000).unwrap();
        assert!(mu.total_log_mass().abs() < 1e-12);
        // L_f* vanishes exactly on (-inf, 1]; its minimisers are that ray
        let near = mu.interval_log_prob(NegInf, 1.1.into(), true);
        assert!(near.to_f64() * 1e4 > (0.99f64).ln(), "{near}");
        let v = mu.log_mgf(0.5);
        assert!((v - 0.5).abs() < 0.02, "{v}");
    }

    #[test]
    fn skeleton_matches_exact_conjugate() {
        let lf = build_lf(&square_seed(24)).unwrap();
        let star = conjugate(&lf).unwrap();
        let Some(Oracle::ChordComposite(cc)) = lf.oracle() else {
            unreachable!()
        };
        for x in [-3.0, 0.0, 1.0, 1.5, 2.0, 2.5, 3.9, 5.0] {
            let a = star.eval(x.into()).unwrap().to_f64();
            let b = cc.conjugate_at(x).unwrap().to_f64();
            assert!((a - b).abs() < 1e-9, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn json_round_trip() {
        let lf = build_lf(&square_seed(6)).unwrap();
        let s = serde_json::to_string(&lf).unwrap();
        assert!(s.contains(r#""kind":"chord_composite""#), "{s}");
        let back: ConvexFn = serde_json::from_str(&s).unwrap();
        for t in [0.3, 1.0, 1.01, 1.3, 1.9] {
            assert_eq!(back.eval(t).unwrap(), lf.eval(t).unwrap());
        }
    }
}
