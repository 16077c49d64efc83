//! Finite atomic probability measures with log-domain weights.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};

/// Normalisation tolerance on `logsumexp(log_weights)`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// `log Σ exp(xᵢ)`, `-∞` for an empty or all `-∞` input.
pub fn logsumexp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let s: f64 = xs.into_iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
    scale: f64,
    n: Option<u64>,
}

impl AtomicMeasure {
    /// Atoms `(z, log_weight)` strictly increasing in `z` with weights
    /// summing to one; `scale` is the `c_n` attached to the measure.
    pub fn new(atoms: Vec<(f64, f64)>, scale: f64, n: Option<u64>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::BadParams(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::BadParams("no atoms".into()));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms
            .iter()
            .any(|a| !a.0.is_finite() || a.1.is_nan() || a.1 == f64::INFINITY)
        {
            return Err(Error::BadParams(
                "atoms must be finite with log-weights below +inf".into(),
            ));
        }
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::BadParams("duplicate atom".into()));
        }
        let total = logsumexp(atoms.iter().map(|a| a.1));
        if total.is_nan() || total.abs() > NORMALIZATION_TOL {
            return Err(Error::BadParams(format!(
                "log-weights sum to {total}, not 0"
            )));
        }
        Ok(AtomicMeasure { atoms, scale, n })
    }

    /// Normalises arbitrary log-weights.
    pub fn from_log_weights(atoms: Vec<(f64, f64)>, scale: f64, n: Option<u64>) -> Result<Self> {
        let lse = logsumexp(atoms.iter().map(|a| a.1));
        if !lse.is_finite() {
            return Err(Error::AllWeightsInfinite);
        }
        let atoms = atoms.into_iter().map(|(z, w)| (z, w - lse)).collect();
        Self::new(atoms, scale, n)
    }

    pub fn point_mass(z: f64, scale: f64) -> Result<Self> {
        Self::new(vec![(z, 0.0)], scale, None)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n(&self) -> Option<u64> {
        self.n
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_log_mass(&self) -> f64 {
        logsumexp(self.atoms.iter().map(|a| a.1))
    }

    /// `c log ∫ e^{t z / c} μ(dz)`.
    pub fn log_mgf(&self, t: f64) -> f64 {
        let c = self.scale;
        c * logsumexp(self.atoms.iter().map(|&(z, w)| t * z / c + w))
    }

    /// `c log μ(I)` for `I = [x, y]` (closed) or `]x, y[` (open).
    pub fn interval_log_prob(&self, x: ExtReal, y: ExtReal, closed: bool) -> ExtReal {
        let inside = |z: f64| {
            let z = ExtReal::from(z);
            if closed {
                x <= z && z <= y
            } else {
                x < z && z < y
            }
        };
        let start = match x {
            NegInf => 0,
            _ => self.atoms.partition_point(|a| ExtReal::from(a.0) < x),
        };
        let lse = logsumexp(
            self.atoms[start..]
                .iter()
                .take_while(|a| ExtReal::from(a.0) <= y || y == PosInf)
                .filter(|a| inside(a.0))
                .map(|a| a.1),
        );
        ExtReal::from(self.scale * lse)
    }

    /// CSV with columns `z,log_weight`; the header row also carries
    /// `scale=<c>` and, when known, `n=<n>`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let mut header = vec![
            "z".to_string(),
            "log_weight".into(),
            format!("scale={:e}", self.scale),
        ];
        if let Some(n) = self.n {
            header.push(format!("n={n}"));
        }
        wr.write_record(&header)?;
        for &(z, lw) in &self.atoms {
            wr.write_record([format!("{z:e}"), format!("{lw:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(r);
        let headers = rd.headers()?.clone();
        let mut scale = None;
        let mut n = None;
        for h in headers.iter().skip(2) {
            let bad = || Error::BadParams(format!("bad header field {h:?}"));
            if let Some(v) = h.strip_prefix("scale=") {
                scale = Some(v.parse::<f64>().map_err(|_| bad())?);
            } else if let Some(v) = h.strip_prefix("n=") {
                n = Some(v.parse::<u64>().map_err(|_| bad())?);
            }
        }
        let scale = scale.ok_or_else(|| Error::BadParams("missing scale= in header".into()))?;
        let mut atoms = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::BadParams(format!("bad CSV row {:?}", rec)))
            };
            atoms.push((field(0)?, field(1)?));
        }
        Self::new(atoms, scale, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_equal() -> AtomicMeasure {
        let h = 0.5f64.ln();
        AtomicMeasure::new(vec![(0.0, h), (1.0, h)], 1.0, None).unwrap()
    }

    #[test]
    fn mgf_of_point_mass() {
        let m = AtomicMeasure::point_mass(2.0, 0.5).unwrap();
        assert!((m.log_mgf(1.0) - 2.0).abs() < 1e-15);
        assert!(two_equal().log_mgf(0.0).abs() < 1e-15);
    }

    #[test]
    fn intervals() {
        let m = two_equal();
        assert!(m.interval_log_prob(NegInf, PosInf, true).to_f64().abs() < 1e-15);
        assert_eq!(m.interval_log_prob(0.0.into(), 1.0.into(), false), NegInf);
        let w =
            AtomicMeasure::new(vec![(0.0, 0.75f64.ln()), (1.0, 0.25f64.ln())], 0.5, None).unwrap();
        let v = w.interval_log_prob(1.0.into(), 2.0.into(), true).to_f64();
        assert!((v - 0.5 * 0.25f64.ln()).abs() < 1e-12);
        assert!((v + std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn normalisation_formula() {
        let n = 2.0;
        let m = AtomicMeasure::from_log_weights(
            vec![(0.0, -n * 0.0), (1.0, -n * 0.5)],
            1.0 / n,
            Some(2),
        )
        .unwrap();
        let l = (1.0 + (-1.0f64).exp()).ln();
        assert!((m.atoms()[0].1 + l).abs() < 1e-15);
        assert!((m.atoms()[1].1 + 1.0 + l).abs() < 1e-15);
        let single = AtomicMeasure::from_log_weights(vec![(3.0, -0.7)], 1.0, None).unwrap();
        assert_eq!(single.atoms()[0].1, 0.0);
    }

    #[test]
    fn rejects_unnormalised() {
        assert!(AtomicMeasure::new(vec![(0.0, 0.0), (1.0, 0.0)], 1.0, None).is_err());
        assert!(
            AtomicMeasure::from_log_weights(vec![(0.0, f64::NEG_INFINITY)], 1.0, None).is_err()
        );
    }

    #[test]
    fn csv_round_trip() {
        let m = AtomicMeasure::from_log_weights(
            vec![(-1.5, -3.0), (0.25, -0.1), (2.0, -7.0)],
            1e-3,
            Some(1000),
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("z,log_weight,scale=1e-3,n=1000\n"),
            "{text}"
        );
        let back = AtomicMeasure::read_csv(&buf[..]).unwrap();
        assert_eq!(back, m);
    }
}
