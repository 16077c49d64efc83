use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::families::MeasureSequence;

/// `0.1 · 2^-j`, `j = 0..=6`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=6).map(|j| 0.1 * 2f64.powi(-j)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct L0Estimate {
    pub x: f64,
    /// `-lim_ε limsup_n c_n log μ_n(]x - ε, x + ε[)`.
    pub value: ExtReal,
    /// `(ε, limsup_n c_n log μ_n(]x - ε, x + ε[))`.
    pub per_eps: Vec<(f64, ExtReal)>,
}

/// Local rate at `x`. Each upper limit is the maximum over the top quartile
/// of `n_grid`; the limit in `ε` is the value at the smallest `ε`, after
/// checking the values decrease with `ε`.
pub fn l0_estimate(
    seq: &MeasureSequence,
    x: f64,
    eps_grid: &[f64],
    n_grid: &[u64],
) -> Result<L0Estimate> {
    if eps_grid.is_empty() || eps_grid.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(Error::BadParams(
            "eps_grid must be non-empty and positive".into(),
        ));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadParams(
            "eps_grid must be strictly decreasing".into(),
        ));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParams(
            "n_grid must be non-empty and increasing".into(),
        ));
    }
    let quartile = n_grid.len().div_ceil(4).max(1);
    let tail = &n_grid[n_grid.len() - quartile..];
    let mut per_eps = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut best = NegInf;
        for &n in tail {
            let v = seq.log_prob(n, (x - eps).into(), (x + eps).into(), false)?;
            best = best.max(v);
        }
        per_eps.push((eps, best));
    }
    for w in per_eps.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let grew = match (a, b) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => b > a + 1e-9 * a.abs().max(1.0),
            (a, b) => b > a,
        };
        if grew {
            return Err(Error::Unstable(format!(
                "upper limit grows from {a} at eps = {} to {b} at eps = {}",
                w[0].0, w[1].0
            )));
        }
    }
    let last = per_eps[per_eps.len() - 1].1;
    let value = match last {
        NegInf => PosInf,
        v => -v,
    };
    Ok(L0Estimate { x, value, per_eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{builtin_family, FamilySpec};
    use crate::harness::DEFAULT_N_GRID;

    #[test]
    fn gaussian_rate_at_one() {
        let g = builtin_family(&FamilySpec::GaussianMean { m: 0.0, sigma: 1.0 }).unwrap();
        let e = l0_estimate(&g, 1.0, &default_eps_grid(), &DEFAULT_N_GRID).unwrap();
        assert!((e.value.to_f64() - 0.5).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn point_mass_rates() {
        let pm = builtin_family(&FamilySpec::PointMass { z: 0.0 }).unwrap();
        let at0 = l0_estimate(&pm, 0.0, &default_eps_grid(), &DEFAULT_N_GRID).unwrap();
        assert_eq!(at0.value, ExtReal::ZERO);
        let at1 = l0_estimate(&pm, 1.0, &default_eps_grid(), &DEFAULT_N_GRID).unwrap();
        assert_eq!(at1.value, PosInf);
    }

    #[test]
    fn grids_are_validated() {
        let pm = builtin_family(&FamilySpec::PointMass { z: 0.0 }).unwrap();
        assert!(l0_estimate(&pm, 0.0, &[0.1, 0.2], &DEFAULT_N_GRID).is_err());
    }
}
