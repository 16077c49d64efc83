//! Exact piecewise-linear convex functions and their conjugates.

use super::ConvexFn;
use crate::error::Result;
use crate::extreal::{ExtReal, NegInf, PosInf};

/// Vertices plus optional affine rays; a missing ray means `+∞` on that side.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct PwlModel {
    pub vertices: Vec<(f64, f64)>,
    pub left_slope: Option<f64>,
    pub right_slope: Option<f64>,
}

impl PwlModel {
    #[cfg(test)]
    pub fn eval(&self, t: f64) -> ExtReal {
        let first = self.vertices[0];
        let last = self.vertices[self.vertices.len() - 1];
        if t < first.0 {
            return self
                .left_slope
                .map_or(PosInf, |s| (first.1 + s * (t - first.0)).into());
        }
        if t > last.0 {
            return self
                .right_slope
                .map_or(PosInf, |s| (last.1 + s * (t - last.0)).into());
        }
        let i = self.vertices.partition_point(|v| v.0 <= t);
        let (t0, v0) = self.vertices[i - 1];
        if t == t0 || i == self.vertices.len() {
            return v0.into();
        }
        let (t1, v1) = self.vertices[i];
        (v0 + (v1 - v0) * (t - t0) / (t1 - t0)).into()
    }

    /// `sup_t (x t - f(t))`, attained at a vertex unless a ray makes it `+∞`.
    pub fn conjugate_at(&self, x: f64) -> ExtReal {
        if self.left_slope.is_some_and(|s| x < s) || self.right_slope.is_some_and(|s| x > s) {
            return PosInf;
        }
        let best = self
            .vertices
            .iter()
            .map(|&(t, v)| x * t - v)
            .fold(f64::NEG_INFINITY, f64::max);
        best.into()
    }

    /// Slope sequence bracketing the vertices: vertex `i` sits between
    /// `s[i]` and `s[i + 1]`; `∓∞` stands for a missing ray.
    fn slopes(&self) -> Vec<ExtReal> {
        let mut s = Vec::with_capacity(self.vertices.len() + 1);
        s.push(self.left_slope.map_or(NegInf, ExtReal::from));
        for w in self.vertices.windows(2) {
            s.push(((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).into());
        }
        s.push(self.right_slope.map_or(PosInf, ExtReal::from));
        s
    }

    /// Exact conjugate: vertices of `f*` sit at the slopes of `f`, and the
    /// slopes of `f*` are the abscissae of the vertices of `f`.
    pub fn conjugate(&self) -> PwlModel {
        let s = self.slopes();
        let m = self.vertices.len() - 1;
        let mut vertices: Vec<(f64, f64)> = Vec::new();
        for (j, sj) in s.iter().enumerate() {
            let ExtReal::Finite(y) = *sj else { continue };
            let (t, v) = self.vertices[j.min(m)];
            let val = y * t - v;
            match vertices.last_mut() {
                Some(last) if last.0 == y => last.1 = last.1.max(val),
                _ => vertices.push((y, val)),
            }
        }
        let (t0, v0) = self.vertices[0];
        let tm = self.vertices[m].0;
        if vertices.is_empty() {
            return PwlModel {
                vertices: vec![(0.0, -v0)],
                left_slope: Some(t0),
                right_slope: Some(t0),
            };
        }
        PwlModel {
            vertices,
            left_slope: (s[0] == NegInf).then_some(t0),
            right_slope: (s[s.len() - 1] == PosInf).then_some(tm),
        }
    }

    pub fn to_convex_fn(&self) -> Result<ConvexFn> {
        ConvexFn::pwl_with_rays(self.vertices.clone(), self.left_slope, self.right_slope)
    }

    /// Drops vertices whose slopes on either side do not increase by more
    /// than `rel_tol` (relative), so rounding in sampled values never
    /// produces a non-convex vertex list.
    pub fn strictly_convex_vertices(points: &[(f64, f64)], rel_tol: f64) -> Vec<(f64, f64)> {
        let slope = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (b.0 - a.0);
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &p in points {
            if out.last().is_some_and(|q| q.0 >= p.0) {
                continue;
            }
            while out.len() >= 2 {
                let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
                let (s1, s2) = (slope(a, b), slope(b, p));
                if s2 - s1 > rel_tol * s1.abs().max(s2.abs()).max(1.0) {
                    break;
                }
                out.pop();
            }
            out.push(p);
        }
        out
    }
}
