//! Interactions beyond the stencil cutoff for localized energies.
//!
//! Lattice points at a fixed normal offset `Delta = omega . (y - x)` form a
//! line `d_Delta + t z`, and the field along it is periodic in `t`. For each
//! offset and each residue of `t` the far part of the line sum is tabulated
//! explicitly out to a tangential distance `max(4 cutoff, 16)`, with Euler-Maclaurin
//! continuum tails beyond. Offsets past the window only see the clamped
//! values, so their sums are accumulated once and closed off with the exact
//! power-law integral of a homogeneous kernel.
//!
//! Two dimensions and translation-invariant kernels only.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use super::field::{LatticeField, PeriodicField, CLAMP_ABOVE, CLAMP_BELOW};
use super::local::SiteSet;
use super::sum::pairwise_sum;
use crate::error::{Error, Result};
use crate::geometry::{Grid, Locus};
use crate::media::KernelSpec;

/// Tanh-sinh rule on `[a, b]`; tolerates integrable endpoint singularities.
pub(crate) fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let step = 1.0 / 64.0;
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in -256i32..=256 {
        let t = k as f64 * step;
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / (u.cosh() * u.cosh());
        // Distance to the nearer endpoint, free of cancellation.
        let gap = 2.0 / (1.0 + (2.0 * u.abs()).exp());
        if !(w > 0.0 && gap > 0.0) {
            continue;
        }
        let x = if u < 0.0 { a + half * gap } else { b - half * gap };
        acc += w * f(x);
    }
    acc * step * half
}

#[derive(Debug, Clone)]
pub struct FarField {
    grid: Arc<Grid>,
    cutoff: f64,
    /// Lattice points per level per period.
    period: i64,
    /// Largest window offset `|Delta|` that is tabulated per residue.
    span: i64,
    /// `(2 span + 1) x period` line sums, row `Delta + span`.
    lines: Vec<f64>,
    /// `clamped[D]`: sum of all far weights at offsets `>= D`, for
    /// `1 <= D <= span + 1`.
    clamped: Vec<f64>,
    r2_far: f64,
    kernel: KernelSpec,
}

impl FarField {
    pub fn new(kernel: &KernelSpec, grid: Arc<Grid>, cutoff: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Misuse("far-field sums are implemented in two dimensions".into()));
        }
        if !kernel.is_translation_invariant() {
            return Err(Error::Misuse(
                "far-field sums need a translation-invariant kernel".into(),
            ));
        }
        let dir = grid.direction().clone();
        let h = grid.h();
        let denom = grid.denom();
        let z = dir.basis()[0];
        let e = dir.transversal();
        let z2 = (z[0] * z[0] + z[1] * z[1]) as f64;
        let zn = z2.sqrt();
        let wn = dir.norm();
        let period = grid.multiplier()[0] * denom;
        let (lo, hi) = grid.level_range();
        let span = hi - lo;
        let r2_far = cutoff * cutoff * (denom * denom) as f64 * (1.0 + 1e-12);
        let trunc = kernel.truncation_radius();
        let pair = h.powi(4);
        let tan_step = zn * h;
        let kval = |tau: f64, delta: f64| -> f64 {
            let t = [z[0] as f64 / zn, z[1] as f64 / zn];
            let o = dir.omega();
            let nv = [o[0] as f64 / wn, o[1] as f64 / wn];
            kernel.value(&[0.0, 0.0], &[tau * t[0] + delta * nv[0], tau * t[1] + delta * nv[1]])
        };
        // Explicit tangential range, and the range of offsets summed level by level.
        let t_max = match trunc {
            Some(r) => r,
            None => (4.0 * cutoff).max(16.0),
        };
        let delta_cap = match trunc {
            Some(r) => r,
            None => (4.0 * cutoff).max(span as f64 * h / wn),
        };
        let level_cap = ((delta_cap * wn / h).ceil() as i64).max(span + 1);

        // Per residue sums for one normal offset.
        let line = |delta_lv: i64| -> Vec<f64> {
            let mut out = vec![0.0; period as usize];
            if trunc.is_some_and(|r| r <= cutoff) {
                return out;
            }
            let d0 = [delta_lv * e[0], delta_lv * e[1]];
            let dz = (d0[0] * z[0] + d0[1] * z[1]) as f64;
            let delta = delta_lv as f64 * h / wn;
            let tau_of = |t: i64| (dz + t as f64 * z2) * h / zn;
            let t_lo = ((-t_max * zn / h - dz) / z2).ceil() as i64;
            let t_hi = ((t_max * zn / h - dz) / z2).floor() as i64;
            for t in t_lo..=t_hi {
                let d = [d0[0] + t * z[0], d0[1] + t * z[1]];
                let r2 = (d[0] * d[0] + d[1] * d[1]) as f64;
                if r2 <= r2_far {
                    continue;
                }
                let y = [d[0] as f64 * h, d[1] as f64 * h];
                let w = pair * kernel.value(&[0.0, 0.0], &y);
                out[t.rem_euclid(period) as usize] += w;
            }
            if trunc.is_none() {
                // Euler-Maclaurin tail of each residue's sub-lattice.
                let f = |tau: f64| pair * kval(tau, delta);
                let step = tan_step * period as f64;
                for k in 0..period {
                    for (t0, sign) in [(t_hi + 1 + k, 1.0), (t_lo - 1 - k, -1.0)] {
                        let a = sign * tau_of(t0);
                        let g = |x: f64| f(sign * x);
                        let integral = tanh_sinh(|v| if v > 0.0 { g(a / v) * a / (v * v) } else { 0.0 }, 0.0, 1.0);
                        let eps = 1e-4 * a;
                        let slope = (g(a + eps) - g(a - eps)) / (2.0 * eps);
                        let tail = integral / step + 0.5 * g(a) - step * slope / 12.0;
                        out[t0.rem_euclid(period) as usize] += tail;
                    }
                }
            }
            out
        };

        let mut lines = Vec::with_capacity(((2 * span + 1) * period) as usize);
        let rows: Vec<Vec<f64>> = (-span..=span).into_par_iter().map(line).collect();
        for r in rows {
            lines.extend(r);
        }
        // Offsets beyond the window: totals only, with the power-law closure.
        let totals: Vec<f64> = (1..=level_cap)
            .into_par_iter()
            .map(|lv| line(lv).iter().sum())
            .collect();
        let mut beyond = 0.0;
        if trunc.is_none() {
            let s = kernel.s;
            let i1 = tanh_sinh(|th| kval(th.sin(), th.cos()) * th.cos().powf(2.0 * s), -0.5 * PI, 0.5 * PI);
            let gap = h / wn;
            let d1 = (level_cap + 1) as f64 * gap;
            let c = pair / tan_step * i1;
            beyond = c * d1.powf(-2.0 * s) / (2.0 * s * gap) + 0.5 * c * d1.powf(-1.0 - 2.0 * s)
                + gap * (1.0 + 2.0 * s) * c * d1.powf(-2.0 - 2.0 * s) / 12.0;
        }
        let mut clamped = vec![0.0; (span + 2) as usize];
        let mut acc = beyond;
        for lv in (1..=level_cap).rev() {
            acc += totals[(lv - 1) as usize];
            if lv <= span + 1 {
                clamped[lv as usize] = acc;
            }
        }
        Ok(Self {
            grid,
            cutoff,
            period,
            span,
            lines,
            clamped,
            r2_far,
            kernel: kernel.clone(),
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Far contributions `(same, cross)` to the kinetic part of the localized
    /// energy of `f` on `omega`, in the normalization of
    /// [`super::LocalEnergy::total_energy`]. `omega` must lie in the window.
    pub fn correction(&self, f: &PeriodicField, omega: &SiteSet) -> Result<(f64, f64)> {
        let g = &self.grid;
        if *f.grid() != **g {
            return Err(Error::GridMismatch);
        }
        if let Some(p) = omega.points().iter().find(|p| f.is_clamped(p)) {
            return Err(Error::Precondition(format!(
                "region point {:?} lies outside the window",
                &p[..2]
            )));
        }
        let dir = g.direction();
        let z = dir.basis()[0];
        let e = dir.transversal();
        let (lo, hi) = g.level_range();
        let per = self.period as usize;
        let values = f.values();
        let per_point: Vec<f64> = omega
            .points()
            .par_iter()
            .map(|x| {
                let v = f.value(x);
                let lx = dir.level(x);
                let mut parts = Vec::with_capacity((hi - lo + 3) as usize);
                for l in lo..=hi {
                    let delta = l - lx;
                    let row = &self.lines[((delta + self.span) as usize) * per..][..per];
                    let mut acc = 0.0;
                    for (r, &w) in row.iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let y = [
                            x[0] + delta * e[0] + r as i64 * z[0],
                            x[1] + delta * e[1] + r as i64 * z[1],
                            0,
                        ];
                        let uy = match g.locate(&y) {
                            Locus::Site(i) => values[i],
                            Locus::Below => CLAMP_BELOW,
                            Locus::Above => CLAMP_ABOVE,
                        };
                        acc += w * (v - uy) * (v - uy);
                    }
                    parts.push(acc);
                }
                let below = self.clamped[(lx - lo + 1) as usize];
                let above = self.clamped[(hi - lx + 1) as usize];
                parts.push(below * (v - CLAMP_BELOW).powi(2));
                parts.push(above * (v - CLAMP_ABOVE).powi(2));
                pairwise_sum(&parts)
            })
            .collect();
        let total = pairwise_sum(&per_point);
        let inner = self.inner_pairs(f, omega);
        Ok((0.5 * inner, 0.5 * (total - inner)))
    }

    /// Far pairs with both points in `omega`, summed over ordered pairs.
    fn inner_pairs(&self, f: &PeriodicField, omega: &SiteSet) -> f64 {
        let h = self.grid.h();
        let pair = h.powi(4);
        let pts = omega.points();
        let vals: Vec<f64> = pts.iter().map(|p| f.value(p)).collect();
        let rows: Vec<f64> = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let mut parts = Vec::new();
                for j in 0..pts.len() {
                    let d = [pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]];
                    let r2 = (d[0] * d[0] + d[1] * d[1]) as f64;
                    if r2 <= self.r2_far {
                        continue;
                    }
                    let dv = vals[i] - vals[j];
                    if dv == 0.0 {
                        continue;
                    }
                    let k = self.kernel.value(&[0.0, 0.0], &[d[0] as f64 * h, d[1] as f64 * h]);
                    parts.push(pair * k * dv * dv);
                }
                pairwise_sum(&parts)
            })
            .collect();
        pairwise_sum(&rows)
    }
}
