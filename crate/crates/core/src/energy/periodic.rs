//! The auxiliary periodic functional on one fundamental domain.
//!
//! All pair interactions within the cutoff are folded once into a sparse
//! site-by-site matrix (periodic images aggregated) plus per-site weights
//! towards the clamped far field. Each weight is also split into the part
//! whose partner lies in the fundamental domain itself.

use std::sync::Arc;

use rayon::prelude::*;

use super::field::{PeriodicField, CLAMP_ABOVE, CLAMP_BELOW};
use super::report::{EnergyKind, EnergyReport};
use super::stencil::KernelStencil;
use super::sum::pairwise_sum;
use crate::error::{Error, Result};
use crate::geometry::{Grid, Point, StripSide};
use crate::media::{KernelSpec, Medium, PotentialSpec};

/// Default interaction cutoff.
pub const DEFAULT_CUTOFF: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct PeriodicEnergy {
    grid: Arc<Grid>,
    medium: Medium,
    stencil: Arc<KernelStencil>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    w: Vec<f64>,
    w_same: Vec<f64>,
    c_plus: Vec<f64>,
    c_minus: Vec<f64>,
    c_plus_same: Vec<f64>,
    c_minus_same: Vec<f64>,
    q: Vec<f64>,
    h_n: f64,
    tail_per_site: f64,
}

/// Conservative bound on the kernel mass a lattice sum can miss beyond `r`.
pub(crate) fn lattice_tail_mass(kernel: &KernelSpec, cutoff: f64, h: f64) -> f64 {
    if kernel.truncation_radius().is_some_and(|rt| rt <= cutoff) {
        return 0.0;
    }
    let slack = h * (kernel.n as f64).sqrt();
    let r = (cutoff - slack).max(0.5 * cutoff);
    kernel.tail_mass(r) * (cutoff / r).powf(kernel.exponent())
}

impl PeriodicEnergy {
    pub fn new(medium: &Medium, grid: Arc<Grid>, cutoff: f64) -> Result<Self> {
        if medium.dim() != grid.dim() {
            return Err(Error::Config(format!(
                "medium dimension {} differs from grid dimension {}",
                medium.dim(),
                grid.dim()
            )));
        }
        if !(cutoff.is_finite() && cutoff >= 2.0 * grid.h()) {
            return Err(Error::Config(format!("interaction cutoff {cutoff} too small")));
        }
        let stencil = Arc::new(KernelStencil::new(&medium.kernel, &grid, cutoff));
        Ok(Self::with_stencil(medium, grid, stencil))
    }

    /// Reuses an existing stencil; it must have been built for a grid with the
    /// same spacing.
    pub fn with_stencil(medium: &Medium, grid: Arc<Grid>, stencil: Arc<KernelStencil>) -> Self {
        let n_sites = grid.len();
        let (lo, hi) = grid.level_range();
        let q = grid.quotient();
        let dir = grid.direction();

        struct Row {
            entries: Vec<(u32, f64, f64)>,
            c: [f64; 4],
        }
        let rows: Vec<Row> = (0..n_sites)
            .into_par_iter()
            .map(|i| {
                let x = grid.site(i);
                let mut acc: std::collections::BTreeMap<u32, (f64, f64)> = Default::default();
                let mut c = [0.0; 4];
                for (k, d) in stencil.offsets().iter().enumerate() {
                    let wgt = stencil.weight_at(&x, k);
                    if wgt == 0.0 {
                        continue;
                    }
                    let y: Point = [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
                    let level = dir.level(&y);
                    if level < lo || level > hi {
                        let same = q.in_fundamental(&y);
                        let slot = if level < lo { 0 } else { 1 };
                        c[slot] += wgt;
                        if same {
                            c[slot + 2] += wgt;
                        }
                    } else {
                        let rep = q.representative(&y);
                        let col = grid.index_of(&rep).expect("window point has a site") as u32;
                        let e = acc.entry(col).or_insert((0.0, 0.0));
                        e.0 += wgt;
                        if rep == y {
                            e.1 += wgt;
                        }
                    }
                }
                Row {
                    entries: acc.into_iter().map(|(c, (a, b))| (c, a, b)).collect(),
                    c,
                }
            })
            .collect();

        let mut row_ptr = Vec::with_capacity(n_sites + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.entries.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut w = Vec::with_capacity(nnz);
        let mut w_same = Vec::with_capacity(nnz);
        let mut c_plus = Vec::with_capacity(n_sites);
        let mut c_minus = Vec::with_capacity(n_sites);
        let mut c_plus_same = Vec::with_capacity(n_sites);
        let mut c_minus_same = Vec::with_capacity(n_sites);
        for r in &rows {
            for &(c, a, b) in &r.entries {
                cols.push(c);
                w.push(a);
                w_same.push(b);
            }
            row_ptr.push(cols.len());
            c_plus.push(r.c[0]);
            c_minus.push(r.c[1]);
            c_plus_same.push(r.c[2]);
            c_minus_same.push(r.c[3]);
        }

        // The aggregated weights are symmetric up to summation order; make
        // them exactly symmetric so the gradient formula is exact.
        for i in 0..n_sites {
            for p in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[p] as usize;
                if j <= i {
                    continue;
                }
                let slice = &cols[row_ptr[j]..row_ptr[j + 1]];
                if let Ok(off) = slice.binary_search(&(i as u32)) {
                    let p2 = row_ptr[j] + off;
                    let avg = 0.5 * (w[p] + w[p2]);
                    w[p] = avg;
                    w[p2] = avg;
                }
            }
        }

        let n = grid.dim();
        let qv = grid
            .sites()
            .iter()
            .map(|j| medium.potential.coeff.eval(&grid.cell_position(j)[..n]))
            .collect();
        let h_n = grid.h().powi(n as i32);
        let tail_per_site = 4.0 * h_n * lattice_tail_mass(&medium.kernel, stencil.cutoff(), grid.h());
        Self {
            grid,
            medium: medium.clone(),
            stencil,
            row_ptr,
            cols,
            w,
            w_same,
            c_plus,
            c_minus,
            c_plus_same,
            c_minus_same,
            q: qv,
            h_n,
            tail_per_site,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.medium.potential
    }

    pub fn stencil(&self) -> &Arc<KernelStencil> {
        &self.stencil
    }

    pub fn cutoff(&self) -> f64 {
        self.stencil.cutoff()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `h^n` times the potential coefficient at each site.
    pub fn site_potential_scale(&self, i: usize) -> f64 {
        self.h_n * self.q[i]
    }

    fn check(&self, u: &[f64]) {
        assert_eq!(u.len(), self.grid.len(), "field length does not match grid");
    }

    fn row(&self, i: usize) -> (&[u32], &[f64], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.w[r.clone()], &self.w_same[r])
    }

    /// Per-site contributions `(kinetic total, kinetic same, potential)`.
    fn site_terms(&self, u: &[f64], i: usize) -> (f64, f64, f64) {
        let (cols, w, ws) = self.row(i);
        let ui = u[i];
        let (mut all, mut same) = (0.0, 0.0);
        for ((&c, &a), &b) in cols.iter().zip(w).zip(ws) {
            let d = ui - u[c as usize];
            let d2 = d * d;
            all += a * d2;
            same += b * d2;
        }
        let dp = (ui - CLAMP_BELOW) * (ui - CLAMP_BELOW);
        let dm = (ui - CLAMP_ABOVE) * (ui - CLAMP_ABOVE);
        let clamp_all = self.c_plus[i] * dp + self.c_minus[i] * dm;
        let clamp_same = self.c_plus_same[i] * dp + self.c_minus_same[i] * dm;
        let pot = self.h_n * self.q[i] * self.medium.potential.well(ui);
        (0.5 * all + clamp_all, 0.5 * same + clamp_same, pot)
    }

    /// `K(D, R^n) + P(D)`, split into same-domain and cross parts.
    pub fn report(&self, u: &[f64]) -> EnergyReport {
        self.check(u);
        let terms: Vec<(f64, f64, f64)> =
            (0..u.len()).into_par_iter().map(|i| self.site_terms(u, i)).collect();
        let all = pairwise_sum(&terms.iter().map(|t| t.0).collect::<Vec<_>>());
        let same = pairwise_sum(&terms.iter().map(|t| t.1).collect::<Vec<_>>());
        let pot = pairwise_sum(&terms.iter().map(|t| t.2).collect::<Vec<_>>());
        EnergyReport::new(
            EnergyKind::Periodic,
            same,
            (all - same).max(0.0),
            pot,
            self.tail_per_site * u.len() as f64,
        )
    }

    /// Total value of the functional.
    pub fn value(&self, u: &[f64]) -> f64 {
        self.check(u);
        let terms: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let t = self.site_terms(u, i);
                t.0 + t.2
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Exact gradient of [`Self::value`].
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.check(u);
        (0..u.len())
            .into_par_iter()
            .map(|i| {
                let (cols, w, _) = self.row(i);
                let ui = u[i];
                let mut g = 0.0;
                for (&c, &a) in cols.iter().zip(w) {
                    g += a * (ui - u[c as usize]);
                }
                2.0 * g
                    + 2.0 * self.c_plus[i] * (ui - CLAMP_BELOW)
                    + 2.0 * self.c_minus[i] * (ui - CLAMP_ABOVE)
                    + self.h_n * self.q[i] * self.medium.potential.well_derivative(ui)
            })
            .collect()
    }

    /// `value(v) - value(u)`, computed from differences so that small steps
    /// are resolved accurately.
    pub fn delta(&self, u: &[f64], v: &[f64]) -> f64 {
        self.check(u);
        self.check(v);
        let pot = &self.medium.potential;
        let terms: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let (cols, w, _) = self.row(i);
                let (ui, vi) = (u[i], v[i]);
                let di = vi - ui;
                let mut kin = 0.0;
                for (&c, &a) in cols.iter().zip(w) {
                    let c = c as usize;
                    let dj = v[c] - u[c];
                    kin += a * (di - dj) * ((vi - v[c]) + (ui - u[c]));
                }
                let clamp = self.c_plus[i] * di * (vi + ui - 2.0 * CLAMP_BELOW)
                    + self.c_minus[i] * di * (vi + ui - 2.0 * CLAMP_ABOVE);
                0.5 * kin + clamp + self.h_n * self.q[i] * pot.well_delta(ui, vi)
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Gershgorin bound on the Hessian.
    pub fn lipschitz_estimate(&self) -> f64 {
        let curv = self.medium.potential.curvature_bound();
        (0..self.grid.len())
            .map(|i| {
                let (_, w, _) = self.row(i);
                let off: f64 = w.iter().sum();
                4.0 * off + 2.0 * (self.c_plus[i] + self.c_minus[i]) + self.h_n * self.q[i] * curv
            })
            .fold(0.0, f64::max)
    }

    /// `h^{2n} sum_{x in D} sum_{y not in D} phi(x) phi(y) K(x, y)` for the
    /// periodic extension of `phi`.
    pub fn cross_term(&self, phi: &[f64]) -> Result<f64> {
        self.check(phi);
        self.check_support(phi)?;
        let terms: Vec<f64> = (0..phi.len())
            .into_par_iter()
            .map(|i| {
                if phi[i] == 0.0 {
                    return 0.0;
                }
                let (cols, w, ws) = self.row(i);
                let mut acc = 0.0;
                for ((&c, &a), &b) in cols.iter().zip(w).zip(ws) {
                    acc += (a - b) * phi[c as usize];
                }
                phi[i] * acc
            })
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Perturbations must sit strictly inside the strip and off the lateral
    /// faces of the fundamental domain.
    pub fn check_support(&self, phi: &[f64]) -> Result<()> {
        let g = &self.grid;
        for (i, &p) in phi.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let j = g.site(i);
            let t = g.normal(&j);
            let strip = g.strip();
            if !(t > strip.a && t < strip.b) || g.side(i) != StripSide::Inside {
                return Err(Error::Precondition(format!(
                    "perturbation at site {i} is not strictly inside the strip"
                )));
            }
            if g.quotient().on_lateral_face(&j) {
                return Err(Error::Precondition(format!(
                    "perturbation at site {i} touches the lateral boundary of the fundamental domain"
                )));
            }
        }
        Ok(())
    }

    /// Gradient divided by `h^n` on the given sites.
    pub fn el_residual(&self, u: &[f64], interior: &[usize]) -> Vec<f64> {
        let g = self.gradient(u);
        interior.iter().map(|&i| g[i] / self.h_n).collect()
    }

    /// Energy-row weights toward the clamped far field, for tests.
    pub fn clamp_weights(&self, i: usize) -> (f64, f64) {
        (self.c_plus[i], self.c_minus[i])
    }
}

pub fn auxiliary_energy(e: &PeriodicEnergy, u: &PeriodicField) -> EnergyReport {
    e.report(u.values())
}

pub fn energy_gradient(e: &PeriodicEnergy, u: &PeriodicField) -> Vec<f64> {
    e.gradient(u.values())
}

pub fn el_residual(e: &PeriodicEnergy, u: &PeriodicField, interior: &[usize]) -> Vec<f64> {
    e.el_residual(u.values(), interior)
}

pub fn cross_term(e: &PeriodicEnergy, phi: &[f64]) -> Result<f64> {
    e.cross_term(phi)
}
