//! Localized energies on finite sets of lattice points.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use super::field::LatticeField;
use super::periodic::lattice_tail_mass;
use super::report::{EnergyKind, EnergyReport};
use super::stencil::KernelStencil;
use super::sum::pairwise_sum;
use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};
use crate::media::Medium;

/// A finite set of lattice points (grid numerators), kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    points: Vec<Point>,
    members: HashSet<Point>,
}

impl SiteSet {
    pub fn from_points(mut points: Vec<Point>) -> Self {
        points.sort_unstable();
        points.dedup();
        let members = points.iter().copied().collect();
        Self { points, members }
    }

    /// Lattice points with `|x - center| <= radius`.
    pub fn ball(grid: &Grid, center: &[f64], radius: f64) -> Self {
        let n = grid.dim();
        let m = grid.denom() as f64;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for c in 0..n {
            lo[c] = ((center[c] - radius) * m).floor() as i64;
            hi[c] = ((center[c] + radius) * m).ceil() as i64;
        }
        let r2 = radius * radius * (1.0 + 1e-12);
        let mut pts = Vec::new();
        for a in lo[0]..=hi[0] {
            for b in lo[1]..=hi[1] {
                for c in lo[2]..=hi[2] {
                    let j = [a, b, c];
                    let p = grid.position(&j);
                    let d2: f64 = (0..n).map(|k| (p[k] - center[k]).powi(2)).sum();
                    if d2 <= r2 {
                        pts.push(j);
                    }
                }
            }
        }
        Self::from_points(pts)
    }

    /// The fundamental domain of the grid, including clamped points whose
    /// normal distance to the window is at most `reach`.
    pub fn fundamental_domain(grid: &Grid, reach: f64) -> Self {
        let dir = grid.direction();
        let q = grid.quotient();
        let (lo, hi) = grid.level_range();
        let extra = (reach * dir.norm() * grid.denom() as f64).ceil() as i64;
        let e = dir.transversal();
        let basis = dir.basis();
        let counts: Vec<i64> = grid.multiplier().iter().map(|&m| m * grid.denom()).collect();
        let per_level: i64 = counts.iter().product();
        let mut pts = Vec::new();
        for level in (lo - extra)..=(hi + extra) {
            if (lo..=hi).contains(&level) {
                continue;
            }
            for flat in 0..per_level {
                let mut rem = flat;
                let mut j = [e[0] * level, e[1] * level, e[2] * level];
                for (i, &c) in counts.iter().enumerate() {
                    let a = rem % c;
                    rem /= c;
                    for k in 0..3 {
                        j[k] += a * basis[i][k];
                    }
                }
                pts.push(q.representative(&j));
            }
        }
        pts.extend_from_slice(grid.sites());
        Self::from_points(pts)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, j: &Point) -> bool {
        self.members.contains(j)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points);
        Self::from_points(pts)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    fn bounding_box(&self, n: usize) -> ([i64; 3], [i64; 3]) {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for c in 0..n {
            lo[c] = self.points.iter().map(|p| p[c]).min().unwrap_or(0);
            hi[c] = self.points.iter().map(|p| p[c]).max().unwrap_or(0);
        }
        (lo, hi)
    }
}

/// Which partners `y` a kinetic sum runs over.
#[derive(Debug, Clone, Copy)]
pub enum Partner<'a> {
    In(&'a SiteSet),
    NotIn(&'a SiteSet),
}

/// Dense cache of a field over a box of lattice points.
struct DenseBox {
    n: usize,
    lo: [i64; 3],
    dims: [i64; 3],
    stride: [i64; 3],
    values: Vec<f64>,
    clamped: Vec<bool>,
}

impl DenseBox {
    fn new<F: LatticeField + ?Sized>(f: &F, n: usize, lo: [i64; 3], hi: [i64; 3]) -> Self {
        let mut dims = [1i64; 3];
        for c in 0..n {
            dims[c] = hi[c] - lo[c] + 1;
        }
        let stride = [dims[1] * dims[2], dims[2], 1];
        let len = (dims[0] * dims[1] * dims[2]) as usize;
        let cells: Vec<(f64, bool)> = (0..len)
            .into_par_iter()
            .map(|flat| {
                let flat = flat as i64;
                let j = [
                    lo[0] + flat / stride[0],
                    lo[1] + (flat / stride[1]) % dims[1],
                    lo[2] + flat % dims[2],
                ];
                (f.value(&j), f.is_clamped(&j))
            })
            .collect();
        let (values, clamped) = cells.into_iter().unzip();
        Self {
            n,
            lo,
            dims,
            stride,
            values,
            clamped,
        }
    }

    fn index(&self, j: &Point) -> usize {
        let mut idx = 0;
        for c in 0..3 {
            idx += (j[c] - self.lo[c]) * self.stride[c];
        }
        idx as usize
    }

    fn linear_offset(&self, d: &Point) -> isize {
        (0..self.n).map(|c| d[c] * self.stride[c]).sum::<i64>() as isize
    }
}

/// Localized energies with the same discretization as a periodic functional.
#[derive(Debug, Clone)]
pub struct LocalEnergy {
    grid: Arc<Grid>,
    medium: Medium,
    stencil: Arc<KernelStencil>,
    h_n: f64,
}

impl LocalEnergy {
    pub fn new(medium: &Medium, grid: Arc<Grid>, stencil: Arc<KernelStencil>) -> Self {
        let h_n = grid.h().powi(grid.dim() as i32);
        Self {
            grid,
            medium: medium.clone(),
            stencil,
            h_n,
        }
    }

    pub fn from_periodic(e: &super::PeriodicEnergy) -> Self {
        Self::new(e.medium(), e.grid().clone(), e.stencil().clone())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn stencil(&self) -> &Arc<KernelStencil> {
        &self.stencil
    }

    fn dense<F: LatticeField + ?Sized>(&self, f: &F, u: &SiteSet) -> DenseBox {
        let n = self.grid.dim();
        let r = self.stencil.radius_cells();
        let (mut lo, mut hi) = u.bounding_box(n);
        for c in 0..n {
            lo[c] -= r;
            hi[c] += r;
        }
        DenseBox::new(f, n, lo, hi)
    }

    /// Per-point weighted sums of `|u(x) - u(y)|^2`, split into partners
    /// inside and outside `split`. Pairs of two clamped points are skipped.
    fn pair_sums<F: LatticeField + ?Sized>(
        &self,
        f: &F,
        u: &SiteSet,
        split: &SiteSet,
    ) -> Vec<(f64, f64)> {
        if u.is_empty() {
            return Vec::new();
        }
        let dense = self.dense(f, u);
        let n = self.grid.dim();
        let offs: Vec<isize> = self
            .stencil
            .offsets()
            .iter()
            .map(|d| dense.linear_offset(d))
            .collect();
        let mut member = vec![false; dense.values.len()];
        for p in split.points() {
            let inside = (0..n).all(|c| p[c] >= dense.lo[c] && p[c] < dense.lo[c] + dense.dims[c]);
            if inside {
                member[dense.index(p)] = true;
            }
        }
        u.points()
            .par_iter()
            .map(|x| {
                let bx = dense.index(x) as isize;
                let vx = dense.values[bx as usize];
                let cx = dense.clamped[bx as usize];
                let (mut a_in, mut a_out) = (0.0, 0.0);
                for (k, &o) in offs.iter().enumerate() {
                    let by = (bx + o) as usize;
                    if cx && dense.clamped[by] {
                        continue;
                    }
                    let d = vx - dense.values[by];
                    if d == 0.0 {
                        continue;
                    }
                    let t = self.stencil.weight_at(x, k) * d * d;
                    if member[by] {
                        a_in += t;
                    } else {
                        a_out += t;
                    }
                }
                (a_in, a_out)
            })
            .collect()
    }

    /// `K(u; U, V)` with the sum over `y` restricted by `v`.
    pub fn kinetic<F: LatticeField + ?Sized>(&self, f: &F, u: &SiteSet, v: Partner<'_>) -> f64 {
        let (set, inside) = match v {
            Partner::In(s) => (s, true),
            Partner::NotIn(s) => (s, false),
        };
        let sums = self.pair_sums(f, u, set);
        let parts: Vec<f64> = sums
            .iter()
            .map(|&(a, b)| if inside { a } else { b })
            .collect();
        0.5 * pairwise_sum(&parts)
    }

    /// `h^n sum_{x in omega} W(x, u(x))`.
    pub fn potential_term<F: LatticeField + ?Sized>(&self, f: &F, omega: &SiteSet) -> Result<f64> {
        let n = self.grid.dim();
        let pot = &self.medium.potential;
        let parts: Vec<Result<f64>> = omega
            .points()
            .par_iter()
            .map(|j| {
                if f.is_clamped(j) {
                    return Ok(0.0);
                }
                let (w, _) = pot.eval(&self.grid.cell_position(j)[..n], f.value(j))?;
                Ok(w)
            })
            .collect();
        let parts: Vec<f64> = parts.into_iter().collect::<Result<_>>()?;
        Ok(self.h_n * pairwise_sum(&parts))
    }

    /// `K(U,U) + 2 K(U, complement) + P(U)`.
    pub fn total_energy<F: LatticeField + ?Sized>(
        &self,
        f: &F,
        omega: &SiteSet,
    ) -> Result<EnergyReport> {
        if omega.is_empty() {
            return Err(Error::Misuse("energy of an empty region".into()));
        }
        let sums = self.pair_sums(f, omega, omega);
        let same = 0.5 * pairwise_sum(&sums.iter().map(|s| s.0).collect::<Vec<_>>());
        let cross = 0.5 * pairwise_sum(&sums.iter().map(|s| s.1).collect::<Vec<_>>());
        let pot = self.potential_term(f, omega)?;
        let tail = 4.0
            * self.h_n
            * omega.len() as f64
            * lattice_tail_mass(&self.medium.kernel, self.stencil.cutoff(), self.grid.h());
        Ok(EnergyReport::new(EnergyKind::Localized, same, cross, pot, tail))
    }
}

pub fn kinetic<F: LatticeField + ?Sized>(e: &LocalEnergy, f: &F, u: &SiteSet, v: Partner<'_>) -> f64 {
    e.kinetic(f, u, v)
}

pub fn potential_term<F: LatticeField + ?Sized>(e: &LocalEnergy, f: &F, omega: &SiteSet) -> Result<f64> {
    e.potential_term(f, omega)
}

pub fn total_energy<F: LatticeField + ?Sized>(
    e: &LocalEnergy,
    f: &F,
    omega: &SiteSet,
) -> Result<EnergyReport> {
    e.total_energy(f, omega)
}
