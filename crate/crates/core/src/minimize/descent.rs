use serde::{Deserialize, Serialize};

use crate::energy::{EnergyReport, PeriodicEnergy, PeriodicField, THETA};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Strip};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentOptions {
    /// Stop when the projected gradient sup-norm drops to this.
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub shrink: f64,
    pub method: DescentMethod,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 50_000,
            armijo_c: 1e-4,
            shrink: 0.5,
            method: DescentMethod::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    Converged,
    MaxIters,
    /// The line search could not produce a decrease.
    Stalled,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerResult {
    #[serde(skip)]
    pub field: PeriodicField,
    pub energy: EnergyReport,
    pub iterations: usize,
    pub final_projected_gradient_norm: f64,
    pub seed_label: String,
    pub status: DescentStatus,
}

/// Per-site box `[lo, hi]` describing the admissible class.
pub(crate) fn bounds(grid: &Grid, strip: &Strip) -> (Vec<f64>, Vec<f64>) {
    let dir = grid.direction();
    let mut lo = Vec::with_capacity(grid.len());
    let mut hi = Vec::with_capacity(grid.len());
    for j in grid.sites() {
        let t = dir.level(j) as f64 / grid.denom() as f64;
        lo.push(if t <= strip.a { THETA } else { -1.0 });
        hi.push(if t >= strip.b { -THETA } else { 1.0 });
    }
    (lo, hi)
}

/// Clips to `[-1, 1]` and enforces the constraints below `A` and above `B`.
pub fn project_admissible(u: &PeriodicField, s: &Strip) -> PeriodicField {
    let (lo, hi) = bounds(u.grid(), s);
    let vals: Vec<f64> = u
        .values()
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect();
    let mut out = u.clone();
    out.set_values(&vals);
    out
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let gi = g[i];
        let blocked = (x[i] <= lo[i] && gi > 0.0) || (x[i] >= hi[i] && gi < 0.0);
        if !blocked {
            worst = worst.max(gi.abs());
        }
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Search direction used by [`descend`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentMethod {
    /// Steepest descent, step initialized by Barzilai-Borwein.
    ProjectedGradient,
    /// Limited-memory quasi-Newton direction on the free variables.
    ProjectedLbfgs,
}

impl Default for DescentMethod {
    fn default() -> Self {
        DescentMethod::ProjectedLbfgs
    }
}

const LBFGS_MEMORY: usize = 12;

struct History {
    s: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    rho: Vec<f64>,
}

impl History {
    fn new() -> Self {
        Self {
            s: Vec::new(),
            y: Vec::new(),
            rho: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if !(sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt()) {
            return;
        }
        if self.s.len() == LBFGS_MEMORY {
            self.s.remove(0);
            self.y.remove(0);
            self.rho.remove(0);
        }
        self.s.push(s);
        self.y.push(y);
        self.rho.push(1.0 / sy);
    }

    /// Two-loop recursion for `-H g`, with `free` masking active variables.
    fn direction(&self, g: &[f64], free: &[bool], gamma0: f64) -> Vec<f64> {
        let mask = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(free).map(|(&x, &f)| if f { x } else { 0.0 }).collect()
        };
        let mut q = mask(g);
        let k = self.s.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            let si = mask(&self.s[i]);
            alpha[i] = self.rho[i] * dot(&si, &q);
            for (qj, yj) in q.iter_mut().zip(&self.y[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        let gamma = match k {
            0 => gamma0,
            _ => 1.0 / (self.rho[k - 1] * dot(&self.y[k - 1], &self.y[k - 1])),
        };
        let mut r: Vec<f64> = mask(&q).iter().map(|v| gamma * v).collect();
        for i in 0..k {
            let yi = mask(&self.y[i]);
            let beta = self.rho[i] * dot(&yi, &r);
            for (rj, sj) in r.iter_mut().zip(&self.s[i]) {
                *rj += (alpha[i] - beta) * sj;
            }
        }
        mask(&r).into_iter().map(|v| -v).collect()
    }
}

/// Projected descent with Armijo backtracking on the auxiliary functional,
/// over the admissible class of the energy's grid. Accepted steps never
/// increase the energy.
pub fn descend(
    energy: &PeriodicEnergy,
    u0: &PeriodicField,
    opts: &DescentOptions,
    label: &str,
) -> Result<MinimizerResult> {
    let grid = energy.grid();
    if !(std::sync::Arc::ptr_eq(u0.grid_arc(), grid) || **grid == *u0.grid()) {
        return Err(Error::GridMismatch);
    }
    let (lo, hi) = bounds(grid, grid.strip());
    let mut x: Vec<f64> = u0
        .values()
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect();
    let f0 = energy.value(&x);
    if !f0.is_finite() {
        return Err(Error::Seed(format!("seed '{label}' has non-finite energy")));
    }
    let lip = energy.lipschitz_estimate().max(f64::MIN_POSITIVE);
    let (min_step, max_step) = (1e-3 / lip, 1e8 / lip);
    let mut step = 1.0 / lip;
    let mut g = energy.gradient(&x);
    let mut pg = projected_gradient_norm(&x, &g, &lo, &hi);
    let mut status = DescentStatus::MaxIters;
    let mut iters = 0;
    let mut trial = vec![0.0; x.len()];
    let mut history = History::new();
    while iters < opts.max_iters {
        if pg <= opts.tol {
            status = DescentStatus::Converged;
            break;
        }
        let free: Vec<bool> = (0..x.len())
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let (dir, mut alpha) = match opts.method {
            DescentMethod::ProjectedGradient => (g.iter().map(|v| -v).collect::<Vec<_>>(), step),
            DescentMethod::ProjectedLbfgs => {
                let d = history.direction(&g, &free, 1.0 / lip);
                if dot(&d, &g) < 0.0 {
                    (d, 1.0)
                } else {
                    history.clear();
                    (g.iter().map(|v| -v).collect(), 1.0 / lip)
                }
            }
        };
        let mut attempts = 0;
        let accepted = loop {
            for i in 0..x.len() {
                trial[i] = (x[i] + alpha * dir[i]).clamp(lo[i], hi[i]);
            }
            let d: Vec<f64> = trial.iter().zip(&x).map(|(t, v)| t - v).collect();
            let gd = dot(&g, &d);
            if gd < 0.0 {
                let df = energy.delta(&x, &trial);
                if df <= opts.armijo_c * gd {
                    break true;
                }
            }
            alpha *= opts.shrink;
            attempts += 1;
            if attempts > 60 {
                break false;
            }
        };
        if !accepted {
            if opts.method == DescentMethod::ProjectedLbfgs && !history.s.is_empty() {
                history.clear();
                continue;
            }
            status = DescentStatus::Stalled;
            break;
        }
        let g_new = energy.gradient(&trial);
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 {
            (dot(&s, &s) / sy).clamp(min_step, max_step)
        } else {
            (4.0 * alpha).min(max_step)
        };
        if opts.method == DescentMethod::ProjectedLbfgs {
            history.push(s, y);
        }
        std::mem::swap(&mut x, &mut trial);
        g = g_new;
        pg = projected_gradient_norm(&x, &g, &lo, &hi);
        iters += 1;
    }
    if status != DescentStatus::Converged && pg <= opts.tol {
        status = DescentStatus::Converged;
    }
    let field = PeriodicField::new(grid.clone(), x)?;
    let energy_report = energy.report(field.values());
    Ok(MinimizerResult {
        field,
        energy: energy_report,
        iterations: iters,
        final_projected_gradient_norm: pg,
        seed_label: label.to_string(),
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Direction};
    use crate::media::{KernelSpec, Medium, PotentialCoefficient, PotentialSpec};
    use std::sync::Arc;

    fn setup() -> (PeriodicEnergy, Arc<Grid>) {
        let d = Direction::new(&[0, 1]).unwrap();
        let g = Arc::new(build_grid(&Strip::new(-3.0, 3.0, d).unwrap(), 0.5, 2.0, &[1]).unwrap());
        let m = Medium::new(
            KernelSpec::homogeneous(2, 0.75).unwrap(),
            PotentialSpec::quartic(2, 2.0, PotentialCoefficient::Constant { value: 1.0 }).unwrap(),
        )
        .unwrap();
        (PeriodicEnergy::new(&m, g.clone(), 4.0).unwrap(), g)
    }

    #[test]
    fn projection_is_idempotent() {
        let (_, g) = setup();
        let zero = PeriodicField::constant(g.clone(), 0.0).unwrap();
        let p = project_admissible(&zero, g.strip());
        assert!(p.is_admissible());
        let pp = project_admissible(&p, g.strip());
        assert_eq!(p.values(), pp.values());
        for (i, &v) in p.values().iter().enumerate() {
            let t = g.normal(&g.site(i));
            let want = if t <= -3.0 { 0.9 } else if t >= 3.0 { -0.9 } else { 0.0 };
            assert_eq!(v, want);
        }
    }

    #[test]
    fn descent_lowers_energy_and_converges() {
        let (e, g) = setup();
        let u0 = PeriodicField::linear_profile(g).unwrap();
        let r = descend(&e, &u0, &DescentOptions::default(), "linear").unwrap();
        assert_eq!(r.status, DescentStatus::Converged);
        assert!(r.energy.total <= e.value(u0.values()));
        assert!(r.final_projected_gradient_norm <= 1e-8);
        assert!(r.field.is_admissible());
        let again = descend(&e, &r.field, &DescentOptions::default(), "restart").unwrap();
        assert!((again.energy.total - r.energy.total).abs() < 1e-8);
    }
}
