//! Brute-force reference implementations shared by the integration tests.
//! Everything here works from raw positions and literal double sums and
//! never touches the folded interaction matrix.
#![allow(dead_code)]

use std::sync::Arc;

use platelike_core::energy::cell_averaged_kernel;
use platelike_core::geometry::{build_grid, Direction, Grid, Point, Strip};
use platelike_core::media::{KernelSpec, Medium};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid(omega: &[i64], a: f64, b: f64, h: f64, buffer: f64, m: &[i64]) -> Arc<Grid> {
    let d = Direction::new(omega).unwrap();
    Arc::new(build_grid(&Strip::new(a, b, d).unwrap(), h, buffer, m).unwrap())
}

/// Value of the periodic extension at `y`, found by scanning all sites.
pub fn naive_value(g: &Grid, u: &[f64], y: &Point) -> (f64, bool) {
    let om = g.direction().omega_point();
    let level = om[0] * y[0] + om[1] * y[1] + om[2] * y[2];
    let (lo, hi) = g.level_range();
    if level < lo {
        return (1.0, true);
    }
    if level > hi {
        return (-1.0, true);
    }
    let z = g.direction().basis();
    let n = g.dim();
    for (i, s) in g.sites().iter().enumerate() {
        let d = [y[0] - s[0], y[1] - s[1], y[2] - s[2]];
        if om[0] * d[0] + om[1] * d[1] + om[2] * d[2] != 0 {
            continue;
        }
        if n == 2 {
            let zz = z[0][0] * z[0][0] + z[0][1] * z[0][1];
            let t = d[0] * z[0][0] + d[1] * z[0][1];
            let period = g.denom() * g.multiplier()[0] * zz;
            if t.rem_euclid(period) == 0 {
                return (u[i], false);
            }
        } else {
            unimplemented!("oracle lookup is two-dimensional");
        }
    }
    panic!("no site for {y:?}");
}

/// Literal pair weight `h^{2n} K(x, y)` from physical positions.
pub fn naive_weight(k: &KernelSpec, g: &Grid, x: &Point, y: &Point, cutoff: f64) -> f64 {
    let m = g.denom();
    let d2: i64 = (0..3).map(|c| (y[c] - x[c]).pow(2)).sum();
    if d2 == 0 || d2 as f64 > cutoff * cutoff * (m * m) as f64 * (1.0 + 1e-12) {
        return 0.0;
    }
    let n = g.dim();
    let px = g.position(x);
    let py = g.position(y);
    g.h().powi(2 * n as i32) * cell_averaged_kernel(k, &px[..n], &py[..n], g.h())
}

pub fn offsets(g: &Grid, cutoff: f64) -> Vec<Point> {
    let r = (cutoff * g.denom() as f64).floor() as i64 + 1;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            if [a, b] != [0, 0] {
                out.push([a, b, 0]);
            }
        }
    }
    out
}

/// Lattice points of the fundamental domain (window sites and clamped points
/// out to `reach`), enumerated by brute force over a box.
pub fn naive_fundamental_domain(g: &Grid, reach: f64) -> Vec<Point> {
    let q = g.quotient();
    let om = g.direction().omega_point();
    let (lo, hi) = g.level_range();
    let extra = (reach * g.direction().norm() * g.denom() as f64).ceil() as i64;
    let mut out = Vec::new();
    let span = 400;
    for a in -span..=span {
        for b in -span..=span {
            let j = [a, b, 0];
            let level = om[0] * a + om[1] * b;
            if level < lo - extra || level > hi + extra {
                continue;
            }
            if q.in_fundamental(&j) {
                out.push(j);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Auxiliary functional by a literal double sum over the fundamental domain.
/// Returns `(total, kinetic same, kinetic cross, potential)`.
pub fn naive_aux(medium: &Medium, g: &Grid, u: &[f64], cutoff: f64) -> (f64, f64, f64, f64) {
    let d_pts = naive_fundamental_domain(g, cutoff + 1.0);
    let offs = offsets(g, cutoff);
    let n = g.dim();
    let (mut same, mut cross, mut pot) = (0.0, 0.0, 0.0);
    for x in &d_pts {
        let (ux, cx) = naive_value(g, u, x);
        for d in &offs {
            let y = [x[0] + d[0], x[1] + d[1], 0];
            let (uy, cy) = naive_value(g, u, &y);
            if cx && cy {
                continue;
            }
            let w = naive_weight(&medium.kernel, g, x, &y, cutoff);
            let t = 0.5 * w * (ux - uy) * (ux - uy);
            if g.quotient().in_fundamental(&y) {
                same += t;
            } else {
                cross += t;
            }
        }
        if !cx {
            let p = g.cell_position(x);
            pot += g.h().powi(n as i32) * medium.potential.eval(&p[..n], ux).unwrap().0;
        }
    }
    (same + cross + pot, same, cross, pot)
}

/// Localized energy by a literal double sum; `value` gives the field.
pub fn naive_local(
    medium: &Medium,
    g: &Grid,
    value: &dyn Fn(&Point) -> (f64, bool),
    omega: &[Point],
    cutoff: f64,
) -> (f64, f64, f64, f64) {
    let set: std::collections::HashSet<Point> = omega.iter().copied().collect();
    let offs = offsets(g, cutoff);
    let n = g.dim();
    let (mut same, mut cross, mut pot) = (0.0, 0.0, 0.0);
    for x in omega {
        let (ux, cx) = value(x);
        for d in &offs {
            let y = [x[0] + d[0], x[1] + d[1], 0];
            let (uy, cy) = value(&y);
            if cx && cy {
                continue;
            }
            let w = naive_weight(&medium.kernel, g, x, &y, cutoff);
            let t = 0.5 * w * (ux - uy) * (ux - uy);
            if set.contains(&y) {
                same += t;
            } else {
                cross += t;
            }
        }
        if !cx {
            let p = g.cell_position(x);
            pot += g.h().powi(n as i32) * medium.potential.eval(&p[..n], ux).unwrap().0;
        }
    }
    (same + 2.0 * cross + pot, same, cross, pot)
}

/// Random admissible values: uniform in `[-1, 1]`, then pushed to the
/// constraint bounds outside the strip.
pub fn random_admissible(g: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..g.len())
        .map(|i| {
            let t = g.normal(&g.site(i));
            let v: f64 = rng.gen_range(-1.0..=1.0);
            if t <= g.strip().a {
                v.max(0.9)
            } else if t >= g.strip().b {
                v.min(-0.9)
            } else {
                v
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
