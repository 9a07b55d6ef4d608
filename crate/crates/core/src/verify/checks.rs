use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{linear_fit, VerificationReport};
use crate::energy::{LatticeField, LocalEnergy, PeriodicEnergy, PeriodicField, Perturbed, SiteSet};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};
use crate::minimize::translate;

/// Band in `u`-value inside which level-set inclusions are not enforced.
pub const BIRKHOFF_BAND: f64 = 1e-6;

/// Spread of `omega . x / |omega|` over window sites with `|u| < theta`.
pub fn interface_width(u: &PeriodicField, theta: f64) -> f64 {
    let g = u.grid();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &v) in u.values().iter().enumerate() {
        if v.abs() < theta {
            let t = g.normalized_normal(&g.site(i));
            lo = lo.min(t);
            hi = hi.max(t);
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// All nonzero integer vectors with `|k|_inf <= radius`.
pub fn integer_box(n: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let side = 2 * radius + 1;
    for flat in 0..side.pow(n as u32) {
        let mut rem = flat;
        let k: Vec<i64> = (0..n)
            .map(|_| {
                let c = rem % side - radius;
                rem /= side;
                c
            })
            .collect();
        if k.iter().any(|&c| c != 0) {
            out.push(k);
        }
    }
    out
}

fn omega_dot(g: &Grid, k: &[i64]) -> i64 {
    g.direction().omega().iter().zip(k).map(|(a, b)| a * b).sum()
}

/// Level-set ordering under integer translations.
///
/// For `omega . k <= 0` every site with `u(x - k) > theta` must have
/// `u(x) > theta`, and the reverse inclusion is required for `omega . k >= 0`.
/// Sites where either value lies within the band of `theta` are not counted.
pub fn birkhoff_check(u: &PeriodicField, thetas: &[f64], ks: &[Vec<i64>]) -> Result<VerificationReport> {
    let g = u.grid();
    let mut rep = VerificationReport::new("birkhoff", BIRKHOFF_BAND);
    rep.header = ["theta", "k", "omega_dot_k", "violations", "max_excess"]
        .map(String::from)
        .to_vec();
    let mut total = 0usize;
    for k in ks {
        let kf: Vec<f64> = k.iter().map(|&c| c as f64).collect();
        let shifted = translate(u, &kf)?;
        let wk = omega_dot(g, k);
        for &theta in thetas {
            let mut count = 0usize;
            let mut excess = 0.0f64;
            for (&a, &b) in shifted.values().iter().zip(u.values()) {
                if (a - theta).abs() <= BIRKHOFF_BAND || (b - theta).abs() <= BIRKHOFF_BAND {
                    continue;
                }
                let bad = (wk <= 0 && a > theta && b < theta) || (wk >= 0 && b > theta && a < theta);
                if bad {
                    count += 1;
                    excess = excess.max((a - theta).abs().min((b - theta).abs()));
                }
            }
            total += count;
            let ks: Vec<String> = k.iter().map(|c| c.to_string()).collect();
            rep.rows.push(vec![
                theta.to_string(),
                ks.join(" "),
                wk.to_string(),
                count.to_string(),
                format!("{excess:e}"),
            ]);
        }
    }
    rep.measure("violations", total as f64);
    rep.measure("pairs", (thetas.len() * ks.len()) as f64);
    rep.passed = total == 0;
    Ok(rep)
}

/// Birkhoff property of an arbitrary set, checked on `points`: `E + k`
/// is contained in `E` when `omega . k <= 0` and contains it when
/// `omega . k >= 0`.
pub fn is_birkhoff_set(
    contains: impl Fn(&Point) -> bool,
    points: &[Point],
    ks: &[Point],
    omega: &Point,
) -> bool {
    ks.iter().all(|k| {
        let wk = omega[0] * k[0] + omega[1] * k[1] + omega[2] * k[2];
        points.iter().all(|x| {
            let back = [x[0] - k[0], x[1] - k[1], x[2] - k[2]];
            let (shifted, here) = (contains(&back), contains(x));
            !(wk <= 0 && shifted && !here) && !(wk >= 0 && here && !shifted)
        })
    })
}

/// If `{u > theta}` contains a ball of radius `sqrt(n)`, the half-space
/// below its centre must lie in `{u > theta}` as well.
pub fn halfspace_check(u: &PeriodicField, theta: f64) -> VerificationReport {
    let g = u.grid();
    let n = g.dim();
    let rep = VerificationReport::new("halfspace", BIRKHOFF_BAND);
    let radius = (n as f64).sqrt();
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(g.site_level(i)));
    let centre = order.into_iter().find(|&i| {
        let c = g.position(&g.site(i));
        let ball = SiteSet::ball(g, &c[..n], radius);
        ball.points().iter().all(|p| u.value(p) > theta + BIRKHOFF_BAND)
    });
    let Some(ci) = centre else {
        return rep.skip("no ball of radius sqrt(n) inside the superlevel set");
    };
    let mut rep = rep;
    let x0 = g.site(ci);
    let l0 = g.site_level(ci);
    let mut bad = 0usize;
    let mut worst = 0.0f64;
    for (i, &v) in u.values().iter().enumerate() {
        if g.site_level(i) < l0 && v <= theta - BIRKHOFF_BAND {
            bad += 1;
            worst = worst.max(theta - v);
        }
    }
    rep.measure("centre_normal", g.normalized_normal(&x0));
    rep.measure("violations", bad as f64);
    rep.measure("max_deficit", worst);
    rep.passed = bad == 0;
    rep
}

fn ball_normal_extent(g: &Grid, x0: &[f64], r: f64) -> (f64, f64) {
    let t = g.direction().project(x0);
    let w = g.direction().norm();
    (t - r * w, t + r * w)
}

/// Oscillation of `u` on balls `B_r(x0)` and the exponent of
/// `osc_r ~ (r / R)^alpha`.
pub fn oscillation_decay(u: &PeriodicField, x0: &[f64], big_r: f64, radii: &[f64]) -> Result<VerificationReport> {
    let g = u.grid();
    let n = g.dim();
    let (lo, hi) = ball_normal_extent(g, x0, big_r);
    let s = g.strip();
    if lo <= s.a || hi >= s.b {
        return Err(Error::Precondition(format!(
            "ball of radius {big_r} leaves the unconstrained part of the strip"
        )));
    }
    let mut rs: Vec<f64> = radii.iter().copied().filter(|&r| r < big_r).collect();
    rs.sort_by(f64::total_cmp);
    rs.push(big_r);
    let mut oscs = Vec::with_capacity(rs.len());
    for (i, &r) in rs.iter().enumerate() {
        let ball = SiteSet::ball(g, &x0[..n], r);
        if i == 0 && ball.len() < 2 {
            return Err(Error::Precondition(format!(
                "ball of radius {r} holds fewer than two grid points"
            )));
        }
        let vals: Vec<f64> = ball.points().iter().map(|p| u.value(p)).collect();
        let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mn = vals.iter().copied().fold(f64::INFINITY, f64::min);
        oscs.push(mx - mn);
    }
    let mut rep = VerificationReport::new("oscillation", 0.0);
    rep.header = ["r", "osc"].map(String::from).to_vec();
    for (r, o) in rs.iter().zip(&oscs) {
        rep.rows.push(vec![r.to_string(), format!("{o:e}")]);
    }
    let increases = oscs.windows(2).filter(|w| w[0] > w[1] + 1e-14).count();
    let pts: Vec<(f64, f64)> = rs
        .iter()
        .zip(&oscs)
        .filter(|(_, &o)| o > 0.0)
        .map(|(&r, &o)| ((r / big_r).ln(), o.ln()))
        .collect();
    let alpha = if oscs.iter().all(|&o| o == 0.0) {
        f64::INFINITY
    } else if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&x, &y).0
    } else {
        0.0
    };
    rep.measure("alpha", alpha);
    rep.measure("monotonicity_violations", increases as f64);
    rep.passed = increases == 0 && alpha > 0.0;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimalityOptions {
    pub trials: usize,
    pub seed: u64,
    pub amplitude: f64,
    /// Energy decreases below `rel_tol * |E|` are ignored.
    pub rel_tol: f64,
    /// Stationarity level of the tested field; scales the slope tolerance.
    pub gradient_tol: f64,
}

impl Default for MinimalityOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            amplitude: 0.2,
            rel_tol: 1e-8,
            gradient_tol: 1e-8,
        }
    }
}

/// Random smooth perturbations supported in `omega` must not lower the
/// localized energy, and the one-sided slope along each must be nonnegative.
/// Bumps are clipped to the admissible box, so sites beyond the strip only
/// move within their one-sided constraint.
pub fn local_minimality_test(
    energy: &PeriodicEnergy,
    u: &PeriodicField,
    omega: &SiteSet,
    opts: &MinimalityOptions,
) -> Result<VerificationReport> {
    let g = energy.grid();
    if *u.grid() != **g {
        return Err(Error::GridMismatch);
    }
    let n = g.dim();
    if omega.is_empty() {
        return Err(Error::Misuse("empty perturbation region".into()));
    }
    let local = LocalEnergy::from_periodic(energy);
    let e0 = local.total_energy(u, omega)?.total;
    let grad = energy.gradient(u.values());
    let tol_e = opts.rel_tol * e0.abs();
    let site_of = |p: &Point| -> Result<usize> {
        match g.locate(p) {
            crate::geometry::Locus::Site(i) => Ok(i),
            _ => Err(Error::Precondition(format!(
                "perturbation region reaches the clamped far field at {:?}",
                &p[..n]
            ))),
        }
    };
    let sites: Vec<usize> = omega.points().iter().map(site_of).collect::<Result<_>>()?;
    let (lo, hi) = crate::minimize::descent::bounds(g, g.strip());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rep = VerificationReport::new("local_minimality", tol_e);
    rep.header = ["trial", "amplitude", "radius", "delta_energy", "slope", "violation"]
        .map(String::from)
        .to_vec();
    let (mut e_bad, mut s_bad) = (0usize, 0usize);
    let mut worst = f64::INFINITY;
    for trial in 0..opts.trials {
        let c = omega.points()[rng.gen_range(0..omega.len())];
        let cx = g.position(&c);
        let radius = rng.gen_range(g.h()..=2.0);
        let amp = rng.gen_range(-opts.amplitude..=opts.amplitude);
        let mut bump = Vec::new();
        let mut slope = 0.0;
        let mut l1 = 0.0;
        for (p, &i) in omega.points().iter().zip(&sites) {
            let x = g.position(p);
            let d = (0..n).map(|k| (x[k] - cx[k]).powi(2)).sum::<f64>().sqrt();
            if d >= radius {
                continue;
            }
            let shape = (0.5 * std::f64::consts::PI * d / radius).cos().powi(2);
            let v = u.value(p);
            let phi = (v + amp * shape).clamp(lo[i], hi[i]) - v;
            if phi != 0.0 {
                bump.push((*p, phi));
                slope += phi * grad[i];
                l1 += phi.abs();
            }
        }
        let de = if bump.is_empty() {
            0.0
        } else {
            let v = Perturbed::new(u, &bump)?;
            local.total_energy(&v, omega)?.total - e0
        };
        let slope_tol = l1 * opts.gradient_tol + tol_e;
        let ebad = de < -tol_e;
        let sbad = slope < -slope_tol;
        e_bad += ebad as usize;
        s_bad += sbad as usize;
        worst = worst.min(de);
        rep.rows.push(vec![
            trial.to_string(),
            amp.to_string(),
            radius.to_string(),
            format!("{de:e}"),
            format!("{slope:e}"),
            (ebad || sbad).to_string(),
        ]);
    }
    rep.measure("energy", e0);
    rep.measure("trials", opts.trials as f64);
    rep.measure("energy_decreases", e_bad as f64);
    rep.measure("negative_slopes", s_bad as f64);
    rep.measure("min_delta_energy", if opts.trials > 0 { worst } else { 0.0 });
    rep.passed = e_bad == 0 && s_bad == 0;
    Ok(rep)
}

pub const EF_TOLERANCE: f64 = 1e-8;

/// Compares the change of the localized energy on the whole fundamental
/// domain with the change of the periodic functional plus the cross term,
/// for a perturbation `phi` (one value per window site, not extended).
pub fn ef_relation_check(energy: &PeriodicEnergy, u: &PeriodicField, phi: &[f64]) -> Result<VerificationReport> {
    let g = energy.grid();
    if *u.grid() != **g {
        return Err(Error::GridMismatch);
    }
    let cross = energy.cross_term(phi)?;
    let v: Vec<f64> = u.values().iter().zip(phi).map(|(a, b)| a + b).collect();
    let df = energy.delta(u.values(), &v);
    let bump: Vec<(Point, f64)> = phi
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(i, &p)| (g.site(i), p))
        .collect();
    let local = LocalEnergy::from_periodic(energy);
    let dom = SiteSet::fundamental_domain(g, energy.cutoff());
    let e_u = local.total_energy(u, &dom)?.total;
    let e_v = local.total_energy(&Perturbed::new(u, &bump)?, &dom)?.total;
    let lhs = e_v - e_u;
    let rhs = df + cross;
    let scale = lhs.abs().max(rhs.abs());
    let rel = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    let mut rep = VerificationReport::new("ef_relation", EF_TOLERANCE);
    rep.measure("localized_change", lhs);
    rep.measure("periodic_change", df);
    rep.measure("cross_term", cross);
    rep.measure("relative_error", rel);
    rep.passed = rel <= EF_TOLERANCE;
    Ok(rep)
}
