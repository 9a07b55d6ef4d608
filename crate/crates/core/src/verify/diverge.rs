use super::report::{linear_fit, VerificationReport};
use crate::energy::far::tanh_sinh;
use crate::error::{Error, Result};
use crate::geometry::{reciprocal_spacing, Strip};
use crate::media::KernelSpec;

/// Smallest jump `|u(x) - u(y)|` between the two constrained half-spaces.
const JUMP: f64 = 1.8;

/// Sum over lattice points `d = delta e + t z` of `h^4 K(h d)`, all `t`.
fn line_total(kernel: &KernelSpec, e: [i64; 2], z: [i64; 2], omega: [f64; 2], h: f64, delta: i64) -> f64 {
    let pair = h.powi(4);
    let z2 = (z[0] * z[0] + z[1] * z[1]) as f64;
    let zn = z2.sqrt();
    let wn = (omega[0] * omega[0] + omega[1] * omega[1]).sqrt();
    let d0 = [delta * e[0], delta * e[1]];
    let dz = (d0[0] * z[0] + d0[1] * z[1]) as f64;
    let tau_of = |t: i64| (dz + t as f64 * z2) * h / zn;
    let normal = delta as f64 * h / wn;
    let k_at = |tau: f64| {
        let y = [
            tau * z[0] as f64 / zn + normal * omega[0] / wn,
            tau * z[1] as f64 / zn + normal * omega[1] / wn,
        ];
        pair * kernel.value(&[0.0, 0.0], &y)
    };
    let t_max = kernel.truncation_radius().unwrap_or(32.0);
    let t_lo = ((-t_max * zn / h - dz) / z2).ceil() as i64;
    let t_hi = ((t_max * zn / h - dz) / z2).floor() as i64;
    let mut acc: f64 = (t_lo..=t_hi).map(|t| k_at(tau_of(t))).sum();
    if kernel.truncation_radius().is_none() {
        let step = zn * h;
        for (t0, sign) in [(t_hi + 1, 1.0), (t_lo - 1, -1.0)] {
            let a = sign * tau_of(t0);
            let f = |x: f64| k_at(sign * x);
            let integral = tanh_sinh(|v| if v > 0.0 { f(a / v) * a / (v * v) } else { 0.0 }, 0.0, 1.0);
            let eps = 1e-4 * a;
            let slope = (f(a + eps) - f(a - eps)) / (2.0 * eps);
            acc += integral / step + 0.5 * f(a) - step * slope / 12.0;
        }
    }
    acc
}

/// Long-range exponent `beta` of a kernel: the declared tail if any,
/// otherwise `2s`.
pub fn tail_beta(kernel: &KernelSpec) -> f64 {
    kernel.tail.map(|t| t.beta).unwrap_or(2.0 * kernel.s)
}

/// Cross-strip kinetic sum between the half-space below `A` and the part
/// of one fundamental domain at normal distance `[0, L]` above `B`, for
/// each window length `L`, using the smallest jump allowed by the
/// constraints.
///
/// A kernel with `beta <= 1` must produce sums that keep growing; a
/// truncated kernel is accepted as a control and must produce sums that
/// stop growing.
pub fn divergence_probe(kernel: &KernelSpec, strip: &Strip, windows: &[f64], h: f64) -> Result<VerificationReport> {
    let truncated = kernel.truncation_radius().is_some();
    let beta = tail_beta(kernel);
    if !truncated && beta > 1.0 {
        return Err(Error::Misuse(format!(
            "divergence probe needs a tail exponent beta <= 1, got {beta}"
        )));
    }
    if kernel.n != 2 || strip.direction.dim() != 2 {
        return Err(Error::Misuse("divergence probe is implemented in two dimensions".into()));
    }
    if !kernel.is_translation_invariant() {
        return Err(Error::Misuse("divergence probe needs a translation-invariant kernel".into()));
    }
    if windows.len() < 2 || windows.windows(2).any(|w| w[1] <= w[0]) || windows[0] <= 0.0 {
        return Err(Error::Misuse("window lengths must be positive and increasing".into()));
    }
    let denom = reciprocal_spacing(h)?;
    let dir = &strip.direction;
    let e = dir.transversal();
    let z = dir.basis()[0];
    let om = dir.omega();
    let omega = [om[0] as f64, om[1] as f64];
    let wn = dir.norm();
    let level_a = (strip.a * denom as f64).floor() as i64;
    let level_b = (strip.b * denom as f64).ceil() as i64;
    let top = level_b + (windows[windows.len() - 1] * wn * denom as f64).floor() as i64;
    let d_max = top - level_a;
    let lines: Vec<f64> = {
        use rayon::prelude::*;
        (1..=d_max)
            .into_par_iter()
            .map(|d| line_total(kernel, [e[0], e[1]], [z[0], z[1]], omega, h, d))
            .collect()
    };
    // Everything past d_max, closed with the power law of the kernel.
    let mut acc = 0.0;
    if !truncated {
        let s = kernel.s;
        let gap = h / wn;
        let d1 = (d_max + 1) as f64 * gap;
        let i1 = tanh_sinh(
            |th| {
                let y = [
                    th.sin() * z[0] as f64 / wn + th.cos() * omega[0] / wn,
                    th.sin() * z[1] as f64 / wn + th.cos() * omega[1] / wn,
                ];
                kernel.value(&[0.0, 0.0], &y) * th.cos().powf(2.0 * s)
            },
            -0.5 * std::f64::consts::PI,
            0.5 * std::f64::consts::PI,
        );
        let c = h.powi(4) / (wn * h) * i1;
        acc = c * d1.powf(-2.0 * s) / (2.0 * s * gap) + 0.5 * c * d1.powf(-1.0 - 2.0 * s)
            + gap * (1.0 + 2.0 * s) * c * d1.powf(-2.0 - 2.0 * s) / 12.0;
    }
    // suffix[d] = sum of lines at offsets >= d
    let mut suffix = vec![0.0; (d_max + 2) as usize];
    suffix[(d_max + 1) as usize] = acc;
    for d in (1..=d_max).rev() {
        suffix[d as usize] = suffix[(d + 1) as usize] + lines[(d - 1) as usize];
    }
    let per_level = denom as f64;
    let weight = JUMP * JUMP * per_level;

    let mut sums = Vec::with_capacity(windows.len());
    let mut level = level_b;
    let mut running = 0.0;
    for &l in windows {
        let last = level_b + (l * wn * denom as f64).floor() as i64;
        while level <= last {
            running += weight * suffix[(level - level_a) as usize];
            level += 1;
        }
        sums.push(running);
    }

    let incs: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
    let ratio = sums[sums.len() - 1] / sums[0];
    let first = incs[0];
    let last_inc = incs[incs.len() - 1];
    let divergent = ratio > 5.0 && first > 0.0 && last_inc >= 0.5 * first;
    let ln_l: Vec<f64> = windows.iter().map(|l| l.ln()).collect();
    let log_rate = linear_fit(&ln_l, &sums).0;
    let ln_s: Vec<f64> = sums.iter().map(|s| s.ln()).collect();
    let power = linear_fit(&ln_l, &ln_s).0;

    let name = if truncated { "divergence_control" } else { "divergence" };
    let mut rep = VerificationReport::new(name, 0.5);
    rep.header = ["window", "sum", "increment"].map(String::from).to_vec();
    for (i, (&l, &s)) in windows.iter().zip(&sums).enumerate() {
        let inc = if i == 0 { s } else { incs[i - 1] };
        rep.rows.push(vec![l.to_string(), format!("{s:e}"), format!("{inc:e}")]);
    }
    rep.measure("beta", beta);
    rep.measure("ratio_last_first", ratio);
    rep.measure("increment_ratio_last_first", last_inc / first);
    rep.measure("slope_vs_log_window", log_rate);
    rep.measure("log_log_slope", power);
    rep.measure("divergent", if divergent { 1.0 } else { 0.0 });
    rep.passed = divergent != truncated;
    Ok(rep)
}
