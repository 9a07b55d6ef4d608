use serde::Serialize;

use super::report::{linear_fit, VerificationReport};
use crate::energy::{FarField, LocalEnergy, PeriodicEnergy, PeriodicField, SiteSet};
use crate::error::{Error, Result};

/// `R^{1-2s}`, `log R` or `1` as `s` is below, at or above one half.
pub fn psi(s: f64, r: f64) -> f64 {
    if (s - 0.5).abs() < 1e-12 {
        r.ln()
    } else if s < 0.5 {
        r.powf(1.0 - 2.0 * s)
    } else {
        1.0
    }
}

/// Power of `R` in `R^{n-1} Psi_s(R)`, ignoring the logarithm at `s = 1/2`.
pub fn growth_exponent(n: usize, s: f64) -> f64 {
    n as f64 - 1.0 + (1.0 - 2.0 * s).max(0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthProfile {
    pub s: f64,
    pub n: usize,
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    /// `C R^{n-1} Psi_s(R)` with `C` fitted in log space at unit slope.
    pub reference: Vec<f64>,
    pub reference_constant: f64,
    /// Slope of `log E` against `log R`; `None` when some energy vanishes.
    pub fitted_exponent: Option<f64>,
    /// Slope of `log E` against `log(R^{n-1} Psi_s(R))`.
    pub reference_slope: Option<f64>,
    pub expected_exponent: f64,
    pub far_field: bool,
}

impl GrowthProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,energy,reference\n");
        for i in 0..self.radii.len() {
            out.push_str(&format!("{},{:e},{:e}\n", self.radii[i], self.energies[i], self.reference[i]));
        }
        out
    }

    /// Fitted slope within `tol` of the expected exponent, energies
    /// non-decreasing.
    pub fn check(&self, tol: f64) -> VerificationReport {
        let mut rep = VerificationReport::new("energy_growth", tol);
        let drops = self.energies.windows(2).filter(|w| w[1] < w[0]).count();
        rep.measure("expected_exponent", self.expected_exponent);
        rep.measure("decreases", drops as f64);
        match self.fitted_exponent {
            Some(a) => {
                rep.measure("fitted_exponent", a);
                rep.measure("deviation", (a - self.expected_exponent).abs());
                rep.passed = drops == 0 && (a - self.expected_exponent).abs() <= tol;
            }
            None => {
                rep.passed = drops == 0;
                rep.skipped = true;
            }
        }
        rep
    }
}

/// `E(u; B_R(center))` for increasing radii, with interactions past the
/// stencil cutoff added when `far` is given.
pub fn energy_growth_profile(
    energy: &PeriodicEnergy,
    u: &PeriodicField,
    center: &[f64],
    radii: &[f64],
    far: Option<&FarField>,
) -> Result<GrowthProfile> {
    let g = energy.grid();
    let n = g.dim();
    if *u.grid() != **g {
        return Err(Error::GridMismatch);
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 1.0 {
        return Err(Error::Misuse("radii must exceed 1 and increase".into()));
    }
    let dir = g.direction();
    let t = dir.project(&center[..n]);
    let (lo, hi) = g.level_range();
    let (wlo, whi) = (lo as f64 * g.h(), hi as f64 * g.h());
    let r_max = radii[radii.len() - 1] + 2.0;
    if t - r_max * dir.norm() < wlo || t + r_max * dir.norm() > whi {
        return Err(Error::Precondition(format!(
            "radius too large for window: B_{r_max} around the centre leaves [{wlo}, {whi}]"
        )));
    }
    let local = LocalEnergy::from_periodic(energy);
    let mut energies = Vec::with_capacity(radii.len());
    for &r in radii {
        let ball = SiteSet::ball(g, &center[..n], r);
        let rep = local.total_energy(u, &ball)?;
        let extra = match far {
            Some(f) => {
                let (same, cross) = f.correction(u, &ball)?;
                same + 2.0 * cross
            }
            None => 0.0,
        };
        energies.push(rep.total + extra);
    }
    let s = energy.medium().kernel.s;
    let base: Vec<f64> = radii.iter().map(|&r| r.powi(n as i32 - 1) * psi(s, r)).collect();
    let positive = energies.iter().all(|&e| e > 0.0);
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let lb: Vec<f64> = base.iter().map(|b| b.ln()).collect();
    let le: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
    let (fitted, refslope, constant) = if positive && radii.len() >= 2 {
        let c = le.iter().zip(&lb).map(|(e, b)| e - b).sum::<f64>() / le.len() as f64;
        (Some(linear_fit(&lr, &le).0), Some(linear_fit(&lb, &le).0), c.exp())
    } else {
        (None, None, 0.0)
    };
    Ok(GrowthProfile {
        s,
        n,
        radii: radii.to_vec(),
        reference: base.iter().map(|b| constant * b).collect(),
        energies,
        reference_constant: constant,
        fitted_exponent: fitted,
        reference_slope: refslope,
        expected_exponent: growth_exponent(n, s),
        far_field: far.is_some(),
    })
}
