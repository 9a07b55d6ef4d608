use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed around `[-1, 1]` when evaluating the potential.
pub const DOMAIN_SLACK: f64 = 0.05;

/// Unit-periodic positive coefficient `Q(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PotentialCoefficient {
    Constant { value: f64 },
    /// `base + amp * prod_i sin(2 pi x_i)`.
    SineProduct { base: f64, amp: f64 },
    /// `base + amp * mean_i cos(2 pi x_i)`.
    CosineMean { base: f64, amp: f64 },
}

impl PotentialCoefficient {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            PotentialCoefficient::Constant { value } => value,
            PotentialCoefficient::SineProduct { base, amp } => {
                base + amp * x.iter().map(|t| (2.0 * PI * t).sin()).product::<f64>()
            }
            PotentialCoefficient::CosineMean { base, amp } => {
                base + amp * x.iter().map(|t| (2.0 * PI * t).cos()).sum::<f64>() / x.len() as f64
            }
        }
    }

    /// Closed-form range of the coefficient.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            PotentialCoefficient::Constant { value } => (value, value),
            PotentialCoefficient::SineProduct { base, amp }
            | PotentialCoefficient::CosineMean { base, amp } => {
                (base - amp.abs(), base + amp.abs())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialVariant {
    /// `Q(x) |1 - r^2|^d`.
    Quartic { d: f64 },
    /// `Q(x) (1 + cos pi r)`.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub n: usize,
    pub variant: PotentialVariant,
    pub coeff: PotentialCoefficient,
    pub w_star: f64,
}

impl PotentialSpec {
    pub fn new(
        n: usize,
        variant: PotentialVariant,
        coeff: PotentialCoefficient,
        w_star: f64,
    ) -> Result<Self> {
        if let PotentialVariant::Quartic { d } = variant {
            if !(d > 1.0) {
                return Err(Error::Config(format!("well exponent d={d} must exceed 1")));
            }
        }
        let (q_lo, _) = coeff.range();
        if !(q_lo > 0.0) {
            return Err(Error::Config("potential coefficient Q must be positive".into()));
        }
        if !(w_star > 0.0) {
            return Err(Error::Config("W* must be positive".into()));
        }
        Ok(Self {
            n,
            variant,
            coeff,
            w_star,
        })
    }

    pub fn quartic(n: usize, d: f64, coeff: PotentialCoefficient) -> Result<Self> {
        Self::with_sup_bound(n, PotentialVariant::Quartic { d }, coeff)
    }

    /// `W*` taken as the supremum of `W` over `[-1, 1]`.
    pub fn with_sup_bound(n: usize, shape: PotentialVariant, coeff: PotentialCoefficient) -> Result<Self> {
        let (_, q_hi) = coeff.range();
        let w_star = q_hi * well_sup(&shape);
        Self::new(n, shape, coeff, w_star)
    }

    /// The `r`-profile `w(r)` with `W(x, r) = Q(x) w(r)`.
    pub fn well(&self, r: f64) -> f64 {
        match self.variant {
            PotentialVariant::Quartic { d } => (1.0 - r * r).abs().powf(d),
            PotentialVariant::Cosine => 1.0 + (PI * r).cos(),
        }
    }

    pub fn well_derivative(&self, r: f64) -> f64 {
        match self.variant {
            PotentialVariant::Quartic { d } => {
                let b = 1.0 - r * r;
                if b == 0.0 {
                    0.0
                } else {
                    d * b.abs().powf(d - 1.0) * b.signum() * (-2.0 * r)
                }
            }
            PotentialVariant::Cosine => -PI * (PI * r).sin(),
        }
    }

    /// `w(r1) - w(r0)` without cancellation when the arguments are close.
    pub fn well_delta(&self, r0: f64, r1: f64) -> f64 {
        match self.variant {
            PotentialVariant::Quartic { d } => {
                let b0 = 1.0 - r0 * r0;
                let b1 = 1.0 - r1 * r1;
                if b0 == 0.0 || b1 == 0.0 || b0.signum() != b1.signum() {
                    return self.well(r1) - self.well(r0);
                }
                // |b1|/|b0| = 1 + (b1 - b0)/b0, with b1 - b0 = (r0 - r1)(r0 + r1)
                let ratio_m1 = (r0 - r1) * (r0 + r1) / b0;
                let w0 = b0.abs().powf(d);
                w0 * (d * ratio_m1.ln_1p()).exp_m1()
            }
            PotentialVariant::Cosine => {
                -2.0 * (0.5 * PI * (r1 + r0)).sin() * (0.5 * PI * (r1 - r0)).sin()
            }
        }
    }

    fn check_domain(r: f64) -> Result<()> {
        if r.is_finite() && r.abs() <= 1.0 + DOMAIN_SLACK {
            Ok(())
        } else {
            Err(Error::Domain(format!("potential evaluated at r={r}")))
        }
    }

    /// `(W(x, r), W_r(x, r))`.
    pub fn eval(&self, x: &[f64], r: f64) -> Result<(f64, f64)> {
        Self::check_domain(r)?;
        let q = self.coeff.eval(x);
        Ok((q * self.well(r), q * self.well_derivative(r)))
    }

    /// Bound on `|W_rr|` over `r in [-1, 1]` and all `x`.
    pub fn curvature_bound(&self) -> f64 {
        let (_, q_hi) = self.coeff.range();
        let mut best = 0.0f64;
        let steps = 2000;
        let dr = 1e-6;
        for k in 0..=steps {
            let r = -1.0 + 2.0 * k as f64 / steps as f64;
            let lo = (r - dr).max(-1.0);
            let hi = (r + dr).min(1.0);
            let c = (self.well_derivative(hi) - self.well_derivative(lo)) / (hi - lo);
            best = best.max(c.abs());
        }
        q_hi * best
    }
}

/// `sup_{|r| <= 1} max(w, |w'|)`.
fn well_sup(v: &PotentialVariant) -> f64 {
    let tmp = PotentialSpec {
        n: 2,
        variant: v.clone(),
        coeff: PotentialCoefficient::Constant { value: 1.0 },
        w_star: 1.0,
    };
    (0..=20000)
        .map(|k| -1.0 + k as f64 * 1e-4)
        .map(|r| tmp.well(r).max(tmp.well_derivative(r).abs()))
        .fold(0.0, f64::max)
}

pub fn potential_eval(p: &PotentialSpec, x: &[f64], r: f64) -> Result<(f64, f64)> {
    p.eval(x, r)
}

/// Thresholds at which the well depth is tabulated.
pub const GAMMA_THETAS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];

#[derive(Debug, Clone, Serialize)]
pub struct PotentialValidation {
    /// `(theta, gamma(theta))` pairs.
    pub gamma: Vec<(f64, f64)>,
    pub gamma_positive: bool,
    pub gamma_non_increasing: bool,
    pub zeros_violation: f64,
    pub bound_violation: f64,
    pub periodicity_violation: f64,
    pub passed: bool,
}

/// `inf_{|r| <= theta} w(r)` by a dense scan followed by golden-section
/// refinement around the best sample.
pub fn well_depth(p: &PotentialSpec, theta: f64) -> f64 {
    let step = 1e-4;
    let count = ((2.0 * theta) / step).ceil() as usize;
    let mut best_r = -theta;
    let mut best = p.well(-theta);
    for k in 0..=count {
        let r = (-theta + k as f64 * step).min(theta);
        let v = p.well(r);
        if v < best {
            best = v;
            best_r = r;
        }
    }
    let (mut a, mut b) = ((best_r - step).max(-theta), (best_r + step).min(theta));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if p.well(c) < p.well(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(p.well(0.5 * (a + b))).min(p.well(theta)).min(p.well(-theta))
}

/// Infimum of `Q` over a dense sample of the unit cell.
pub fn coefficient_infimum(p: &PotentialSpec) -> f64 {
    let per_axis = 128usize;
    let total = per_axis.pow(p.n as u32);
    let mut lo = f64::INFINITY;
    let mut x = vec![0.0; p.n];
    for flat in 0..total {
        let mut rem = flat;
        for xi in x.iter_mut() {
            *xi = (rem % per_axis) as f64 / per_axis as f64;
            rem /= per_axis;
        }
        lo = lo.min(p.coeff.eval(&x));
    }
    lo
}

pub fn potential_validate(p: &PotentialSpec) -> PotentialValidation {
    let q_inf = coefficient_infimum(p);
    let gamma: Vec<(f64, f64)> = GAMMA_THETAS
        .iter()
        .map(|&t| (t, q_inf * well_depth(p, t)))
        .collect();
    let gamma_positive = gamma.iter().all(|&(_, g)| g > 0.0);
    let gamma_non_increasing = gamma.windows(2).all(|w| w[1].1 <= w[0].1);

    let mut zeros = 0.0f64;
    let mut bound = 0.0f64;
    let mut periodicity = 0.0f64;
    let per_axis = 17usize;
    let total = per_axis.pow(p.n as u32);
    let mut x = vec![0.0; p.n];
    for flat in 0..total {
        let mut rem = flat;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = (rem % per_axis) as f64 / per_axis as f64 - 0.31 * i as f64;
            rem /= per_axis;
        }
        let q = p.coeff.eval(&x);
        zeros = zeros.max((q * p.well(1.0)).abs()).max((q * p.well(-1.0)).abs());
        for k in 0..=200 {
            let r = -1.0 + k as f64 * 0.01;
            let w = q * p.well(r);
            let wr = (q * p.well_derivative(r)).abs();
            bound = bound.max(w.max(wr) - p.w_star);
            for i in 0..p.n {
                let mut xs = x.clone();
                xs[i] += 1.0;
                let ws = p.coeff.eval(&xs) * p.well(r);
                periodicity = periodicity.max((ws - w).abs() / w.abs().max(1e-300));
            }
        }
    }
    let bound_violation = bound.max(0.0);
    let passed = gamma_positive
        && gamma_non_increasing
        && zeros <= 1e-12
        && bound_violation <= 1e-12
        && periodicity <= 1e-9;
    PotentialValidation {
        gamma,
        gamma_positive,
        gamma_non_increasing,
        zeros_violation: zeros,
        bound_violation,
        periodicity_violation: periodicity,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic_unit() -> PotentialSpec {
        PotentialSpec::quartic(2, 2.0, PotentialCoefficient::Constant { value: 1.0 }).unwrap()
    }

    #[test]
    fn wells_vanish_at_pure_phases() {
        let p = quartic_unit();
        assert_eq!(p.eval(&[0.3, 0.7], 1.0).unwrap().0, 0.0);
        assert_eq!(p.eval(&[0.3, 0.7], -1.0).unwrap().0, 0.0);
        let c = PotentialSpec::new(2, PotentialVariant::Cosine, PotentialCoefficient::Constant { value: 1.0 }, 4.0)
            .unwrap();
        assert!(c.eval(&[0.0, 0.0], 1.0).unwrap().0.abs() < 1e-15);
    }

    #[test]
    fn quartic_centre() {
        let (w, wr) = quartic_unit().eval(&[0.0, 0.0], 0.0).unwrap();
        assert_eq!((w, wr), (1.0, 0.0));
    }

    #[test]
    fn cosine_values_and_derivative() {
        let c = PotentialSpec::new(2, PotentialVariant::Cosine, PotentialCoefficient::Constant { value: 1.0 }, 4.0)
            .unwrap();
        assert_eq!(c.eval(&[0.0, 0.0], 0.0).unwrap(), (2.0, 0.0));
        let (w, wr) = c.eval(&[0.0, 0.0], 0.5).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        assert!((wr + PI).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for p in [
            quartic_unit(),
            PotentialSpec::quartic(2, 1.5, PotentialCoefficient::Constant { value: 1.0 }).unwrap(),
            PotentialSpec::new(2, PotentialVariant::Cosine, PotentialCoefficient::Constant { value: 2.0 }, 8.0).unwrap(),
        ] {
            for k in 1..40 {
                let r = -0.975 + k as f64 * 0.05;
                let e = 1e-6;
                let fd = (p.eval(&[0.1, 0.2], r + e).unwrap().0 - p.eval(&[0.1, 0.2], r - e).unwrap().0) / (2.0 * e);
                assert!((fd - p.eval(&[0.1, 0.2], r).unwrap().1).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn delta_is_accurate() {
        let p = PotentialSpec::quartic(2, 2.5, PotentialCoefficient::Constant { value: 1.0 }).unwrap();
        let c = PotentialSpec::new(2, PotentialVariant::Cosine, PotentialCoefficient::Constant { value: 1.0 }, 4.0)
            .unwrap();
        for q in [&p, &c] {
            for &(a, b) in &[(0.3, 0.31), (-0.7, 0.2), (0.999, 0.9991), (0.5, 0.5)] {
                let direct = q.well(b) - q.well(a);
                assert!((q.well_delta(a, b) - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn domain_is_enforced() {
        assert!(matches!(quartic_unit().eval(&[0.0, 0.0], 1.2), Err(Error::Domain(_))));
        assert!(quartic_unit().eval(&[0.0, 0.0], 1.04).is_ok());
    }

    #[test]
    fn exponent_must_exceed_one() {
        assert!(PotentialSpec::quartic(2, 1.0, PotentialCoefficient::Constant { value: 1.0 }).is_err());
    }

    #[test]
    fn gamma_table() {
        let rep = potential_validate(&quartic_unit());
        assert!(rep.passed, "{rep:?}");
        let g99 = rep.gamma.last().unwrap().1;
        assert!((g99 - (1.0f64 - 0.99 * 0.99).powi(2)).abs() < 1e-12);
        assert!((g99 - 3.9601e-4).abs() < 1e-8);
        assert_eq!(rep.gamma[0].1, 1.0);

        let mod_q = PotentialSpec::quartic(2, 2.0, PotentialCoefficient::SineProduct { base: 1.5, amp: 0.5 }).unwrap();
        let rep2 = potential_validate(&mod_q);
        assert!(rep2.passed, "{rep2:?}");
        for (a, b) in rep.gamma.iter().zip(&rep2.gamma) {
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn understated_bound_is_reported() {
        let p = PotentialSpec::new(
            2,
            PotentialVariant::Quartic { d: 2.0 },
            PotentialCoefficient::Constant { value: 1.0 },
            0.5,
        )
        .unwrap();
        let rep = potential_validate(&p);
        assert!(!rep.passed);
        assert!(rep.bound_violation > 0.4);
    }
}
