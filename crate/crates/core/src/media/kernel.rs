use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar coefficient `a(x, y)` of a heterogeneous kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScalarCoefficient {
    Constant { value: f64 },
    /// `lo + (hi - lo) * prod_i (1 + cos 2 pi (x_i + y_i)) / 2`.
    SumCosine { lo: f64, hi: f64 },
    /// `lo + (hi - lo) * prod_i (1 + cos 2 pi x_i) / 2`; not symmetric.
    XOnly { lo: f64, hi: f64 },
}

fn cosine_bump(z: impl Iterator<Item = f64>) -> f64 {
    z.map(|t| 0.5 * (1.0 + (2.0 * PI * t).cos())).product()
}

impl ScalarCoefficient {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            ScalarCoefficient::Constant { value } => value,
            ScalarCoefficient::SumCosine { lo, hi } => {
                lo + (hi - lo) * cosine_bump(x.iter().zip(y).map(|(a, b)| a + b))
            }
            ScalarCoefficient::XOnly { lo, hi } => lo + (hi - lo) * cosine_bump(x.iter().copied()),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, ScalarCoefficient::Constant { .. })
    }
}

/// Matrix coefficient `A(x, y)` of an anisotropic kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum MatrixCoefficient {
    /// Row-major symmetric positive definite matrix.
    Constant { entries: Vec<f64> },
    /// `(1 + eps * prod_i (1 + cos 2 pi (x_i + y_i)) / 2) * I`.
    ModulatedIdentity { eps: f64 },
}

impl MatrixCoefficient {
    fn quadratic(&self, x: &[f64], y: &[f64], d: &[f64]) -> f64 {
        match self {
            MatrixCoefficient::Constant { entries } => {
                let n = d.len();
                let mut q = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        q += d[i] * entries[i * n + j] * d[j];
                    }
                }
                q
            }
            MatrixCoefficient::ModulatedIdentity { eps } => {
                let scale = 1.0 + eps * cosine_bump(x.iter().zip(y).map(|(a, b)| a + b));
                scale * d.iter().map(|t| t * t).sum::<f64>()
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, MatrixCoefficient::Constant { .. })
    }

    /// Bounds on the Rayleigh quotient `<A d, d> / |d|^2`.
    fn spectral_bounds(&self, n: usize) -> (f64, f64) {
        match self {
            MatrixCoefficient::Constant { entries } => {
                if n == 2 {
                    let (a, b, c) = (entries[0], entries[1], entries[3]);
                    let mean = 0.5 * (a + c);
                    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                    (mean - r, mean + r)
                } else {
                    // Gershgorin discs are enough for a validator bound
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for i in 0..n {
                        let off: f64 = (0..n)
                            .filter(|&j| j != i)
                            .map(|j| entries[i * n + j].abs())
                            .sum();
                        lo = lo.min(entries[i * n + i] - off);
                        hi = hi.max(entries[i * n + i] + off);
                    }
                    (lo, hi)
                }
            }
            MatrixCoefficient::ModulatedIdentity { eps } => {
                (1.0f64.min(1.0 + eps), 1.0f64.max(1.0 + eps))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelVariant {
    /// `|x - y|^{-n-2s}`.
    Homogeneous,
    /// `a(x, y) |x - y|^{-n-2s}`.
    Heterogeneous { coeff: ScalarCoefficient },
    /// `<A(x, y)(x - y), x - y>^{-(n+2s)/2}`.
    Anisotropic { coeff: MatrixCoefficient },
    /// The base kernel times the indicator of `|x - y| <= radius`.
    Truncated {
        base: Box<KernelVariant>,
        radius: f64,
    },
}

/// Long-range power law `K(x, y) <= gamma / |x - y|^{n + beta}` for
/// `|x - y| >= r_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub gamma: f64,
    pub beta: f64,
    pub r_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    pub n: usize,
    pub s: f64,
    pub lambda: f64,
    pub upper: f64,
    pub variant: KernelVariant,
    pub tail: Option<TailSpec>,
}

impl KernelSpec {
    pub fn homogeneous(n: usize, s: f64) -> Result<Self> {
        Self::new(n, s, 1.0, 1.0, KernelVariant::Homogeneous)
    }

    /// Builds a kernel and derives its long-range data from the variant.
    pub fn new(n: usize, s: f64, lambda: f64, upper: f64, variant: KernelVariant) -> Result<Self> {
        if !(n == 2 || n == 3) {
            return Err(Error::Config(format!("dimension {n} not supported")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!("fractional order s={s} must lie in (0, 1)")));
        }
        if !(lambda > 0.0 && lambda <= upper) {
            return Err(Error::Config(format!(
                "ellipticity bounds need 0 < lambda <= Lambda, got {lambda}, {upper}"
            )));
        }
        let mut spec = Self {
            n,
            s,
            lambda,
            upper,
            variant,
            tail: None,
        };
        spec.tail = Some(spec.natural_tail());
        Ok(spec)
    }

    fn natural_tail(&self) -> TailSpec {
        match &self.variant {
            KernelVariant::Truncated { radius, .. } => TailSpec {
                gamma: self.upper,
                beta: 2.0,
                r_bar: *radius,
            },
            _ => TailSpec {
                gamma: self.upper,
                beta: 2.0 * self.s,
                r_bar: 1.0,
            },
        }
    }

    pub fn with_tail(mut self, tail: TailSpec) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn exponent(&self) -> f64 {
        self.n as f64 + 2.0 * self.s
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        let r = radius_or_inf(&self.variant);
        r.is_finite().then_some(r)
    }

    /// True when `K(x, y)` depends on `y - x` only.
    pub fn is_translation_invariant(&self) -> bool {
        fn inv(v: &KernelVariant) -> bool {
            match v {
                KernelVariant::Homogeneous => true,
                KernelVariant::Heterogeneous { coeff } => coeff.is_constant(),
                KernelVariant::Anisotropic { coeff } => coeff.is_constant(),
                KernelVariant::Truncated { base, .. } => inv(base),
            }
        }
        inv(&self.variant)
    }

    /// Kernel value; the diagonal is rejected.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.iter().zip(y).all(|(a, b)| a == b) {
            return Err(Error::Singular);
        }
        Ok(self.value(x, y))
    }

    /// Kernel value without the diagonal check.
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n;
        let mut d = [0.0; 3];
        let mut r2 = 0.0;
        for i in 0..n {
            d[i] = y[i] - x[i];
            r2 += d[i] * d[i];
        }
        self.variant_value(&self.variant, x, y, &d[..n], r2)
    }

    fn variant_value(&self, v: &KernelVariant, x: &[f64], y: &[f64], d: &[f64], r2: f64) -> f64 {
        let p = -0.5 * self.exponent();
        match v {
            KernelVariant::Homogeneous => r2.powf(p),
            KernelVariant::Heterogeneous { coeff } => coeff.eval(x, y) * r2.powf(p),
            KernelVariant::Anisotropic { coeff } => coeff.quadratic(x, y, d).powf(p),
            KernelVariant::Truncated { base, radius } => {
                if r2 > radius * radius {
                    0.0
                } else {
                    self.variant_value(base, x, y, d, r2)
                }
            }
        }
    }

    /// Upper bound on `int_{|z| > r} K(x, x + z) dz`, uniform in `x`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        if let Some(rt) = self.truncation_radius() {
            if rt <= r {
                return 0.0;
            }
        }
        let sphere = sphere_area(self.n);
        match self.tail {
            Some(t) if r >= t.r_bar && t.beta > 0.0 => t.gamma * sphere * r.powf(-t.beta) / t.beta,
            _ => self.upper * sphere * r.powf(-2.0 * self.s) / (2.0 * self.s),
        }
    }
}

fn radius_or_inf(v: &KernelVariant) -> f64 {
    match v {
        KernelVariant::Truncated { base, radius } => radius.min(radius_or_inf(base)),
        _ => f64::INFINITY,
    }
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked at construction"),
    }
}

pub fn kernel_eval(k: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    k.eval(x, y)
}

/// `K_j = K * chi(|x - y| <= radius)`.
pub fn kernel_truncate(k: &KernelSpec, radius: f64) -> Result<KernelSpec> {
    if !(radius >= 2.0) {
        return Err(Error::Config(format!(
            "truncation radius {radius} must be at least 2"
        )));
    }
    let variant = KernelVariant::Truncated {
        base: Box::new(k.variant.clone()),
        radius,
    };
    let mut out = KernelSpec {
        variant,
        tail: None,
        ..k.clone()
    };
    out.tail = Some(out.natural_tail());
    Ok(out)
}

/// Largest relative violations of the kernel hypotheses over random samples.
#[derive(Debug, Clone, Serialize)]
pub struct KernelValidation {
    pub samples: usize,
    pub symmetry: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub periodicity: f64,
    pub tail: f64,
    pub passed: bool,
}

pub const VALIDATION_TOLERANCE: f64 = 1e-12;

pub fn kernel_validate(k: &KernelSpec, sample_count: usize, seed: u64) -> KernelValidation {
    let n = k.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sym, mut lo, mut hi, mut per, mut tail) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let rel = |a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    };
    let reach = k.tail.map(|t| t.r_bar).unwrap_or(1.0).max(1.0) * 3.0;
    for _ in 0..sample_count {
        let mut x = [0.0; 3];
        let mut y = [0.0; 3];
        let radius = 0.05 + rng.gen::<f64>() * reach;
        let mut dir = [0.0; 3];
        let mut norm = 0.0;
        while norm < 1e-6 {
            for i in 0..n {
                dir[i] = rng.gen::<f64>() * 2.0 - 1.0;
            }
            norm = dir[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        for i in 0..n {
            x[i] = rng.gen::<f64>() * 4.0 - 2.0;
            y[i] = x[i] + radius * dir[i] / norm;
        }
        let (x, y) = (&x[..n], &y[..n]);
        let kxy = k.value(x, y);
        sym = sym.max(rel(kxy, k.value(y, x)));

        let r = radius;
        let base = r.powf(-k.exponent());
        let lower = if r <= 1.0 { k.lambda * base } else { 0.0 };
        if kxy < lower {
            lo = lo.max((lower - kxy) / lower);
        }
        let upper = k.upper * base;
        if kxy > upper {
            hi = hi.max((kxy - upper) / upper);
        }
        if let Some(t) = k.tail {
            if r >= t.r_bar {
                let bound = t.gamma * r.powf(-(n as f64) - t.beta);
                if kxy > bound {
                    tail = tail.max((kxy - bound) / bound);
                }
            }
        }
        let shift: Vec<f64> = (0..n).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
        let xs: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let ys: Vec<f64> = y.iter().zip(&shift).map(|(a, b)| a + b).collect();
        per = per.max(rel(kxy, k.value(&xs, &ys)));
        for i in 0..n {
            let mut xe = x.to_vec();
            let mut ye = y.to_vec();
            xe[i] += 1.0;
            ye[i] += 1.0;
            per = per.max(rel(kxy, k.value(&xe, &ye)));
        }
    }
    // round-off in periodic closed forms is a few ulps of the argument
    let passed = sym <= VALIDATION_TOLERANCE
        && lo <= VALIDATION_TOLERANCE
        && hi <= VALIDATION_TOLERANCE
        && per <= 1e-9
        && tail <= VALIDATION_TOLERANCE;
    KernelValidation {
        samples: sample_count,
        symmetry: sym,
        lower_bound: lo,
        upper_bound: hi,
        periodicity: per,
        tail,
        passed,
    }
}

/// Bounds implied by a matrix coefficient, for config validation.
pub fn anisotropic_bounds(n: usize, s: f64, coeff: &MatrixCoefficient) -> (f64, f64) {
    let (mu_lo, mu_hi) = coeff.spectral_bounds(n);
    let p = -0.5 * (n as f64 + 2.0 * s);
    (mu_hi.powf(p), mu_lo.powf(p))
}
