//! TOML experiment configuration.
//!
//! Every section has defaults, so the smallest valid file is a single
//! `[geometry]` table naming a direction. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use platelike_core::energy::DEFAULT_CUTOFF;
use platelike_core::geometry::{reciprocal_spacing, Direction, Strip};
use platelike_core::media::{
    anisotropic_bounds, kernel_truncate, KernelSpec, KernelVariant, MatrixCoefficient, Medium,
    PotentialCoefficient, PotentialSpec, PotentialVariant, ScalarCoefficient, TailSpec,
};
use platelike_core::minimize::{DescentMethod, DescentOptions, MinimizeOptions};
use platelike_core::verify::MinimalityOptions;
use platelike_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Normalized strip width below which a run needs `allow_narrow_strip`.
pub const MIN_NORMALIZED_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for every random choice (extra minimizer seeds, perturbations).
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub allow_narrow_strip: bool,
    pub kernel: KernelConfig,
    pub potential: PotentialConfig,
    pub geometry: GeometryConfig,
    pub minimize: MinimizeConfig,
    pub verify: VerifyConfig,
    pub sweep: SweepConfig,
    pub growth: GrowthConfig,
    pub diverge: DivergeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output: None,
            allow_narrow_strip: false,
            kernel: KernelConfig::default(),
            potential: PotentialConfig::default(),
            geometry: GeometryConfig::default(),
            minimize: MinimizeConfig::default(),
            verify: VerifyConfig::default(),
            sweep: SweepConfig::default(),
            growth: GrowthConfig::default(),
            diverge: DivergeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Homogeneous,
    Heterogeneous,
    Anisotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub s: f64,
    /// Ellipticity bounds; derived from the coefficient when absent.
    pub lambda: Option<f64>,
    pub upper: Option<f64>,
    pub coefficient: Option<ScalarCoefficient>,
    pub matrix: Option<MatrixCoefficient>,
    /// Truncation radius `R_j`.
    pub truncate: Option<f64>,
    pub tail: Option<TailSpec>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::Homogeneous,
            s: 0.75,
            lambda: None,
            upper: None,
            coefficient: None,
            matrix: None,
            truncate: None,
            tail: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Quartic,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub d: f64,
    pub coefficient: PotentialCoefficient,
    pub w_star: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            kind: PotentialKind::Quartic,
            d: 2.0,
            coefficient: PotentialCoefficient::Constant { value: 1.0 },
            w_star: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub direction: Vec<i64>,
    /// Strip bounds in `omega . x`; both or neither.
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Normalized width `(B - A) / |omega|` of a centred strip, used when
    /// `a` and `b` are absent.
    pub width: f64,
    pub h: f64,
    /// Window margin beyond the strip, in `omega . x`.
    pub buffer: f64,
    pub multiplier: Vec<i64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            direction: vec![0, 1],
            a: None,
            b: None,
            width: 12.0,
            h: 0.25,
            buffer: 2.0,
            multiplier: vec![1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeConfig {
    pub cutoff: f64,
    /// Extra random admissible seeds on top of the deterministic ones.
    pub random_seeds: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub method: DescentMethod,
    pub eps_min: f64,
    pub stabilize_tol: f64,
    pub max_rounds: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        let d = MinimizeOptions::default();
        Self {
            cutoff: DEFAULT_CUTOFF,
            random_seeds: 0,
            tol: d.descent.tol,
            max_iters: d.descent.max_iters,
            method: d.descent.method,
            eps_min: d.eps_min,
            stabilize_tol: d.stabilize_tol,
            max_rounds: d.max_rounds,
        }
    }
}

impl MinimizeConfig {
    pub fn options(&self) -> MinimizeOptions {
        MinimizeOptions {
            descent: DescentOptions {
                tol: self.tol,
                max_iters: self.max_iters,
                method: self.method,
                ..DescentOptions::default()
            },
            eps_min: self.eps_min,
            stabilize_tol: self.stabilize_tol,
            max_rounds: self.max_rounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub birkhoff: bool,
    pub birkhoff_thetas: Vec<f64>,
    pub birkhoff_radius: i64,
    pub halfspace: bool,
    pub halfspace_theta: f64,
    pub oscillation: bool,
    pub local_minimality: bool,
    pub trials: usize,
    /// Radius of the ball, centred in the strip, that the perturbations live in.
    pub minimality_radius: f64,
    pub ef_relation: bool,
    pub doubling: bool,
    pub doubling_multiplier: Vec<i64>,
    pub doubling_tol: f64,
    pub truncation: bool,
    pub truncation_radii: Vec<f64>,
    pub truncation_reference_cutoff: f64,
    pub truncation_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            birkhoff: true,
            birkhoff_thetas: vec![-0.5, 0.0, 0.5],
            birkhoff_radius: 2,
            halfspace: true,
            halfspace_theta: 0.5,
            oscillation: true,
            local_minimality: true,
            trials: 200,
            minimality_radius: 2.0,
            ef_relation: true,
            doubling: false,
            doubling_multiplier: vec![2],
            doubling_tol: 1e-4,
            truncation: false,
            truncation_radii: vec![2.0, 4.0, 8.0, 16.0],
            truncation_reference_cutoff: 32.0,
            truncation_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Include the sweep in `run`.
    pub enabled: bool,
    pub directions: Vec<Vec<i64>>,
    /// Normalized strip width shared by all directions.
    pub width: f64,
    /// Buffer in units of `|omega|`.
    pub buffer: f64,
    /// Interface widths must stay below this fraction of the strip width.
    pub width_fraction: f64,
    pub theta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            directions: vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 1], vec![3, 1], vec![3, 2]],
            width: 12.0,
            buffer: 2.0,
            width_fraction: 0.75,
            theta: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub enabled: bool,
    pub radii: Vec<f64>,
    /// Normalized strip width of the growth run.
    pub width: f64,
    /// Interaction cutoff of the growth run; the minimization cutoff if absent.
    pub cutoff: Option<f64>,
    /// Add interactions past the cutoff to the ball energies.
    pub far_field: bool,
    pub tolerance: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            radii: vec![4.0, 6.0, 8.0, 10.0],
            width: 28.0,
            cutoff: None,
            far_field: true,
            tolerance: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergeConfig {
    pub enabled: bool,
    pub windows: Vec<f64>,
    /// Normalized width of the probed strip.
    pub width: f64,
    /// Also probe the kernel truncated at this radius, which must converge.
    pub control_radius: Option<f64>,
}

impl Default for DivergeConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            windows: (1..=12).map(|k| f64::from(1u32 << k)).collect(),
            width: 2.0,
            control_radius: Some(4.0),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn direction(&self) -> Result<Direction> {
        Direction::new(&self.geometry.direction)
    }

    pub fn strip(&self) -> Result<Strip> {
        let dir = self.direction()?;
        match (self.geometry.a, self.geometry.b) {
            (Some(a), Some(b)) => Strip::new(a, b, dir),
            (None, None) => {
                let half = 0.5 * self.geometry.width * dir.norm();
                Strip::new(-half, half, dir)
            }
            _ => Err(Error::Config("give both strip bounds a and b, or neither".into())),
        }
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        let k = &self.kernel;
        let n = self.geometry.direction.len();
        let (variant, bounds) = match k.kind {
            KernelKind::Homogeneous => (KernelVariant::Homogeneous, (1.0, 1.0)),
            KernelKind::Heterogeneous => {
                let c = k.coefficient.clone().ok_or_else(|| {
                    Error::Config("heterogeneous kernel needs a scalar coefficient".into())
                })?;
                let b = match c {
                    ScalarCoefficient::Constant { value } => (value, value),
                    ScalarCoefficient::SumCosine { lo, hi } | ScalarCoefficient::XOnly { lo, hi } => (lo, hi),
                };
                (KernelVariant::Heterogeneous { coeff: c }, b)
            }
            KernelKind::Anisotropic => {
                let c = k.matrix.clone().ok_or_else(|| {
                    Error::Config("anisotropic kernel needs a matrix coefficient".into())
                })?;
                let b = anisotropic_bounds(n, k.s, &c);
                (KernelVariant::Anisotropic { coeff: c }, b)
            }
        };
        let lambda = k.lambda.unwrap_or(bounds.0);
        let upper = k.upper.unwrap_or(bounds.1);
        let mut spec = KernelSpec::new(n, k.s, lambda, upper, variant)?;
        if let Some(t) = k.tail {
            spec = spec.with_tail(t);
        }
        match k.truncate {
            Some(r) => kernel_truncate(&spec, r),
            None => Ok(spec),
        }
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        let p = &self.potential;
        let n = self.geometry.direction.len();
        let shape = match p.kind {
            PotentialKind::Quartic => PotentialVariant::Quartic { d: p.d },
            PotentialKind::Cosine => PotentialVariant::Cosine,
        };
        match p.w_star {
            Some(w) => PotentialSpec::new(n, shape, p.coefficient.clone(), w),
            None => PotentialSpec::with_sup_bound(n, shape, p.coefficient.clone()),
        }
    }

    pub fn medium(&self) -> Result<Medium> {
        Medium::new(self.kernel()?, self.potential()?)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        let strip = self.strip()?;
        reciprocal_spacing(self.geometry.h)?;
        let width = strip.normalized_width();
        if !self.allow_narrow_strip && width <= MIN_NORMALIZED_WIDTH {
            return Err(Error::Config(format!(
                "normalized strip width (B - A)/|omega| = {width} must exceed {MIN_NORMALIZED_WIDTH}; \
                 pass --allow-narrow-strip to override"
            )));
        }
        if !(self.geometry.buffer >= 0.0) {
            return Err(Error::Config("buffer must be nonnegative".into()));
        }
        if self.geometry.multiplier.len() + 1 != self.geometry.direction.len() {
            return Err(Error::Config(format!(
                "multiplier needs {} entries",
                self.geometry.direction.len() - 1
            )));
        }
        self.medium()?;
        for om in &self.sweep.directions {
            Direction::new(om)?;
        }
        if self.verify.minimality_radius >= 0.5 * width {
            return Err(Error::Config("minimality ball does not fit inside the strip".into()));
        }
        Ok(())
    }

    pub fn minimality_options(&self) -> MinimalityOptions {
        MinimalityOptions {
            trials: self.verify.trials,
            seed: self.seed,
            ..MinimalityOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("[geometry]\ndirection = [0, 1]\n").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn full_round_trip() {
        let mut c = ExperimentConfig::default();
        c.kernel.kind = KernelKind::Heterogeneous;
        c.kernel.coefficient = Some(ScalarCoefficient::SumCosine { lo: 0.5, hi: 2.0 });
        c.potential.coefficient = PotentialCoefficient::SineProduct { base: 1.0, amp: 0.5 };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
        let k = c.kernel().unwrap();
        assert_eq!((k.lambda, k.upper), (0.5, 2.0));
    }

    #[test]
    fn rejects_unknown_keys() {
        let e = ExperimentConfig::from_toml("[geometry]\ndirections = [0, 1]\n").unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
    }

    #[test]
    fn spacing_must_be_reciprocal() {
        let c = ExperimentConfig::from_toml("[geometry]\nh = 0.3\n").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("1/m")));
    }

    #[test]
    fn narrow_strip_needs_override() {
        let mut c = ExperimentConfig::default();
        c.geometry.width = 8.0;
        c.verify.minimality_radius = 1.0;
        assert!(c.validate().is_err());
        c.allow_narrow_strip = true;
        c.validate().unwrap();
    }

    #[test]
    fn one_sided_bounds_rejected() {
        let mut c = ExperimentConfig::default();
        c.geometry.a = Some(-6.0);
        assert!(c.validate().is_err());
        c.geometry.b = Some(6.0);
        c.validate().unwrap();
    }
}
