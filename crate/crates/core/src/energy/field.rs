use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Grid, Locus, Point};

/// Default interface threshold.
pub const THETA: f64 = 0.9;
/// Far-field value below the window.
pub const CLAMP_BELOW: f64 = 1.0;
/// Far-field value above the window.
pub const CLAMP_ABOVE: f64 = -1.0;

/// A field on the whole lattice that can be sampled pointwise.
pub trait LatticeField: Sync {
    fn value(&self, j: &Point) -> f64;
    /// True where the value is one of the fixed far-field constants.
    fn is_clamped(&self, j: &Point) -> bool;
}

/// One value per coset of window sites; ±1 outside the window.
#[derive(Debug, Clone)]
pub struct PeriodicField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    theta: f64,
}

impl PeriodicField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Misuse(format!(
                "field has {} values for {} sites",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::Domain(format!("field value {v} outside [-1, 1]")));
        }
        Ok(Self {
            grid,
            values,
            theta: THETA,
        })
    }

    /// Builds a field after clipping every value to `[-1, 1]`.
    pub fn clipped(grid: Arc<Grid>, mut values: Vec<f64>) -> Result<Self> {
        for v in &mut values {
            if v.is_nan() {
                return Err(Error::Domain("NaN field value".into()));
            }
            *v = v.clamp(-1.0, 1.0);
        }
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    /// Field from a function of the physical position.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.dim();
        let values = grid
            .sites()
            .iter()
            .map(|j| f(&grid.position(j)[..n]))
            .collect();
        Self::clipped(grid, values)
    }

    /// `1` below the strip, `-1` above, linear in `omega . x` in between.
    pub fn linear_profile(grid: Arc<Grid>) -> Result<Self> {
        let (a, b) = (grid.strip().a, grid.strip().b);
        let values = (0..grid.len())
            .map(|i| {
                let t = grid.normal(&grid.site(i));
                (1.0 - 2.0 * (t - a) / (b - a)).clamp(-1.0, 1.0)
            })
            .collect();
        Self::new(grid, values)
    }

    /// `+1` up to the middle of the strip, `-1` beyond.
    pub fn sign_step(grid: Arc<Grid>) -> Result<Self> {
        let mid = 0.5 * (grid.strip().a + grid.strip().b);
        let values = (0..grid.len())
            .map(|i| if grid.normal(&grid.site(i)) < mid { 1.0 } else { -1.0 })
            .collect();
        Self::new(grid, values)
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Replaces the values, clipping to `[-1, 1]`.
    pub fn set_values(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.values.len());
        for (dst, v) in self.values.iter_mut().zip(values) {
            *dst = v.clamp(-1.0, 1.0);
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Largest violation of the admissibility constraints.
    pub fn admissibility_violation(&self) -> f64 {
        let (a, b) = (self.grid.strip().a, self.grid.strip().b);
        let mut worst = 0.0f64;
        for (i, &v) in self.values.iter().enumerate() {
            worst = worst.max(v.abs() - 1.0);
            let t = self.grid.normal(&self.grid.site(i));
            if t <= a {
                worst = worst.max(THETA - v);
            }
            if t >= b {
                worst = worst.max(v + THETA);
            }
        }
        worst.max(0.0)
    }

    pub fn is_admissible(&self) -> bool {
        self.admissibility_violation() == 0.0
    }

    /// Sup-norm distance to another field on the same grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl LatticeField for PeriodicField {
    fn value(&self, j: &Point) -> f64 {
        match self.grid.locate(j) {
            Locus::Site(i) => self.values[i],
            Locus::Below => CLAMP_BELOW,
            Locus::Above => CLAMP_ABOVE,
        }
    }

    fn is_clamped(&self, j: &Point) -> bool {
        !matches!(self.grid.locate(j), Locus::Site(_))
    }
}

/// A periodic field plus a perturbation on finitely many lattice points
/// (not periodically extended).
pub struct Perturbed<'a> {
    base: &'a PeriodicField,
    bump: std::collections::HashMap<Point, f64>,
}

impl<'a> Perturbed<'a> {
    /// The perturbation must avoid clamped points.
    pub fn new(base: &'a PeriodicField, bump: &[(Point, f64)]) -> Result<Self> {
        let mut map = std::collections::HashMap::with_capacity(bump.len());
        for &(j, phi) in bump {
            if base.is_clamped(&j) {
                return Err(Error::Precondition(format!(
                    "perturbation at {:?} touches the clamped far field",
                    &j[..base.grid().dim()]
                )));
            }
            *map.entry(j).or_insert(0.0) += phi;
        }
        Ok(Self { base, bump: map })
    }
}

impl LatticeField for Perturbed<'_> {
    fn value(&self, j: &Point) -> f64 {
        self.base.value(j) + self.bump.get(j).copied().unwrap_or(0.0)
    }

    fn is_clamped(&self, j: &Point) -> bool {
        self.base.is_clamped(j)
    }
}
