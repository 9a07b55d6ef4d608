//! Rational directions, the quotient by the orthogonal integer lattice,
//! strips and the computational grid.
//!
//! Lattice points of the grid `hZ^n` are stored as integer numerators `j`,
//! with physical position `x = j / denom` where `denom = 1/h`. All coset
//! arithmetic is done on these integers so that reductions are exact.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Integer lattice point; unused trailing components are zero.
pub type Point = [i64; 3];

pub const MAX_DIM: usize = 3;

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Returns `(g, x, y)` with `a x + b y = g = gcd(a, b) >= 0`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub(crate) fn dot(a: &Point, b: &Point) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn to_point(v: &[i64]) -> Point {
    let mut p = [0; 3];
    p[..v.len()].copy_from_slice(v);
    p
}

fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::InvalidDirection(format!(
            "dimension {n} is not supported (only 2 and 3)"
        )))
    }
}

/// Basis of the lattice `{k in Z^n : omega . k = 0}`.
///
/// In two dimensions the basis is `(b, -a)` for `omega = (a, b)` reduced to
/// coprime entries. In three dimensions short lattice vectors are enumerated
/// and the shortest pair whose cross product is `+-omega` is returned; that
/// condition is exactly the statement that the pair generates the whole
/// orthogonal lattice.
pub fn orthogonal_lattice_basis(omega: &[i64]) -> Result<Vec<Point>> {
    check_dim(omega.len())?;
    let g = omega.iter().fold(0, |acc, &w| gcd(acc, w));
    if g == 0 {
        return Err(Error::InvalidDirection("zero vector".into()));
    }
    let w = to_point(&omega.iter().map(|&c| c / g).collect::<Vec<_>>());
    if omega.len() == 2 {
        return Ok(vec![[w[1], -w[0], 0]]);
    }
    let mut bound = w.iter().map(|c| c.abs()).max().unwrap_or(1).max(1);
    loop {
        let mut cands = Vec::new();
        for a in -bound..=bound {
            for b in -bound..=bound {
                for c in -bound..=bound {
                    let k = [a, b, c];
                    if k != [0, 0, 0] && dot(&k, &w) == 0 {
                        cands.push(k);
                    }
                }
            }
        }
        cands.sort_by_key(|k| (dot(k, k), *k));
        if let Some(z1) = cands.first().copied() {
            let neg_w = [-w[0], -w[1], -w[2]];
            if let Some(z2) = cands.iter().copied().find(|z| {
                let c = cross(&z1, z);
                c == w || c == neg_w
            }) {
                return Ok(vec![z1, z2]);
            }
        }
        bound *= 2;
    }
}

/// A rational direction stored as a primitive integer vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Direction {
    n: usize,
    omega: Point,
    basis: Vec<Point>,
    norm: f64,
    /// Integer vector with `omega . e = 1`; completes `basis` to a basis of Z^n.
    #[serde(skip)]
    transversal: Point,
}

impl Direction {
    /// Builds a direction from any nonzero integer vector; common factors are
    /// divided out.
    pub fn new(omega: &[i64]) -> Result<Self> {
        let basis = orthogonal_lattice_basis(omega)?;
        let n = omega.len();
        let g = omega.iter().fold(0, |acc, &w| gcd(acc, w));
        let w = to_point(&omega.iter().map(|&c| c / g).collect::<Vec<_>>());
        let transversal = if n == 2 {
            let (_, x, y) = ext_gcd(w[0], w[1]);
            [x, y, 0]
        } else {
            let (g12, x, y) = ext_gcd(w[0], w[1]);
            let (_, p, q) = ext_gcd(g12, w[2]);
            [p * x, p * y, q]
        };
        debug_assert_eq!(dot(&w, &transversal), 1);
        let norm = (dot(&w, &w) as f64).sqrt();
        Ok(Self {
            n,
            omega: w,
            basis,
            norm,
            transversal,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> &[i64] {
        &self.omega[..self.n]
    }

    pub fn omega_point(&self) -> Point {
        self.omega
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn transversal(&self) -> Point {
        self.transversal
    }

    /// `omega . k` for an integer vector.
    pub fn level(&self, k: &Point) -> i64 {
        dot(&self.omega, k)
    }

    /// `omega . x` for a real point.
    pub fn project(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.omega.iter())
            .map(|(a, &b)| a * b as f64)
            .sum()
    }

    /// True when the integer vector is a combination of the basis vectors.
    pub fn in_lattice(&self, k: &Point) -> bool {
        self.level(k) == 0
    }
}

/// The relation `x ~ y iff y - x in m-scaled orthogonal lattice`, on the grid
/// `Z^n / denom`.
///
/// Tangential coordinates of a lattice point are the coefficients of its
/// orthogonal projection in the basis `z_i`; the fundamental domain is the
/// half-open box `0 <= c_i < m_i` in those coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Quotient {
    direction: Direction,
    denom: i64,
    mult: Vec<i64>,
    gram_adj: [[i64; 2]; 2],
    gram_det: i64,
}

impl Quotient {
    pub fn new(direction: Direction, denom: i64, mult: &[i64]) -> Result<Self> {
        let k = direction.n - 1;
        if mult.len() != k {
            return Err(Error::Config(format!(
                "period multiplier must have {k} entries, got {}",
                mult.len()
            )));
        }
        if mult.iter().any(|&m| m < 1) {
            return Err(Error::Config("period multiplier entries must be >= 1".into()));
        }
        if denom < 1 {
            return Err(Error::Config("grid denominator must be >= 1".into()));
        }
        let z = &direction.basis;
        let (gram_adj, gram_det) = if k == 1 {
            ([[1, 0], [0, 0]], dot(&z[0], &z[0]))
        } else {
            let g11 = dot(&z[0], &z[0]);
            let g12 = dot(&z[0], &z[1]);
            let g22 = dot(&z[1], &z[1]);
            ([[g22, -g12], [-g12, g11]], g11 * g22 - g12 * g12)
        };
        Ok(Self {
            direction,
            denom,
            mult: mult.to_vec(),
            gram_adj,
            gram_det,
        })
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn mult(&self) -> &[i64] {
        &self.mult
    }

    fn tangential_numerators(&self, j: &Point) -> [i64; 2] {
        let z = &self.direction.basis;
        if z.len() == 1 {
            [dot(&z[0], j), 0]
        } else {
            let p = [dot(&z[0], j), dot(&z[1], j)];
            [
                self.gram_adj[0][0] * p[0] + self.gram_adj[0][1] * p[1],
                self.gram_adj[1][0] * p[0] + self.gram_adj[1][1] * p[1],
            ]
        }
    }

    /// Tangential coordinates in physical units of the basis vectors.
    pub fn tangential(&self, j: &Point) -> Vec<f64> {
        let num = self.tangential_numerators(j);
        let scale = (self.gram_det * self.denom) as f64;
        (0..self.mult.len())
            .map(|i| num[i] as f64 / scale)
            .collect()
    }

    /// Representative of the coset of `j` and the integer coset coordinates
    /// `q` with `j = rep + denom * sum_i q_i m_i z_i`.
    pub fn reduce(&self, j: &Point) -> (Point, Vec<i64>) {
        let num = self.tangential_numerators(j);
        let mut rep = *j;
        let mut q = Vec::with_capacity(self.mult.len());
        for (i, &m) in self.mult.iter().enumerate() {
            let period = self.denom * m * self.gram_det;
            let qi = num[i].div_euclid(period);
            let z = self.direction.basis[i];
            for c in 0..3 {
                rep[c] -= qi * self.denom * m * z[c];
            }
            q.push(qi);
        }
        (rep, q)
    }

    /// Representative only; hot path of the energy assembly.
    pub fn representative(&self, j: &Point) -> Point {
        let num = self.tangential_numerators(j);
        let mut rep = *j;
        for (i, &m) in self.mult.iter().enumerate() {
            let period = self.denom * m * self.gram_det;
            let qi = num[i].div_euclid(period);
            if qi != 0 {
                let z = self.direction.basis[i];
                for c in 0..3 {
                    rep[c] -= qi * self.denom * m * z[c];
                }
            }
        }
        rep
    }

    /// True when `j` lies in the fundamental domain.
    pub fn in_fundamental(&self, j: &Point) -> bool {
        let num = self.tangential_numerators(j);
        self.mult.iter().enumerate().all(|(i, &m)| {
            let period = self.denom * m * self.gram_det;
            (0..period).contains(&num[i])
        })
    }

    /// True when `j` lies on the lower lateral face of the fundamental domain.
    pub fn on_lateral_face(&self, j: &Point) -> bool {
        let num = self.tangential_numerators(j);
        num[..self.mult.len()].iter().any(|&c| c == 0)
    }

    /// Lattice translation vector (in grid numerators) for coset coordinates.
    pub fn period_vector(&self, q: &[i64]) -> Point {
        let mut v = [0; 3];
        for (i, &qi) in q.iter().enumerate() {
            let z = self.direction.basis[i];
            for c in 0..3 {
                v[c] += qi * self.denom * self.mult[i] * z[c];
            }
        }
        v
    }
}

/// Representative of `x` in the unit-scale fundamental domain of `~_omega`
/// together with its coset coordinates.
pub fn reduce_to_fundamental(x: &[i64], d: &Direction) -> (Point, Vec<i64>) {
    let ones = vec![1; d.dim() - 1];
    let q = Quotient::new(d.clone(), 1, &ones).expect("unit quotient is always valid");
    q.reduce(&to_point(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StripSide {
    Below,
    Inside,
    Above,
}

/// The closed strip `A <= omega . x <= B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strip {
    pub a: f64,
    pub b: f64,
    pub direction: Direction,
}

impl Strip {
    pub fn new(a: f64, b: f64, direction: Direction) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("strip needs A < B, got A={a}, B={b}")));
        }
        Ok(Self { a, b, direction })
    }

    /// Strip of normalized width `width` starting at `omega . x = 0`.
    pub fn with_normalized_width(direction: Direction, width: f64) -> Result<Self> {
        let b = width * direction.norm();
        Self::new(0.0, b, direction)
    }

    pub fn normalized_width(&self) -> f64 {
        (self.b - self.a) / self.direction.norm()
    }

    pub fn classify(&self, x: &[f64]) -> StripSide {
        strip_classify(x, self)
    }
}

pub fn strip_classify(x: &[f64], s: &Strip) -> StripSide {
    let t = s.direction.project(x);
    if t < s.a {
        StripSide::Below
    } else if t > s.b {
        StripSide::Above
    } else {
        StripSide::Inside
    }
}

/// Where an arbitrary grid point sits relative to the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locus {
    Site(usize),
    /// Below the window, clamped to +1.
    Below,
    /// Above the window, clamped to -1.
    Above,
}

/// Returns `1/h` when `h` is the reciprocal of a positive integer.
pub fn reciprocal_spacing(h: f64) -> Result<i64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config(format!("grid spacing h={h} must be positive")));
    }
    let m = (1.0 / h).round();
    if m < 1.0 || ((m * h) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "grid spacing h={h} must be 1/m for an integer m so that integer translations map the grid onto itself"
        )));
    }
    Ok(m as i64)
}

/// Window sites over one fundamental domain of the (possibly m-fold) quotient.
#[derive(Debug, Clone)]
pub struct Grid {
    quotient: Quotient,
    strip: Strip,
    h: f64,
    buffer: f64,
    level_lo: i64,
    level_hi: i64,
    sites: Vec<Point>,
    levels: Vec<i64>,
    index: HashMap<Point, usize>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.quotient == other.quotient
            && self.strip == other.strip
            && self.level_lo == other.level_lo
            && self.level_hi == other.level_hi
    }
}

pub fn build_grid(s: &Strip, h: f64, buffer: f64, m: &[i64]) -> Result<Grid> {
    Grid::new(s, h, buffer, m)
}

impl Grid {
    pub fn new(strip: &Strip, h: f64, buffer: f64, m: &[i64]) -> Result<Self> {
        let denom = reciprocal_spacing(h)?;
        if !(buffer >= 2.0) {
            return Err(Error::Config(format!(
                "window buffer L={buffer} must be at least 2"
            )));
        }
        let quotient = Quotient::new(strip.direction.clone(), denom, m)?;
        let d = denom as f64;
        let level_lo = ((strip.a - buffer) * d - 1e-9).ceil() as i64;
        let level_hi = ((strip.b + buffer) * d + 1e-9).floor() as i64;
        let dir = quotient.direction();
        let e = dir.transversal();
        let basis = dir.basis().to_vec();
        let counts: Vec<i64> = m.iter().map(|&mi| mi * denom).collect();
        let per_level: i64 = counts.iter().product();

        let mut sites = Vec::with_capacity(((level_hi - level_lo + 1) * per_level) as usize);
        let mut levels = Vec::with_capacity(sites.capacity());
        for level in level_lo..=level_hi {
            let base = [e[0] * level, e[1] * level, e[2] * level];
            let mut row = Vec::with_capacity(per_level as usize);
            for flat in 0..per_level {
                let mut rem = flat;
                let mut j = base;
                for (i, &c) in counts.iter().enumerate() {
                    let a = rem % c;
                    rem /= c;
                    for k in 0..3 {
                        j[k] += a * basis[i][k];
                    }
                }
                row.push(quotient.representative(&j));
            }
            row.sort_unstable();
            row.dedup();
            debug_assert_eq!(row.len() as i64, per_level);
            for j in row {
                sites.push(j);
                levels.push(level);
            }
        }
        let index = sites.iter().enumerate().map(|(i, &j)| (j, i)).collect();
        Ok(Self {
            quotient,
            strip: strip.clone(),
            h,
            buffer,
            level_lo,
            level_hi,
            sites,
            levels,
            index,
        })
    }

    /// Same window and spacing with a different period multiplier.
    pub fn with_multiplier(&self, m: &[i64]) -> Result<Self> {
        Self::new(&self.strip, self.h, self.buffer, m)
    }

    pub fn dim(&self) -> usize {
        self.quotient.direction().dim()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn denom(&self) -> i64 {
        self.quotient.denom()
    }

    pub fn buffer(&self) -> f64 {
        self.buffer
    }

    pub fn strip(&self) -> &Strip {
        &self.strip
    }

    pub fn direction(&self) -> &Direction {
        self.quotient.direction()
    }

    pub fn quotient(&self) -> &Quotient {
        &self.quotient
    }

    pub fn multiplier(&self) -> &[i64] {
        self.quotient.mult()
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Point {
        self.sites[i]
    }

    /// Integer level `omega . j` of each site (normal coordinate times `1/h`).
    pub fn site_level(&self, i: usize) -> i64 {
        self.levels[i]
    }

    pub fn level_range(&self) -> (i64, i64) {
        (self.level_lo, self.level_hi)
    }

    /// Normal coordinate `omega . x` of a grid point.
    pub fn normal(&self, j: &Point) -> f64 {
        self.direction().level(j) as f64 / self.denom() as f64
    }

    /// Normal coordinate scaled by `1/|omega|`.
    pub fn normalized_normal(&self, j: &Point) -> f64 {
        self.normal(j) / self.direction().norm()
    }

    pub fn position(&self, j: &Point) -> [f64; 3] {
        let d = self.denom() as f64;
        [j[0] as f64 / d, j[1] as f64 / d, j[2] as f64 / d]
    }

    /// Position reduced modulo the unit cell, computed exactly from the
    /// integer numerators. Used to evaluate unit-periodic media.
    pub fn cell_position(&self, j: &Point) -> [f64; 3] {
        let m = self.denom();
        let d = m as f64;
        [
            j[0].rem_euclid(m) as f64 / d,
            j[1].rem_euclid(m) as f64 / d,
            j[2].rem_euclid(m) as f64 / d,
        ]
    }

    /// Index of the residue class of `j` modulo the unit cell.
    pub fn cell_class(&self, j: &Point) -> usize {
        let m = self.denom();
        let mut idx = 0i64;
        for c in (0..self.dim()).rev() {
            idx = idx * m + j[c].rem_euclid(m);
        }
        idx as usize
    }

    pub fn cell_class_count(&self) -> usize {
        (self.denom() as usize).pow(self.dim() as u32)
    }

    pub fn locate(&self, j: &Point) -> Locus {
        let level = self.direction().level(j);
        if level < self.level_lo {
            Locus::Below
        } else if level > self.level_hi {
            Locus::Above
        } else {
            let rep = self.quotient.representative(j);
            Locus::Site(self.index[&rep])
        }
    }

    pub fn index_of(&self, rep: &Point) -> Option<usize> {
        self.index.get(rep).copied()
    }

    pub fn in_fundamental(&self, j: &Point) -> bool {
        self.quotient.in_fundamental(j)
    }

    pub fn side(&self, i: usize) -> StripSide {
        strip_classify(&self.position(&self.sites[i])[..self.dim()], &self.strip)
    }

    pub fn manifest(&self) -> GridManifest {
        GridManifest {
            n: self.dim(),
            omega: self.direction().omega().to_vec(),
            basis: self
                .direction()
                .basis()
                .iter()
                .map(|z| z[..self.dim()].to_vec())
                .collect(),
            h: self.h,
            denominator: self.denom(),
            strip: [self.strip.a, self.strip.b],
            buffer: self.buffer,
            window: [
                self.level_lo as f64 / self.denom() as f64,
                self.level_hi as f64 / self.denom() as f64,
            ],
            multiplier: self.multiplier().to_vec(),
            site_count: self.len(),
            sites: self.sites.iter().map(|j| j[..self.dim()].to_vec()).collect(),
        }
    }
}

/// Sidecar description of a grid: sites are integer numerators over
/// `denominator`, listed in storage order.
#[derive(Debug, Clone, Serialize)]
pub struct GridManifest {
    pub n: usize,
    pub omega: Vec<i64>,
    pub basis: Vec<Vec<i64>>,
    pub h: f64,
    pub denominator: i64,
    pub strip: [f64; 2],
    pub buffer: f64,
    pub window: [f64; 2],
    pub multiplier: Vec<i64>,
    pub site_count: usize,
    pub sites: Vec<Vec<i64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shortest_orthogonal(omega: &[i64]) -> Point {
        let w = to_point(omega);
        let mut best: Option<Point> = None;
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                let k = [a, b, 0];
                if k != [0, 0, 0] && dot(&k, &w) == 0 {
                    if best.map_or(true, |bk| dot(&k, &k) < dot(&bk, &bk)) {
                        best = Some(k);
                    }
                }
            }
        }
        best.unwrap()
    }

    fn same_up_to_sign(a: Point, b: Point) -> bool {
        a == b || a == [-b[0], -b[1], -b[2]]
    }

    #[test]
    fn basis_examples() {
        assert_eq!(orthogonal_lattice_basis(&[0, 1]).unwrap(), vec![[1, 0, 0]]);
        for omega in [[1, 1], [2, 1]] {
            let b = orthogonal_lattice_basis(&omega).unwrap();
            assert!(same_up_to_sign(b[0], shortest_orthogonal(&omega)));
        }
        assert!(same_up_to_sign(
            orthogonal_lattice_basis(&[2, 1]).unwrap()[0],
            [1, -2, 0]
        ));
    }

    #[test]
    fn zero_direction_is_rejected() {
        assert!(matches!(
            orthogonal_lattice_basis(&[0, 0]),
            Err(Error::InvalidDirection(_))
        ));
        assert!(Direction::new(&[0, 0, 0]).is_err());
        assert!(Direction::new(&[1, 2, 3, 4]).is_err());
    }

    #[test]
    fn direction_is_made_primitive() {
        let d = Direction::new(&[4, 2]).unwrap();
        assert_eq!(d.omega(), &[2, 1]);
        assert_eq!(d.level(&d.transversal()), 1);
    }

    #[test]
    fn basis_is_complete_in_three_dimensions() {
        for omega in [[1, 2, 3], [0, 0, 1], [2, -3, 5], [1, 1, 1], [4, 6, 9]] {
            let d = Direction::new(&omega).unwrap();
            let z = d.basis();
            assert_eq!(z.len(), 2);
            let w = d.omega_point();
            for zi in z {
                assert_eq!(dot(zi, &w), 0);
            }
            // every short orthogonal vector is an integer combination: solve
            // k = a z1 + b z2 through the Gram system and check integrality
            let q = Quotient::new(d.clone(), 1, &[1, 1]).unwrap();
            for a in -10i64..=10 {
                for b in -10i64..=10 {
                    for c in -10i64..=10 {
                        let k = [a, b, c];
                        if dot(&k, &w) != 0 {
                            continue;
                        }
                        let (rep, _) = q.reduce(&k);
                        assert_eq!(rep, [0, 0, 0], "k={k:?} not generated for omega={omega:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn reduce_is_idempotent_and_lattice_invariant() {
        let d = Direction::new(&[2, 1]).unwrap();
        let z = d.basis()[0];
        let x = [3, -7, 0];
        let (rep, _) = reduce_to_fundamental(&x[..2], &d);
        let (rep2, q2) = reduce_to_fundamental(&rep[..2], &d);
        assert_eq!(rep, rep2);
        assert!(q2.iter().all(|&q| q == 0));
        let shifted = [x[0] + z[0], x[1] + z[1]];
        assert_eq!(reduce_to_fundamental(&shifted, &d).0, rep);
    }

    #[test]
    fn reduce_matches_brute_force_search() {
        let d = Direction::new(&[2, 1]).unwrap();
        let z = d.basis()[0];
        let zz = dot(&z, &z);
        let mut state = 12345u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((state >> 33) % 41) as i64 - 20;
            let b = ((state >> 13) % 41) as i64 - 20;
            let x = [a, b, 0];
            let (rep, q) = reduce_to_fundamental(&x[..2], &d);
            let mut found = None;
            for mu in -20i64..=20 {
                let y = [x[0] + mu * z[0], x[1] + mu * z[1], 0];
                let c = dot(&z, &y);
                if (0..zz).contains(&c) {
                    assert!(found.is_none(), "two representatives");
                    found = Some((y, -mu));
                }
            }
            let (y, mu) = found.unwrap();
            assert_eq!(rep, y);
            assert_eq!(q, vec![mu]);
        }
    }

    #[test]
    fn strip_classification() {
        let d = Direction::new(&[0, 1]).unwrap();
        let s = Strip::new(0.0, 5.0, d).unwrap();
        assert_eq!(s.classify(&[3.0, -1.0]), StripSide::Below);
        assert_eq!(s.classify(&[3.0, 2.0]), StripSide::Inside);
        assert_eq!(s.classify(&[0.0, 5.0]), StripSide::Inside);
        assert_eq!(s.classify(&[0.0, 5.5]), StripSide::Above);
        assert!(Strip::new(1.0, 1.0, Direction::new(&[0, 1]).unwrap()).is_err());
    }

    #[test]
    fn grid_site_count_axis_direction() {
        let d = Direction::new(&[0, 1]).unwrap();
        let s = Strip::new(0.0, 4.0, d).unwrap();
        let g = build_grid(&s, 0.5, 2.0, &[1]).unwrap();
        assert_eq!(g.len(), 34);
        let g2 = g.with_multiplier(&[2]).unwrap();
        assert_eq!(g2.len(), 68);
    }

    #[test]
    fn grid_rejects_bad_spacing_and_buffer() {
        let d = Direction::new(&[0, 1]).unwrap();
        let s = Strip::new(0.0, 4.0, d).unwrap();
        assert!(matches!(build_grid(&s, 0.3, 2.0, &[1]), Err(Error::Config(_))));
        assert!(matches!(build_grid(&s, 0.25, 1.0, &[1]), Err(Error::Config(_))));
        assert!(matches!(build_grid(&s, 0.25, 2.0, &[0]), Err(Error::Config(_))));
    }

    #[test]
    fn diagonal_grid_matches_coset_enumeration() {
        let d = Direction::new(&[1, 1]).unwrap();
        let s = Strip::new(0.0, 3.0, d.clone()).unwrap();
        let h = 0.5;
        let g = build_grid(&s, h, 2.0, &[1]).unwrap();
        // brute force: all numerators in a big box inside the window, reduced
        // by hand-rolled search over translates by 2 * (1, -1)
        let mut cosets = std::collections::BTreeSet::new();
        for a in -40i64..=40 {
            for b in -40i64..=40 {
                let level = a + b;
                if (-4..=10).contains(&level) {
                    // canonical: shift along (2,-2) until projection in [0, 4)
                    let mut p = [a, b];
                    while p[0] - p[1] < 0 {
                        p = [p[0] + 2, p[1] - 2];
                    }
                    while p[0] - p[1] >= 4 {
                        p = [p[0] - 2, p[1] + 2];
                    }
                    cosets.insert(p);
                }
            }
        }
        assert_eq!(g.len(), cosets.len());
        for j in g.sites() {
            assert!(cosets.contains(&[j[0], j[1]]));
        }
        let tangential_period = (dot(&d.basis()[0], &d.basis()[0]) as f64).sqrt();
        assert!((tangential_period - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn integer_translation_maps_grid_to_itself() {
        let d = Direction::new(&[2, 1]).unwrap();
        let s = Strip::new(0.0, 6.0, d).unwrap();
        let g = build_grid(&s, 0.25, 2.0, &[1]).unwrap();
        let (lo, hi) = g.level_range();
        let m = g.denom();
        for e in [[m, 0, 0], [0, m, 0]] {
            let shift = g.direction().level(&e);
            let mut hits = 0;
            for j in g.sites() {
                let t = [j[0] + e[0], j[1] + e[1], 0];
                let level = g.direction().level(&t);
                if level >= lo && level <= hi {
                    assert!(matches!(g.locate(&t), Locus::Site(_)));
                    hits += 1;
                }
            }
            let levels = (hi - lo + 1 - shift.abs()) as usize;
            assert_eq!(hits, levels * (g.len() / (hi - lo + 1) as usize));
        }
    }
}
