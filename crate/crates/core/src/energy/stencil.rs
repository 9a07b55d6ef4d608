//! Tabulated pair weights `h^{2n} K(x, y)` on the grid, out to a cutoff.
//!
//! Weights depend on the offset `d = y - x` and, for heterogeneous kernels,
//! on the residue class of the base point modulo the unit cell. Every pair
//! is evaluated in a canonical orientation (lexicographically positive
//! offset) so that the table is exactly symmetric and exactly invariant under
//! integer translations.

use crate::geometry::{Grid, Point};
use crate::media::KernelSpec;

/// Pairs closer than this many cells are cell-averaged.
pub const NEAR_FIELD_CELLS: f64 = 2.0;

/// Kernel averaged over `3^n` midpoint offsets `eta` of a cell of size `h`,
/// applied symmetrically as `K(x - eta/2, y + eta/2)`.
pub fn cell_averaged_kernel(kernel: &KernelSpec, x: &[f64], y: &[f64], h: f64) -> f64 {
    let n = kernel.n;
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum();
    if r2 > (NEAR_FIELD_CELLS * h) * (NEAR_FIELD_CELLS * h) * (1.0 + 1e-12) {
        return kernel.value(x, y);
    }
    let nodes = 3usize.pow(n as u32);
    let mut acc = 0.0;
    let mut xa = [0.0; 3];
    let mut ya = [0.0; 3];
    for flat in 0..nodes {
        let mut rem = flat;
        for c in 0..n {
            let eta = ((rem % 3) as f64 - 1.0) * h / 3.0;
            rem /= 3;
            xa[c] = x[c] - 0.5 * eta;
            ya[c] = y[c] + 0.5 * eta;
        }
        acc += kernel.value(&xa[..n], &ya[..n]);
    }
    acc / nodes as f64
}

pub(crate) fn is_positive(d: &Point) -> bool {
    for &c in d {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

#[derive(Debug, Clone)]
pub struct KernelStencil {
    n: usize,
    denom: i64,
    cutoff: f64,
    radius_cells: i64,
    width: i64,
    classes: usize,
    /// Nonzero offsets within the cutoff, in lexicographic order.
    offsets: Vec<Point>,
    /// Box position of each offset.
    offset_box: Vec<usize>,
    /// Box position to offset index, `u32::MAX` outside the cutoff.
    box_to_offset: Vec<u32>,
    /// `classes x offsets.len()`; only positive offsets are filled.
    table: Vec<f64>,
}

impl KernelStencil {
    pub fn new(kernel: &KernelSpec, grid: &Grid, cutoff: f64) -> Self {
        let n = grid.dim();
        let denom = grid.denom();
        let h = grid.h();
        let radius_cells = (cutoff * denom as f64 + 1e-9).floor() as i64;
        let width = 2 * radius_cells + 1;
        let box_len = (width as usize).pow(n as u32);
        let r2_max = cutoff * cutoff * (denom * denom) as f64 * (1.0 + 1e-12);

        let mut offsets = Vec::new();
        let mut offset_box = Vec::new();
        let mut box_to_offset = vec![u32::MAX; box_len];
        let ranges: Vec<std::ops::RangeInclusive<i64>> = (0..3)
            .map(|c| if c < n { -radius_cells..=radius_cells } else { 0..=0 })
            .collect();
        for a in ranges[0].clone() {
            for b in ranges[1].clone() {
                for c in ranges[2].clone() {
                    let d = [a, b, c];
                    let r2 = (a * a + b * b + c * c) as f64;
                    if d == [0, 0, 0] || r2 > r2_max {
                        continue;
                    }
                    let bi = box_index(&d, n, radius_cells, width);
                    box_to_offset[bi] = offsets.len() as u32;
                    offsets.push(d);
                    offset_box.push(bi);
                }
            }
        }

        let classes = if kernel.is_translation_invariant() {
            1
        } else {
            grid.cell_class_count()
        };
        let pair_scale = h.powi(2 * n as i32);
        let mut table = vec![0.0; classes * offsets.len()];
        use rayon::prelude::*;
        table
            .par_chunks_mut(offsets.len().max(1))
            .enumerate()
            .for_each(|(class, row)| {
                let base = class_position(class, n, denom);
                for (k, d) in offsets.iter().enumerate() {
                    if !is_positive(d) {
                        continue;
                    }
                    let mut y = [0.0; 3];
                    for c in 0..n {
                        y[c] = base[c] + d[c] as f64 * h;
                    }
                    row[k] = pair_scale * cell_averaged_kernel(kernel, &base[..n], &y[..n], h);
                }
            });
        Self {
            n,
            denom,
            cutoff,
            radius_cells,
            width,
            classes,
            offsets,
            offset_box,
            box_to_offset,
            table,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn radius_cells(&self) -> i64 {
        self.radius_cells
    }

    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    pub fn is_translation_invariant(&self) -> bool {
        self.classes == 1
    }

    fn class_of(&self, j: &Point) -> usize {
        if self.classes == 1 {
            return 0;
        }
        let m = self.denom;
        let mut idx = 0i64;
        for c in (0..self.n).rev() {
            idx = idx * m + j[c].rem_euclid(m);
        }
        idx as usize
    }

    fn offset_index(&self, d: &Point) -> Option<usize> {
        if d.iter().any(|c| c.abs() > self.radius_cells) {
            return None;
        }
        let k = self.box_to_offset[box_index(d, self.n, self.radius_cells, self.width)];
        (k != u32::MAX).then_some(k as usize)
    }

    /// Pair weight `h^{2n} K(x, x + d)`; zero beyond the cutoff and on the
    /// diagonal.
    pub fn weight(&self, x: &Point, d: &Point) -> f64 {
        if is_positive(d) {
            match self.offset_index(d) {
                Some(k) => self.table[self.class_of(x) * self.offsets.len() + k],
                None => 0.0,
            }
        } else {
            let neg = [-d[0], -d[1], -d[2]];
            match self.offset_index(&neg) {
                Some(k) => {
                    let y = [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
                    self.table[self.class_of(&y) * self.offsets.len() + k]
                }
                None => 0.0,
            }
        }
    }

    /// Weight for the `k`-th offset from base point `x`.
    pub fn weight_at(&self, x: &Point, k: usize) -> f64 {
        let d = &self.offsets[k];
        if self.classes == 1 {
            if is_positive(d) {
                return self.table[k];
            }
            let neg = [-d[0], -d[1], -d[2]];
            return self.table[self.box_to_offset[box_index(&neg, self.n, self.radius_cells, self.width)] as usize];
        }
        self.weight(x, d)
    }

    /// Box position of offset `k`, for callers that keep dense caches.
    pub fn offset_box_index(&self, k: usize) -> usize {
        self.offset_box[k]
    }
}

fn box_index(d: &Point, n: usize, r: i64, width: i64) -> usize {
    let mut idx = 0i64;
    for c in 0..n {
        idx = idx * width + (d[c] + r);
    }
    idx as usize
}

fn class_position(class: usize, n: usize, denom: i64) -> [f64; 3] {
    let mut pos = [0.0; 3];
    let mut rem = class as i64;
    for p in pos.iter_mut().take(n) {
        *p = (rem % denom) as f64 / denom as f64;
        rem /= denom;
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Direction, Strip};
    use crate::media::{KernelVariant, ScalarCoefficient};

    fn grid() -> Grid {
        let d = Direction::new(&[2, 1]).unwrap();
        build_grid(&Strip::new(0.0, 4.0, d).unwrap(), 0.25, 2.0, &[1]).unwrap()
    }

    #[test]
    fn weights_are_symmetric_and_periodic() {
        let g = grid();
        let k = KernelSpec::new(
            2,
            0.6,
            0.5,
            2.0,
            KernelVariant::Heterogeneous {
                coeff: ScalarCoefficient::SumCosine { lo: 0.5, hi: 2.0 },
            },
        )
        .unwrap();
        let st = KernelStencil::new(&k, &g, 3.0);
        assert!(!st.is_translation_invariant());
        for x in [[0, 0, 0], [3, -5, 0], [7, 2, 0]] {
            for d in [[1, 0, 0], [-2, 3, 0], [5, -1, 0], [0, -1, 0]] {
                let y = [x[0] + d[0], x[1] + d[1], 0];
                let back = [-d[0], -d[1], 0];
                assert_eq!(st.weight(&x, &d), st.weight(&y, &back));
                let xs = [x[0] + 4, x[1] - 8, 0];
                assert_eq!(st.weight(&x, &d), st.weight(&xs, &d));
                let expect = 0.25f64.powi(4)
                    * cell_averaged_kernel(&k, &g.position(&x)[..2], &g.position(&y)[..2], 0.25);
                assert!((st.weight(&x, &d) - expect).abs() <= 1e-13 * expect);
            }
        }
        assert_eq!(st.weight(&[0, 0, 0], &[13, 0, 0]), 0.0);
    }

    #[test]
    fn cell_average_matches_point_value_far_away() {
        let k = KernelSpec::homogeneous(2, 0.75).unwrap();
        assert_eq!(cell_averaged_kernel(&k, &[0.0, 0.0], &[1.0, 0.0], 0.25), 1.0);
        let near = cell_averaged_kernel(&k, &[0.0, 0.0], &[0.25, 0.0], 0.25);
        assert!(near.is_finite() && near > 0.0);
    }
}
