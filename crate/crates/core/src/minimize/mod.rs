//! Constrained minimization over the admissible class, min/max combination,
//! the minimal-minimizer construction, translations and the doubling test.

pub mod descent;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use descent::{
    descend, project_admissible, DescentMethod, DescentOptions, DescentStatus, MinimizerResult,
};

use crate::energy::{LatticeField, PeriodicEnergy, PeriodicField};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};
use crate::media::Medium;

pub fn combine_min(u: &PeriodicField, v: &PeriodicField) -> Result<PeriodicField> {
    combine(u, v, f64::min)
}

pub fn combine_max(u: &PeriodicField, v: &PeriodicField) -> Result<PeriodicField> {
    combine(u, v, f64::max)
}

fn combine(u: &PeriodicField, v: &PeriodicField, op: fn(f64, f64) -> f64) -> Result<PeriodicField> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    let vals: Vec<f64> = u.values().iter().zip(v.values()).map(|(&a, &b)| op(a, b)).collect();
    PeriodicField::new(u.grid_arc().clone(), vals)
}

/// `tau_k u(x) = u(x - k)` for an integer vector `k`, read from the clamped
/// extension of `u`.
pub fn translate(u: &PeriodicField, k: &[f64]) -> Result<PeriodicField> {
    let g = u.grid();
    if k.len() != g.dim() {
        return Err(Error::Misuse(format!(
            "translation has {} components in dimension {}",
            k.len(),
            g.dim()
        )));
    }
    let mut shift: Point = [0; 3];
    for (c, &kc) in k.iter().enumerate() {
        if !(kc.is_finite() && kc.fract() == 0.0) {
            return Err(Error::Misuse(format!(
                "translation {k:?} is not an integer vector"
            )));
        }
        shift[c] = kc as i64 * g.denom();
    }
    let vals = g
        .sites()
        .iter()
        .map(|j| u.value(&[j[0] - shift[0], j[1] - shift[1], j[2] - shift[2]]))
        .collect();
    PeriodicField::new(u.grid_arc().clone(), vals)
}

/// Integer translate of `u` followed by projection onto the admissible class.
pub fn translate_admissible(u: &PeriodicField, k: &[f64]) -> Result<PeriodicField> {
    Ok(project_admissible(&translate(u, k)?, u.grid().strip()))
}

/// Projected linear profile, sign step and their unit translates.
pub fn default_seeds(grid: &Arc<Grid>) -> Result<Vec<(String, PeriodicField)>> {
    let n = grid.dim();
    let strip = grid.strip();
    let linear = project_admissible(&PeriodicField::linear_profile(grid.clone())?, strip);
    let step = project_admissible(&PeriodicField::sign_step(grid.clone())?, strip);
    let mut seeds = vec![
        ("linear".to_string(), linear.clone()),
        ("step".to_string(), step.clone()),
    ];
    for (name, base) in [("linear", &linear), ("step", &step)] {
        for c in 0..n {
            for sign in [1.0, -1.0] {
                let mut k = vec![0.0; n];
                k[c] = sign;
                let label = format!("{name}+{}e{}", if sign > 0.0 { "" } else { "-" }, c + 1);
                seeds.push((label, translate_admissible(base, &k)?));
            }
        }
    }
    Ok(seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    pub descent: DescentOptions,
    /// Results within `eps_min * |best|` of the best energy are combined.
    pub eps_min: f64,
    /// Sup-norm change of the combined field that ends the combine loop.
    pub stabilize_tol: f64,
    pub max_rounds: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            descent: DescentOptions::default(),
            eps_min: 1e-6,
            stabilize_tol: 1e-6,
            max_rounds: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalMinimizer {
    pub result: MinimizerResult,
    /// Descents from every seed, in seed order.
    pub seed_results: Vec<MinimizerResult>,
    /// Labels of the results combined in the final round.
    pub retained: Vec<String>,
    pub rounds: usize,
}

/// Minimizes from every seed, then repeatedly takes the pointwise minimum of
/// all results in the energy window and descends from it.
pub fn minimal_minimizer(
    energy: &PeriodicEnergy,
    seeds: &[(String, PeriodicField)],
    opts: &MinimizeOptions,
) -> Result<MinimalMinimizer> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let seed_results: Vec<MinimizerResult> = seeds
        .par_iter()
        .map(|(label, u)| descend(energy, u, &opts.descent, label))
        .collect::<Result<_>>()?;
    if seed_results.len() == 1 {
        let r = seed_results[0].clone();
        return Ok(MinimalMinimizer {
            result: r.clone(),
            seed_results,
            retained: vec![r.seed_label],
            rounds: 0,
        });
    }

    let mut pool: Vec<MinimizerResult> = seed_results.clone();
    let mut combined: Option<PeriodicField> = None;
    let mut last: Option<MinimizerResult> = None;
    let mut retained_labels = Vec::new();
    let mut rounds = 0;
    while rounds < opts.max_rounds {
        rounds += 1;
        let best = pool.iter().map(|r| r.energy.total).fold(f64::INFINITY, f64::min);
        let window = best + opts.eps_min * best.abs() + opts.descent.tol;
        let kept: Vec<&MinimizerResult> = pool.iter().filter(|r| r.energy.total <= window).collect();
        retained_labels = kept.iter().map(|r| r.seed_label.clone()).collect();
        let mut m = kept[0].field.clone();
        for r in &kept[1..] {
            m = combine_min(&m, &r.field)?;
        }
        let change = match &combined {
            Some(prev) => prev.sup_distance(&m)?,
            None => f64::INFINITY,
        };
        if change < opts.stabilize_tol {
            break;
        }
        let r = descend(energy, &m, &opts.descent, &format!("combined#{rounds}"))?;
        combined = Some(m);
        pool.push(r.clone());
        last = Some(r);
    }
    let result = last.expect("at least one combine round");
    Ok(MinimalMinimizer {
        result,
        seed_results,
        retained: retained_labels,
        rounds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub multiplier: Vec<i64>,
    pub sup_discrepancy: f64,
    pub energy_single: f64,
    pub energy_tiled: f64,
    pub energy_multi: f64,
    /// `f_m(tiled) / f(single)`.
    pub energy_ratio: f64,
    pub expected_ratio: f64,
}

/// Periodic extension of a field onto a grid with a larger period.
pub fn tile(u: &PeriodicField, target: &Arc<Grid>) -> Result<PeriodicField> {
    let vals = target.sites().iter().map(|j| u.value(j)).collect();
    PeriodicField::new(target.clone(), vals)
}

/// Minimal minimizer on the `m`-fold quotient against the tiled
/// single-period one.
pub fn doubling_test(
    medium: &Medium,
    single: &PeriodicEnergy,
    single_min: &PeriodicField,
    m: &[i64],
    opts: &MinimizeOptions,
) -> Result<DoublingReport> {
    let big = Arc::new(single.grid().with_multiplier(m)?);
    let e_big = PeriodicEnergy::with_stencil(medium, big.clone(), single.stencil().clone());
    let seeds = default_seeds(&big)?;
    let mm = minimal_minimizer(&e_big, &seeds, opts)?;
    let tiled = tile(single_min, &big)?;
    let sup = mm.result.field.sup_distance(&tiled)?;
    let energy_single = single.value(single_min.values());
    let energy_tiled = e_big.value(tiled.values());
    Ok(DoublingReport {
        multiplier: m.to_vec(),
        sup_discrepancy: sup,
        energy_single,
        energy_tiled,
        energy_multi: mm.result.energy.total,
        energy_ratio: energy_tiled / energy_single,
        expected_ratio: m.iter().product::<i64>() as f64,
    })
}
