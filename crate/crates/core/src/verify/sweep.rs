use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{birkhoff_check, integer_box, interface_width};
use super::report::VerificationReport;
use crate::energy::{PeriodicEnergy, PeriodicField, DEFAULT_CUTOFF, THETA};
use crate::error::Result;
use crate::geometry::{build_grid, Direction, Strip};
use crate::media::Medium;
use crate::minimize::{default_seeds, minimal_minimizer, MinimizeOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    /// Strip width in units of `|omega|`, centred at `omega . x = 0`.
    pub width: f64,
    /// Window buffer in units of `|omega|`.
    pub buffer: f64,
    pub h: f64,
    pub cutoff: f64,
    pub theta: f64,
    pub birkhoff_thetas: Vec<f64>,
    pub birkhoff_radius: i64,
    pub minimize: MinimizeOptions,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            width: 12.0,
            buffer: 2.0,
            h: 0.25,
            cutoff: DEFAULT_CUTOFF,
            theta: THETA,
            birkhoff_thetas: vec![-0.5, 0.0, 0.5],
            birkhoff_radius: 2,
            minimize: MinimizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub omega: Vec<i64>,
    pub sites: usize,
    pub normalized_width: f64,
    pub energy: f64,
    pub birkhoff_pass: bool,
    pub birkhoff_violations: usize,
    pub error: Option<String>,
    #[serde(skip)]
    pub field: Option<PeriodicField>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "omega,sites,normalized_width,energy,birkhoff_pass,birkhoff_violations,error";

    pub fn csv_row(&self) -> String {
        let om: Vec<String> = self.omega.iter().map(|c| c.to_string()).collect();
        format!(
            "{},{},{:e},{:e},{},{},{}",
            om.join(" "),
            self.sites,
            self.normalized_width,
            self.energy,
            self.birkhoff_pass,
            self.birkhoff_violations,
            self.error.as_deref().unwrap_or("").replace(',', ";")
        )
    }
}

/// Strip of normalized width `width`, centred at the origin.
pub fn centred_strip(direction: Direction, width: f64) -> Result<Strip> {
    let half = 0.5 * width * direction.norm();
    Strip::new(-half, half, direction)
}

fn one_direction(medium: &Medium, omega: &[i64], set: &SweepSettings) -> Result<SweepRow> {
    let dir = Direction::new(omega)?;
    let strip = centred_strip(dir.clone(), set.width)?;
    let grid = Arc::new(build_grid(&strip, set.h, set.buffer * dir.norm(), &vec![1; omega.len() - 1])?);
    let energy = PeriodicEnergy::new(medium, grid.clone(), set.cutoff)?;
    let seeds = default_seeds(&grid)?;
    let mm = minimal_minimizer(&energy, &seeds, &set.minimize)?;
    let u = mm.result.field;
    let ks = integer_box(omega.len(), set.birkhoff_radius);
    let b = birkhoff_check(&u, &set.birkhoff_thetas, &ks)?;
    Ok(SweepRow {
        omega: dir.omega().to_vec(),
        sites: grid.len(),
        normalized_width: interface_width(&u, set.theta),
        energy: mm.result.energy.total,
        birkhoff_pass: b.passed,
        birkhoff_violations: b.get("violations").unwrap_or(0.0) as usize,
        error: None,
        field: Some(u),
    })
}

/// Minimal minimizer, interface width and Birkhoff check per direction.
/// A failing direction yields a row carrying its error.
pub fn rational_sweep(medium: &Medium, directions: &[Vec<i64>], set: &SweepSettings) -> Vec<SweepRow> {
    directions
        .par_iter()
        .map(|om| {
            one_direction(medium, om, set).unwrap_or_else(|e| SweepRow {
                omega: om.clone(),
                sites: 0,
                normalized_width: f64::NAN,
                energy: f64::NAN,
                birkhoff_pass: false,
                birkhoff_violations: 0,
                error: Some(e.to_string()),
                field: None,
            })
        })
        .collect()
}

/// Every direction succeeded with the Birkhoff property, and all interface
/// widths stay below `bound` (a fraction of the strip width).
pub fn sweep_report(rows: &[SweepRow], bound: f64) -> VerificationReport {
    let mut rep = VerificationReport::new("rational_sweep", bound);
    rep.header = SweepRow::CSV_HEADER.split(',').map(String::from).collect();
    rep.rows = rows
        .iter()
        .map(|r| r.csv_row().split(',').map(String::from).collect())
        .collect();
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    let birkhoff = rows.iter().filter(|r| !r.birkhoff_pass).count();
    let widest = rows
        .iter()
        .map(|r| r.normalized_width)
        .fold(f64::NEG_INFINITY, f64::max);
    rep.measure("max_width", widest);
    rep.measure("failed_directions", failures as f64);
    rep.measure("birkhoff_failures", birkhoff as f64);
    rep.passed = failures == 0 && birkhoff == 0 && widest <= bound;
    rep
}
