use std::sync::Arc;

use super::report::VerificationReport;
use crate::energy::{PeriodicEnergy, PeriodicField};
use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::media::{kernel_truncate, Medium};
use crate::minimize::{default_seeds, minimal_minimizer, MinimizeOptions};

/// Minimal minimizers for the kernels truncated at each radius, followed by
/// the untruncated kernel at `reference_cutoff`.
///
/// Passes when the sup-norm distances between consecutive fields decrease
/// and the last one is at most `tol`.
pub fn truncation_limit(
    medium: &Medium,
    grid: &Arc<Grid>,
    radii: &[f64],
    reference_cutoff: f64,
    opts: &MinimizeOptions,
    tol: f64,
) -> Result<(VerificationReport, Vec<PeriodicField>)> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Misuse("truncation radii must increase".into()));
    }
    if reference_cutoff <= radii[radii.len() - 1] {
        return Err(Error::Config(format!(
            "reference cutoff {reference_cutoff} must exceed the largest truncation radius"
        )));
    }
    let seeds = default_seeds(grid)?;
    let mut fields = Vec::with_capacity(radii.len() + 1);
    let mut energies = Vec::with_capacity(radii.len() + 1);
    for &r in radii {
        let m = Medium::new(kernel_truncate(&medium.kernel, r)?, medium.potential.clone())?;
        let e = PeriodicEnergy::new(&m, grid.clone(), r)?;
        let mm = minimal_minimizer(&e, &seeds, opts)?;
        energies.push(mm.result.energy.total);
        fields.push(mm.result.field);
    }
    let e = PeriodicEnergy::new(medium, grid.clone(), reference_cutoff)?;
    let mm = minimal_minimizer(&e, &seeds, opts)?;
    energies.push(mm.result.energy.total);
    fields.push(mm.result.field);

    let reference = &fields[fields.len() - 1];
    let mut steps = Vec::with_capacity(radii.len());
    for w in fields.windows(2) {
        steps.push(w[0].sup_distance(&w[1])?);
    }
    let mut rep = VerificationReport::new("truncation_limit", tol);
    rep.header = ["radius", "energy", "step", "distance_to_reference"]
        .map(String::from)
        .to_vec();
    for (i, f) in fields.iter().enumerate() {
        let label = radii.get(i).map_or_else(|| format!("untruncated@{reference_cutoff}"), |r| r.to_string());
        let step = if i == 0 { String::new() } else { format!("{:e}", steps[i - 1]) };
        rep.rows.push(vec![
            label,
            format!("{:e}", energies[i]),
            step,
            format!("{:e}", f.sup_distance(reference)?),
        ]);
    }
    let increases = steps.windows(2).filter(|w| w[1] >= w[0]).count();
    let last = steps[steps.len() - 1];
    rep.measure("last_step", last);
    rep.measure("non_decreasing_steps", increases as f64);
    rep.passed = increases == 0 && last <= tol;
    Ok((rep, fields))
}
