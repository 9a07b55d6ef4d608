use std::sync::Arc;

use platelike_core::energy::{FarField, PeriodicEnergy, PeriodicField, SiteSet};
use platelike_core::geometry::{build_grid, Grid, Point};
use platelike_core::media::{kernel_truncate, Medium};
use platelike_core::minimize::{default_seeds, doubling_test, minimal_minimizer, project_admissible, MinimalMinimizer};
use platelike_core::verify::*;
use platelike_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifacts::{energy_row, OutputDir, ENERGY, ENERGY_HEADER, FIELD, MANIFEST};
use crate::config::ExperimentConfig;
use crate::plot::{render, Axes, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Minimization, the enabled field checks and every enabled section.
    Run,
    Minimize,
    /// Minimization followed by the enabled field checks.
    Verify,
    Sweep,
    Growth,
    Diverge,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: Vec<VerificationReport>,
}

impl Outcome {
    /// Skipped checks do not count as failures.
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed || r.skipped)
    }

    pub fn report(&self, check: &str) -> Option<&VerificationReport> {
        self.reports.iter().find(|r| r.check == check)
    }
}

#[derive(Serialize)]
struct FieldInfo<'a> {
    file: &'a str,
    encoding: &'a str,
    values: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    medium: &'a Medium,
    field: FieldInfo<'a>,
    minimizer: &'a platelike_core::minimize::MinimizerResult,
    rounds: usize,
    retained: &'a [String],
    interface_width: f64,
    grid: platelike_core::geometry::GridManifest,
}

/// Runs one stage of the pipeline, writing artifacts under `out`.
pub fn execute(cfg: &ExperimentConfig, stage: Stage, out: &OutputDir) -> Result<Outcome> {
    cfg.validate()?;
    let medium = cfg.medium()?;
    let mut outcome = Outcome::default();
    if matches!(stage, Stage::Run | Stage::Minimize | Stage::Verify) {
        let (energy, mm) = minimize(cfg, &medium, out)?;
        if stage != Stage::Minimize {
            field_checks(cfg, &medium, &energy, &mm.result.field, &mut outcome)?;
        }
    }
    if stage == Stage::Sweep || (stage == Stage::Run && cfg.sweep.enabled) {
        sweep(cfg, &medium, out, &mut outcome)?;
    }
    if stage == Stage::Growth || (stage == Stage::Run && cfg.growth.enabled) {
        growth(cfg, &medium, out, &mut outcome)?;
    }
    if stage == Stage::Diverge || (stage == Stage::Run && cfg.diverge.enabled) {
        diverge(cfg, &medium, out, &mut outcome)?;
    }
    for rep in &outcome.reports {
        out.write_report(rep)?;
    }
    let summary: Vec<String> = outcome.reports.iter().map(|r| r.summary()).collect();
    if !summary.is_empty() {
        out.write("verify/summary.txt", (summary.join("\n") + "\n").as_bytes())?;
    }
    Ok(outcome)
}

fn window_grid(cfg: &ExperimentConfig) -> Result<Arc<Grid>> {
    Ok(Arc::new(build_grid(
        &cfg.strip()?,
        cfg.geometry.h,
        cfg.geometry.buffer,
        &cfg.geometry.multiplier,
    )?))
}

/// Deterministic seeds plus `random_seeds` projected random fields.
pub fn seeds(cfg: &ExperimentConfig, grid: &Arc<Grid>) -> Result<Vec<(String, PeriodicField)>> {
    let mut out = default_seeds(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for k in 0..cfg.minimize.random_seeds {
        let vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let u = project_admissible(&PeriodicField::new(grid.clone(), vals)?, grid.strip());
        out.push((format!("random#{k}"), u));
    }
    Ok(out)
}

/// Minimal minimizer on the configured window, with its artifacts.
pub fn minimize(cfg: &ExperimentConfig, medium: &Medium, out: &OutputDir) -> Result<(PeriodicEnergy, MinimalMinimizer)> {
    let grid = window_grid(cfg)?;
    let energy = PeriodicEnergy::new(medium, grid.clone(), cfg.minimize.cutoff)?;
    let mm = minimal_minimizer(&energy, &seeds(cfg, &grid)?, &cfg.minimize.options())?;
    let u = &mm.result.field;

    out.write_field(u)?;
    let manifest = Manifest {
        config: cfg,
        medium,
        field: FieldInfo {
            file: FIELD,
            encoding: "f64 little-endian, manifest site order",
            values: u.len(),
        },
        minimizer: &mm.result,
        rounds: mm.rounds,
        retained: &mm.retained,
        interface_width: interface_width(u, platelike_core::energy::THETA),
        grid: grid.manifest(),
    };
    out.write_json(MANIFEST, &manifest)?;
    let mut csv = vec![ENERGY_HEADER.to_string(), energy_row("minimal", &mm.result)];
    for r in &mm.seed_results {
        csv.push(energy_row(&r.seed_label, r));
    }
    out.write(ENERGY, (csv.join("\n") + "\n").as_bytes())?;

    let pts: Vec<(f64, f64)> = (0..grid.len())
        .map(|i| (grid.normalized_normal(&grid.site(i)), u.values()[i]))
        .collect();
    let axes = Axes {
        title: format!("minimal minimizer, omega = {:?}", grid.direction().omega()),
        x_label: "omega . x / |omega|".into(),
        y_label: "u".into(),
        ..Default::default()
    };
    out.write_plot("profile", &render(&axes, &[Series::scatter("u", pts)]))?;
    Ok((energy, mm))
}

/// Point on the mid-plane of the strip.
fn strip_centre(grid: &Grid) -> Vec<f64> {
    let s = grid.strip();
    let om = grid.direction().omega();
    let w2 = grid.direction().norm().powi(2);
    let t = 0.5 * (s.a + s.b);
    om.iter().map(|&c| t * c as f64 / w2).collect()
}

fn interior_sites(grid: &Grid) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| {
            let j = grid.site(i);
            let t = grid.normal(&j);
            t > grid.strip().a && t < grid.strip().b && !grid.quotient().on_lateral_face(&j)
        })
        .collect()
}

fn field_checks(
    cfg: &ExperimentConfig,
    medium: &Medium,
    energy: &PeriodicEnergy,
    u: &PeriodicField,
    outcome: &mut Outcome,
) -> Result<()> {
    let v = &cfg.verify;
    let grid = energy.grid();
    let n = grid.dim();
    let centre = strip_centre(grid);
    if v.birkhoff {
        outcome
            .reports
            .push(birkhoff_check(u, &v.birkhoff_thetas, &integer_box(n, v.birkhoff_radius))?);
    }
    if v.halfspace {
        outcome.reports.push(halfspace_check(u, v.halfspace_theta));
    }
    if v.oscillation {
        let big = 0.45 * grid.strip().normalized_width();
        let radii = [big / 8.0, big / 4.0, big / 2.0];
        outcome.reports.push(oscillation_decay(u, &centre, big, &radii)?);
    }
    if v.local_minimality {
        let region = SiteSet::ball(grid, &centre, v.minimality_radius);
        outcome
            .reports
            .push(local_minimality_test(energy, u, &region, &cfg.minimality_options())?);
    }
    if v.ef_relation {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut phi = vec![0.0; grid.len()];
        for i in interior_sites(grid) {
            let x = u.values()[i];
            phi[i] = (x + rng.gen_range(-0.2..=0.2)).clamp(-1.0, 1.0) - x;
        }
        outcome.reports.push(ef_relation_check(energy, u, &phi)?);
    }
    if v.doubling {
        let d = doubling_test(medium, energy, u, &v.doubling_multiplier, &cfg.minimize.options())?;
        let mut rep = VerificationReport::new("doubling", v.doubling_tol);
        rep.measure("sup_discrepancy", d.sup_discrepancy);
        rep.measure("energy_ratio", d.energy_ratio);
        rep.measure("expected_ratio", d.expected_ratio);
        rep.measure("energy_multi", d.energy_multi);
        rep.measure("energy_tiled", d.energy_tiled);
        rep.passed = d.sup_discrepancy <= v.doubling_tol && (d.energy_ratio - d.expected_ratio).abs() <= 1e-6;
        outcome.reports.push(rep);
    }
    if v.truncation {
        let (rep, _) = truncation_limit(
            medium,
            grid,
            &v.truncation_radii,
            v.truncation_reference_cutoff,
            &cfg.minimize.options(),
            v.truncation_tol,
        )?;
        outcome.reports.push(rep);
    }
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, medium: &Medium, out: &OutputDir, outcome: &mut Outcome) -> Result<()> {
    let sc = &cfg.sweep;
    let set = SweepSettings {
        width: sc.width,
        buffer: sc.buffer,
        h: cfg.geometry.h,
        cutoff: cfg.minimize.cutoff,
        theta: sc.theta,
        birkhoff_thetas: cfg.verify.birkhoff_thetas.clone(),
        birkhoff_radius: cfg.verify.birkhoff_radius,
        minimize: cfg.minimize.options(),
    };
    let rows = rational_sweep(medium, &sc.directions, &set);
    let rep = sweep_report(&rows, sc.width_fraction * sc.width);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| ((r.omega[1] as f64).atan2(r.omega[0] as f64).to_degrees(), r.normalized_width))
        .collect();
    let axes = Axes {
        title: format!("interface width, theta = {}", sc.theta),
        x_label: "direction angle (degrees)".into(),
        y_label: "normalized width".into(),
        ..Default::default()
    };
    out.write_plot("sweep", &render(&axes, &[Series::scatter("width", pts)]))?;
    outcome.reports.push(rep);
    Ok(())
}

fn growth(cfg: &ExperimentConfig, medium: &Medium, out: &OutputDir, outcome: &mut Outcome) -> Result<()> {
    let gc = &cfg.growth;
    let dir = cfg.direction()?;
    let strip = centred_strip(dir, gc.width)?;
    let grid = Arc::new(build_grid(&strip, cfg.geometry.h, cfg.geometry.buffer, &cfg.geometry.multiplier)?);
    let cutoff = gc.cutoff.unwrap_or(cfg.minimize.cutoff);
    let energy = PeriodicEnergy::new(medium, grid.clone(), cutoff)?;
    let mm = minimal_minimizer(&energy, &seeds(cfg, &grid)?, &cfg.minimize.options())?;
    let u = &mm.result.field;
    let far = if gc.far_field {
        Some(FarField::new(&medium.kernel, grid.clone(), cutoff)?)
    } else {
        None
    };
    let centre = growth_centre(&grid, u);
    let prof = energy_growth_profile(&energy, u, &centre, &gc.radii, far.as_ref())?;
    out.write("verify/growth_profile.csv", prof.to_csv().as_bytes())?;
    let axes = Axes {
        title: format!("energy on balls, s = {}", prof.s),
        x_label: "R".into(),
        y_label: "E(u; B_R)".into(),
        log_x: true,
        log_y: true,
    };
    let e: Vec<(f64, f64)> = prof.radii.iter().copied().zip(prof.energies.iter().copied()).collect();
    let r: Vec<(f64, f64)> = prof.radii.iter().copied().zip(prof.reference.iter().copied()).collect();
    out.write_plot(
        "growth",
        &render(&axes, &[Series::line("energy", e), Series::line("C R^(n-1) Psi_s(R)", r)]),
    )?;
    let mut rep = prof.check(gc.tolerance);
    rep.header = ["radius", "energy", "reference"].map(String::from).to_vec();
    rep.rows = (0..prof.radii.len())
        .map(|i| {
            vec![
                prof.radii[i].to_string(),
                format!("{:e}", prof.energies[i]),
                format!("{:e}", prof.reference[i]),
            ]
        })
        .collect();
    rep.measure("far_field", if prof.far_field { 1.0 } else { 0.0 });
    outcome.reports.push(rep);
    Ok(())
}

/// Window site with the smallest `|u|`, ties broken by site order.
pub fn growth_centre(grid: &Grid, u: &PeriodicField) -> Vec<f64> {
    let best = (0..grid.len())
        .min_by(|&i, &j| u.values()[i].abs().total_cmp(&u.values()[j].abs()))
        .unwrap_or(0);
    let p: Point = grid.site(best);
    grid.position(&p)[..grid.dim()].to_vec()
}

fn diverge(cfg: &ExperimentConfig, medium: &Medium, out: &OutputDir, outcome: &mut Outcome) -> Result<()> {
    let dc = &cfg.diverge;
    let strip = centred_strip(cfg.direction()?, dc.width)?;
    let mut series = Vec::new();
    let main = divergence_probe(&medium.kernel, &strip, &dc.windows, cfg.geometry.h)?;
    series.push(Series::line("kernel", sums(&main, &dc.windows)));
    outcome.reports.push(main);
    if let Some(r) = dc.control_radius {
        if medium.kernel.truncation_radius().is_some() {
            return Err(Error::Config("control probe needs an untruncated kernel".into()));
        }
        let k = kernel_truncate(&medium.kernel, r)?;
        let control = divergence_probe(&k, &strip, &dc.windows, cfg.geometry.h)?;
        series.push(Series::line(&format!("truncated at {r}"), sums(&control, &dc.windows)));
        outcome.reports.push(control);
    }
    let axes = Axes {
        title: "cross-strip interaction".into(),
        x_label: "window length".into(),
        y_label: "sum".into(),
        log_x: true,
        ..Default::default()
    };
    out.write_plot("diverge", &render(&axes, &series))?;
    Ok(())
}

fn sums(rep: &VerificationReport, windows: &[f64]) -> Vec<(f64, f64)> {
    windows
        .iter()
        .zip(&rep.rows)
        .map(|(&l, row)| (l, row[1].parse().unwrap_or(f64::NAN)))
        .collect()
}
