mod common;

use std::sync::Arc;

use common::*;
use platelike_core::energy::*;
use platelike_core::geometry::{Grid, Point};
use platelike_core::media::*;
use proptest::prelude::*;
use rand::Rng;

fn het_medium(s: f64) -> Medium {
    let k = KernelSpec::new(
        2,
        s,
        0.5,
        2.0,
        KernelVariant::Heterogeneous {
            coeff: ScalarCoefficient::SumCosine { lo: 0.5, hi: 2.0 },
        },
    )
    .unwrap();
    let p = PotentialSpec::quartic(
        2,
        2.0,
        PotentialCoefficient::SineProduct { base: 1.0, amp: 0.5 },
    )
    .unwrap();
    Medium::new(k, p).unwrap()
}

fn homog_medium(s: f64) -> Medium {
    let k = KernelSpec::homogeneous(2, s).unwrap();
    let p = PotentialSpec::quartic(2, 2.0, PotentialCoefficient::Constant { value: 1.0 }).unwrap();
    Medium::new(k, p).unwrap()
}

fn aniso_medium() -> Medium {
    let k = KernelSpec::new(
        2,
        0.4,
        0.2,
        5.0,
        KernelVariant::Anisotropic {
            coeff: MatrixCoefficient::ModulatedIdentity { eps: 0.3 },
        },
    )
    .unwrap();
    let p = PotentialSpec::new(
        2,
        PotentialVariant::Cosine,
        PotentialCoefficient::CosineMean { base: 1.0, amp: 0.3 },
        3.0 * std::f64::consts::PI,
    )
    .unwrap();
    Medium::new(k, p).unwrap()
}

struct Case {
    medium: Medium,
    grid: Arc<Grid>,
    cutoff: f64,
}

fn cases() -> Vec<Case> {
    vec![
        Case {
            medium: het_medium(0.6),
            grid: grid(&[2, 1], 0.0, 3.0, 0.5, 2.0, &[1]),
            cutoff: 3.0,
        },
        Case {
            medium: homog_medium(0.25),
            grid: grid(&[0, 1], -1.0, 1.0, 0.25, 2.0, &[1]),
            cutoff: 2.5,
        },
        Case {
            medium: aniso_medium(),
            grid: grid(&[1, 1], 0.0, 2.0, 0.5, 2.0, &[2]),
            cutoff: 2.0,
        },
        Case {
            medium: Medium::new(
                kernel_truncate(&homog_medium(0.75).kernel, 2.0).unwrap(),
                homog_medium(0.75).potential,
            )
            .unwrap(),
            grid: grid(&[3, 2], 0.0, 2.0, 0.5, 2.0, &[1]),
            cutoff: 3.0,
        },
    ]
}

#[test]
fn grids_are_small() {
    for c in cases() {
        assert!(c.grid.len() <= 200, "{}", c.grid.len());
    }
}

#[test]
fn auxiliary_energy_matches_literal_sum() {
    for (ci, c) in cases().into_iter().enumerate() {
        let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
        let mut r = rng(10 + ci as u64);
        for _ in 0..3 {
            let u = random_admissible(&c.grid, &mut r);
            let rep = e.report(&u);
            let (total, same, cross, pot) = naive_aux(&c.medium, &c.grid, &u, c.cutoff);
            assert!(rel_err(rep.total, total) <= 1e-12, "case {ci}: {} vs {total}", rep.total);
            assert!(rel_err(rep.kinetic_same, same) <= 1e-12, "case {ci} same");
            assert!(rel_err(rep.kinetic_cross, cross) <= 1e-11, "case {ci} cross");
            assert!(rel_err(rep.potential, pot) <= 1e-12, "case {ci} pot");
            assert!(rel_err(e.value(&u), total) <= 1e-12);
            assert!(rep.is_consistent());
        }
    }
}

#[test]
fn linear_profile_has_finite_energy() {
    let c = &cases()[3];
    let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
    let u = PeriodicField::linear_profile(c.grid.clone()).unwrap();
    let rep = auxiliary_energy(&e, &u);
    assert!(rep.total.is_finite() && rep.total > 0.0);
    assert_eq!(rep.tail_error, 0.0);
    let (total, ..) = naive_aux(&c.medium, &c.grid, u.values(), c.cutoff);
    assert!(rel_err(rep.total, total) <= 1e-12);
}

#[test]
fn constants_have_zero_energy() {
    let c = &cases()[0];
    let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
    let n = c.grid.len();
    // only the clamp terms see the far field; equal to it on each side they vanish
    let g = e.gradient(&vec![0.0; n]);
    let interior: Vec<usize> = (0..n)
        .filter(|&i| {
            let (p, m) = e.clamp_weights(i);
            p == 0.0 && m == 0.0
        })
        .collect();
    let homog = homog_medium(0.6);
    let eh = PeriodicEnergy::new(&homog, c.grid.clone(), c.cutoff).unwrap();
    let gh = eh.gradient(&vec![0.0; n]);
    for &i in &interior {
        assert!(gh[i].abs() < 1e-14);
        assert!(g[i].is_finite());
    }
    let r = e.el_residual(&vec![0.0; n], &interior);
    assert_eq!(r.len(), interior.len());
}

#[test]
fn gradient_matches_central_differences() {
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for (ci, c) in cases().into_iter().enumerate() {
        let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
        let mut r = rng(100 + ci as u64);
        for _ in 0..13 {
            let u: Vec<f64> = (0..c.grid.len()).map(|_| r.gen_range(-0.95..0.95)).collect();
            let g = e.gradient(&u);
            for i in 0..u.len() {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[i] += eps;
                dn[i] -= eps;
                let fd = e.delta(&dn, &up) / (2.0 * eps);
                worst = worst.max((fd - g[i]).abs());
            }
        }
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn delta_agrees_with_difference_of_values() {
    let c = &cases()[1];
    let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
    let mut r = rng(7);
    let u = random_admissible(&c.grid, &mut r);
    let v = random_admissible(&c.grid, &mut r);
    let d = e.delta(&u, &v);
    assert!((d - (e.value(&v) - e.value(&u))).abs() <= 1e-12 * e.value(&u).max(1.0));
}

#[test]
fn localized_energy_matches_literal_sum() {
    for (ci, c) in cases().into_iter().enumerate() {
        let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
        let le = LocalEnergy::from_periodic(&e);
        let mut r = rng(200 + ci as u64);
        let vals = random_admissible(&c.grid, &mut r);
        let u = PeriodicField::new(c.grid.clone(), vals.clone()).unwrap();
        let g = c.grid.clone();
        let value = |y: &Point| naive_value(&g, &vals, y);
        let mid = 0.5 * (g.strip().a + g.strip().b) / g.direction().norm();
        let om = g.direction().omega();
        let nrm = g.direction().norm();
        let center = [mid * om[0] as f64 / nrm, mid * om[1] as f64 / nrm];
        for region in [
            SiteSet::ball(&g, &center, 1.2),
            SiteSet::fundamental_domain(&g, c.cutoff),
        ] {
            let rep = le.total_energy(&u, &region).unwrap();
            let (total, same, cross, pot) =
                naive_local(&c.medium, &g, &value, region.points(), c.cutoff);
            assert!(rel_err(rep.total, total) <= 1e-12, "case {ci}");
            assert!(rel_err(rep.kinetic_same, same) <= 1e-12);
            assert!(rel_err(rep.kinetic_cross, cross) <= 1e-12);
            assert!(rel_err(rep.potential, pot) <= 1e-12);
            let k_in = le.kinetic(&u, &region, Partner::In(&region));
            let k_out = le.kinetic(&u, &region, Partner::NotIn(&region));
            assert!(rel_err(k_in, same) <= 1e-12 && rel_err(k_out, cross) <= 1e-12);
            assert!(rel_err(le.potential_term(&u, &region).unwrap(), pot) <= 1e-12);
        }
    }
}

#[test]
fn fundamental_domain_region_matches_enumeration() {
    for c in cases() {
        let region = SiteSet::fundamental_domain(&c.grid, c.cutoff);
        assert_eq!(region.points(), naive_fundamental_domain(&c.grid, c.cutoff).as_slice());
    }
}

#[test]
fn two_site_toy() {
    let g = grid(&[0, 1], -3.0, 3.0, 1.0, 2.0, &[1]);
    let medium = homog_medium(0.5);
    let st = Arc::new(KernelStencil::new(&medium.kernel, &g, 3.0));
    let le = LocalEnergy::new(&medium, g.clone(), st);
    struct Toy;
    impl LatticeField for Toy {
        fn value(&self, j: &Point) -> f64 {
            match (j[0], j[1]) {
                (0, 0) => 1.0,
                (1, 0) => -1.0,
                _ => 0.0,
            }
        }
        fn is_clamped(&self, _: &Point) -> bool {
            false
        }
    }
    let x = SiteSet::from_points(vec![[0, 0, 0]]);
    let y = SiteSet::from_points(vec![[1, 0, 0]]);
    let k = le.kinetic(&Toy, &x, Partner::In(&y));
    // at unit distance with h = 1 the pair is in the cell-averaged band
    let kbar = cell_averaged_kernel(&medium.kernel, &[0.0, 0.0], &[1.0, 0.0], 1.0);
    assert!((k - 2.0 * kbar).abs() <= 1e-15);
    assert_eq!(le.kinetic(&Toy, &y, Partner::In(&x)), k);

    // away from the band the literal value is recovered
    let g4 = grid(&[0, 1], -3.0, 3.0, 0.25, 2.0, &[1]);
    let st4 = Arc::new(KernelStencil::new(&medium.kernel, &g4, 3.0));
    let le4 = LocalEnergy::new(&medium, g4, st4);
    struct Far;
    impl LatticeField for Far {
        fn value(&self, j: &Point) -> f64 {
            match (j[0], j[1]) {
                (0, 0) => 1.0,
                (4, 0) => -1.0,
                _ => 1.0,
            }
        }
        fn is_clamped(&self, _: &Point) -> bool {
            false
        }
    }
    let x = SiteSet::from_points(vec![[0, 0, 0]]);
    let y = SiteSet::from_points(vec![[4, 0, 0]]);
    let k = le4.kinetic(&Far, &x, Partner::In(&y));
    assert!((k - 0.5 * 0.25f64.powi(4) * 4.0).abs() <= 1e-16);
}

#[test]
fn single_site_potential() {
    let g = grid(&[0, 1], -3.0, 3.0, 1.0, 2.0, &[1]);
    let medium = homog_medium(0.5);
    let st = Arc::new(KernelStencil::new(&medium.kernel, &g, 2.0));
    let le = LocalEnergy::new(&medium, g.clone(), st);
    let u = PeriodicField::constant(g.clone(), 0.0).unwrap();
    let one = SiteSet::from_points(vec![[0, 0, 0]]);
    assert_eq!(le.potential_term(&u, &one).unwrap(), 1.0);
    let pm = PeriodicField::constant(g, 1.0).unwrap();
    assert_eq!(le.potential_term(&pm, &one).unwrap(), 0.0);
}

#[test]
fn energy_is_monotone_under_inclusion() {
    let c = &cases()[0];
    let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
    let le = LocalEnergy::from_periodic(&e);
    let mut r = rng(3);
    let u = PeriodicField::new(c.grid.clone(), random_admissible(&c.grid, &mut r)).unwrap();
    let small = SiteSet::ball(&c.grid, &[0.6, 0.3], 0.8);
    let big = SiteSet::ball(&c.grid, &[0.6, 0.3], 1.6);
    assert!(small.is_subset(&big));
    let es = le.total_energy(&u, &small).unwrap().total;
    let eb = le.total_energy(&u, &big).unwrap().total;
    assert!(es <= eb);
}

#[test]
fn cross_term_matches_image_sum() {
    let c = &cases()[0];
    let e = PeriodicEnergy::new(&c.medium, c.grid.clone(), c.cutoff).unwrap();
    let g = &c.grid;
    let mut r = rng(21);
    let allowed: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let t = g.normal(&g.site(i));
            t > g.strip().a && t < g.strip().b && !g.quotient().on_lateral_face(&g.site(i))
        })
        .collect();
    assert!(!allowed.is_empty());
    let mut phi = vec![0.0; g.len()];
    for &i in &allowed {
        phi[i] = r.gen_range(-0.3..0.3);
    }
    let got = cross_term(&e, &phi).unwrap();
    // literal: x in D, y a periodic image outside D
    let mut want = 0.0;
    for (i, x) in g.sites().iter().enumerate() {
        if phi[i] == 0.0 {
            continue;
        }
        for d in offsets(g, c.cutoff) {
            let y = [x[0] + d[0], x[1] + d[1], 0];
            if g.quotient().in_fundamental(&y) {
                continue;
            }
            let (py, clamped) = naive_value(g, &phi, &y);
            if clamped {
                continue;
            }
            want += phi[i] * py * naive_weight(&c.medium.kernel, g, x, &y, c.cutoff);
        }
    }
    assert!(rel_err(got, want) <= 1e-12, "{got} vs {want}");

    let single: Vec<f64> = (0..g.len()).map(|i| if i == allowed[0] { 0.5 } else { 0.0 }).collect();
    assert!(cross_term(&e, &single).unwrap() >= 0.0);
    assert_eq!(cross_term(&e, &vec![0.0; g.len()]).unwrap(), 0.0);

    let bad = (0..g.len()).find(|&i| g.normal(&g.site(i)) <= g.strip().a).unwrap();
    let mut phi_bad = vec![0.0; g.len()];
    phi_bad[bad] = 0.1;
    assert!(matches!(cross_term(&e, &phi_bad), Err(platelike_core::Error::Precondition(_))));
}

#[test]
fn tail_error_bounds_cutoff_refinement() {
    let medium = homog_medium(0.75);
    let g = grid(&[0, 1], -1.0, 1.0, 0.5, 2.0, &[1]);
    let u = PeriodicField::linear_profile(g.clone()).unwrap();
    let coarse = PeriodicEnergy::new(&medium, g.clone(), 3.0).unwrap().report(u.values());
    let fine = PeriodicEnergy::new(&medium, g, 6.0).unwrap().report(u.values());
    assert!((fine.total - coarse.total).abs() <= coarse.tail_error);
    assert!(fine.tail_error < coarse.tail_error);
}

#[test]
fn doubled_quotient_scales_energy() {
    let medium = het_medium(0.6);
    let g1 = grid(&[2, 1], 0.0, 3.0, 0.5, 2.0, &[1]);
    let g2 = Arc::new(g1.with_multiplier(&[2]).unwrap());
    let mut r = rng(5);
    let u1 = random_admissible(&g1, &mut r);
    let u2: Vec<f64> = g2.sites().iter().map(|j| naive_value(&g1, &u1, j).0).collect();
    let e1 = PeriodicEnergy::new(&medium, g1, 3.0).unwrap().value(&u1);
    let e2 = PeriodicEnergy::new(&medium, g2, 3.0).unwrap().value(&u2);
    assert!(rel_err(e2, 2.0 * e1) <= 1e-12);
}

fn min_max_case() -> (Medium, Arc<Grid>, f64) {
    (het_medium(0.4), grid(&[2, 1], 0.0, 3.0, 0.5, 2.0, &[1]), 3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn min_max_do_not_raise_kinetic_energy(seed in any::<u64>()) {
        let (medium, g, cutoff) = min_max_case();
        let e = PeriodicEnergy::new(&medium, g.clone(), cutoff).unwrap();
        let le = LocalEnergy::from_periodic(&e);
        let mut r = rng(seed);
        let a = random_admissible(&g, &mut r);
        let b = random_admissible(&g, &mut r);
        let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let fields: Vec<PeriodicField> = [a, b, lo, hi]
            .into_iter()
            .map(|v| PeriodicField::new(g.clone(), v).unwrap())
            .collect();
        let uu = SiteSet::ball(&g, &[0.5, 0.5], 1.5);
        let vv = SiteSet::fundamental_domain(&g, 1.0);
        for partner in [Partner::In(&vv), Partner::NotIn(&uu), Partner::In(&uu)] {
            let k: Vec<f64> = fields.iter().map(|f| le.kinetic(f, &uu, partner)).collect();
            prop_assert!(k[2] + k[3] <= k[0] + k[1] + 1e-12);
        }
        let p: Vec<f64> = fields.iter().map(|f| le.potential_term(f, &uu).unwrap()).collect();
        prop_assert!((p[2] + p[3] - p[0] - p[1]).abs() <= 1e-14 * (p[0] + p[1]).max(1.0));
        let f: Vec<f64> = fields.iter().map(|f| e.value(f.values())).collect();
        prop_assert!(f[2] + f[3] <= f[0] + f[1] + 1e-12);
    }
}
