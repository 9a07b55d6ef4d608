mod common;

use common::*;
use platelike_core::energy::*;
use platelike_core::media::*;
use platelike_core::minimize::*;
use platelike_core::Error;
use proptest::prelude::*;

fn medium() -> Medium {
    let k = KernelSpec::homogeneous(2, 0.6).unwrap();
    let p = PotentialSpec::quartic(2, 2.0, PotentialCoefficient::SineProduct { base: 1.0, amp: 0.5 }).unwrap();
    Medium::new(k, p).unwrap()
}

fn opts(method: DescentMethod) -> MinimizeOptions {
    let mut o = MinimizeOptions::default();
    o.descent.method = method;
    o
}

#[test]
fn seeds_are_admissible_and_labelled() {
    let g = grid(&[2, 1], -2.0, 2.0, 0.5, 2.0, &[1]);
    let seeds = default_seeds(&g).unwrap();
    // linear and step, each with four unit translates
    assert_eq!(seeds.len(), 10);
    for (label, s) in &seeds {
        assert!(s.is_admissible(), "{label}");
    }
    let mut labels: Vec<_> = seeds.iter().map(|s| s.0.clone()).collect();
    labels.dedup();
    assert_eq!(labels.len(), 10);
}

#[test]
fn translation_by_a_period_is_the_identity() {
    let g = grid(&[2, 1], -2.0, 2.0, 0.5, 2.0, &[1]);
    let mut r = rng(1);
    let u = PeriodicField::new(g.clone(), random_admissible(&g, &mut r)).unwrap();
    let z = g.direction().basis()[0];
    let v = translate(&u, &[z[0] as f64, z[1] as f64]).unwrap();
    assert_eq!(v.values(), u.values());
    assert!(matches!(translate(&u, &[0.5, 0.0]), Err(Error::Misuse(_))));
    assert!(matches!(translate(&u, &[1.0]), Err(Error::Misuse(_))));
}

#[test]
fn translate_reads_the_shifted_site() {
    let g = grid(&[0, 1], -2.0, 2.0, 0.5, 2.0, &[1]);
    let u = PeriodicField::from_fn(g.clone(), |x| (-x[1] / 3.0).clamp(-1.0, 1.0)).unwrap();
    let v = translate(&u, &[0.0, 1.0]).unwrap();
    let mut checked = 0;
    for (j, &val) in g.sites().iter().zip(v.values()) {
        let y = g.position(j)[1] - 1.0;
        if y * 2.0 >= g.level_range().0 as f64 {
            assert_eq!(val, (-y / 3.0).clamp(-1.0, 1.0));
            checked += 1;
        } else {
            assert_eq!(val, 1.0);
        }
    }
    assert!(checked > g.len() / 2);
}

#[test]
fn descent_methods_agree() {
    let g = grid(&[1, 1], -3.0, 3.0, 0.5, 2.0, &[1]);
    let e = PeriodicEnergy::new(&medium(), g.clone(), 4.0).unwrap();
    let seed = project_admissible(&PeriodicField::linear_profile(g.clone()).unwrap(), g.strip());
    let a = descend(&e, &seed, &opts(DescentMethod::ProjectedLbfgs).descent, "lbfgs").unwrap();
    let b = descend(&e, &seed, &opts(DescentMethod::ProjectedGradient).descent, "pg").unwrap();
    assert_eq!(a.status, DescentStatus::Converged);
    assert_eq!(b.status, DescentStatus::Converged);
    assert!(a.field.sup_distance(&b.field).unwrap() < 1e-5);
    assert!((a.energy.total - b.energy.total).abs() < 1e-10 * a.energy.total.abs());
    assert!(a.energy.total <= e.value(seed.values()));
    assert!(a.field.is_admissible());
}

#[test]
fn minimal_minimizer_lies_below_every_seed_minimizer_in_the_window() {
    let g = grid(&[0, 1], -3.0, 3.0, 0.5, 2.0, &[1]);
    let e = PeriodicEnergy::new(&medium(), g.clone(), 4.0).unwrap();
    let o = MinimizeOptions::default();
    let mm = minimal_minimizer(&e, &default_seeds(&g).unwrap(), &o).unwrap();
    let best = mm.seed_results.iter().map(|r| r.energy.total).fold(f64::INFINITY, f64::min);
    assert!(mm.result.energy.total <= best + o.eps_min * best.abs() + 1e-9);
    for r in &mm.seed_results {
        if mm.retained.contains(&r.seed_label) {
            let above = mm
                .result
                .field
                .values()
                .iter()
                .zip(r.field.values())
                .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
            assert!(above < 1e-5, "{}: {above}", r.seed_label);
        }
    }
}

#[test]
fn minimal_minimizer_is_thread_count_independent() {
    let g = grid(&[2, 1], -3.0, 3.0, 0.5, 2.0, &[1]);
    let e = PeriodicEnergy::new(&medium(), g.clone(), 4.0).unwrap();
    let run = |t| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| minimal_minimizer(&e, &default_seeds(&g).unwrap(), &MinimizeOptions::default()).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.result.field.values(), b.result.field.values());
    assert_eq!(a.result.energy.total.to_bits(), b.result.energy.total.to_bits());
}

#[test]
fn tiling_and_doubling() {
    let m = medium();
    let g = grid(&[0, 1], -3.0, 3.0, 0.5, 2.0, &[1]);
    let e = PeriodicEnergy::new(&m, g.clone(), 4.0).unwrap();
    let o = MinimizeOptions::default();
    let u = minimal_minimizer(&e, &default_seeds(&g).unwrap(), &o).unwrap().result.field;
    let big = std::sync::Arc::new(g.with_multiplier(&[2]).unwrap());
    let t = tile(&u, &big).unwrap();
    assert_eq!(t.len(), 2 * u.len());
    for (j, &v) in big.sites().iter().zip(t.values()) {
        assert_eq!(v, u.value(j));
    }
    let d = doubling_test(&m, &e, &u, &[2], &o).unwrap();
    assert!(d.sup_discrepancy < 1e-4, "{d:?}");
    assert!((d.energy_ratio - 2.0).abs() < 1e-9);
    assert!(d.energy_multi <= d.energy_tiled * (1.0 + 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn min_plus_max_is_sum(seed in 0u64..1000) {
        let g = grid(&[1, 2], -1.5, 1.5, 0.5, 2.0, &[1]);
        let mut r = rng(seed);
        let u = PeriodicField::new(g.clone(), random_admissible(&g, &mut r)).unwrap();
        let v = PeriodicField::new(g.clone(), random_admissible(&g, &mut r)).unwrap();
        let lo = combine_min(&u, &v).unwrap();
        let hi = combine_max(&u, &v).unwrap();
        prop_assert!(lo.is_admissible() && hi.is_admissible());
        for i in 0..g.len() {
            prop_assert_eq!(lo.values()[i] + hi.values()[i], u.values()[i] + v.values()[i]);
            prop_assert!(lo.values()[i] <= hi.values()[i]);
        }
    }

    #[test]
    fn projection_is_idempotent(seed in 0u64..1000) {
        let g = grid(&[1, 1], -1.0, 1.0, 0.5, 2.0, &[1]);
        let mut r = rng(seed);
        let vals: Vec<f64> = (0..g.len()).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect();
        let p = project_admissible(&PeriodicField::new(g.clone(), vals).unwrap(), g.strip());
        prop_assert!(p.is_admissible());
        let again = project_admissible(&p, g.strip());
        prop_assert_eq!(again.values(), p.values());
    }
}
