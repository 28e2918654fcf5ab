use lamelab::catalog::sample_catalog_field;
use lamelab::inequalities::{estimate_lambda, LanczosOptions};
use lamelab::multiplier::*;
use lamelab::*;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mixed(n: usize) -> VectorField {
    let g = Grid::new(3, n, 16.0).unwrap();
    &sample_catalog_field("gaussian_rotation", &[2.0], &g).unwrap()
        + &sample_catalog_field("gaussian_gradient", &[2.0], &g).unwrap()
}

#[test]
fn suite_converges_under_refinement() {
    let p = LameParams::new(1.0, 1.0);
    let k = c64(4.0, 1.0);
    let coarse = identity_suite(&mixed(32), &p, k).unwrap();
    let fine = identity_suite(&mixed(64), &p, k).unwrap();
    assert_eq!(coarse.len(), fine.len());
    for (a, b) in coarse.iter().zip(&fine) {
        let tag = format!("{} {} {}", b.report.identity, b.weight, b.component);
        assert!(b.report.relative() <= 1e-5, "{tag}: {}", b.report.relative());
        let floor = 1e-10 * b.report.scale();
        assert!(
            b.report.residual <= floor || 4.0 * b.report.residual <= a.report.residual,
            "{tag}: {} -> {}",
            a.report.residual,
            b.report.residual
        );
    }
}

#[test]
fn fund_matches_term_by_term_combination() {
    let m = manufacture_f(&mixed(32), &LameParams::new(1.0, 1.0), c64(4.0, 1.0)).unwrap();
    for pair in [m.s_pair(), m.p_pair()] {
        let f = identity_fund(&pair).unwrap();
        let c = fund_combination(&pair).unwrap();
        assert!((f.lhs - c.lhs).abs() <= 1e-9 * f.lhs.abs());
        assert!((f.rhs - c.rhs).abs() <= 1e-9 * f.rhs.abs());
    }
}

#[test]
fn fund_with_negative_imaginary_part() {
    let m = manufacture_f(&mixed(32), &LameParams::new(1.0, 0.5), c64(3.0, -2.0)).unwrap();
    let pair = m.s_pair();
    let f = identity_fund(&pair).unwrap();
    let c = fund_combination(&pair).unwrap();
    assert!(f.relative() < 1e-3);
    assert!((f.lhs - c.lhs).abs() <= 1e-9 * f.lhs.abs());
}

#[test]
fn perturbed_source_is_detected() {
    let m = manufacture_f(&mixed(32), &LameParams::new(1.0, 1.0), c64(4.0, 1.0)).unwrap();
    let pair = m.s_pair();
    assert!(ComponentPair::new(pair.u().clone(), pair.f().clone(), pair.c(), pair.k()).is_ok());
    let bad = pair.with_f(pair.f() * 1.1);
    assert!(matches!(
        ComponentPair::new(bad.u().clone(), bad.f().clone(), bad.c(), bad.k()),
        Err(Error::InvalidPair(_))
    ));
    let w = RadialWeight::quadratic();
    let first = identity_first(&bad, &w);
    assert!(first.residual >= 0.05 * first.rhs.abs());
    let second = identity_second(&bad, &w);
    assert!(second.residual >= 0.05 * second.rhs.abs());
    assert!(identity_first(&pair, &w).relative() <= 1e-8);
}

#[test]
fn third_with_gaussian_weight() {
    let m = manufacture_f(&mixed(64), &LameParams::new(1.0, 1.0), c64(4.0, 1.0)).unwrap();
    let r = identity_third(&m.s_pair(), &RadialWeight::gaussian(3.0));
    assert!(r.term("bilaplacian").unwrap().abs() > 1e-3);
    assert!(r.relative() <= 1e-6);
}

#[test]
fn real_frequency_second_identity() {
    let m = manufacture_f(&mixed(32), &LameParams::new(1.0, 1.0), c64(4.0, 0.0)).unwrap();
    let r = identity_second(&m.p_pair(), &RadialWeight::quadratic());
    assert!(r.lhs.abs() <= 1e-8 && r.rhs.abs() <= 1e-8);
}

#[test]
fn mass_bound_from_second_identity() {
    let k = c64(1.0, 1.0);
    let m = manufacture_f(&mixed(32), &LameParams::new(1.0, 1.0), k).unwrap();
    let pair = m.s_pair();
    let r = identity_second(&pair, &RadialWeight::constant().scaled(k.im.signum()));
    let mass = pair.u().norm().powi(2);
    let grid = *pair.u().grid();
    let mut uf = 0.0;
    for (uc, fc) in pair.u().components().iter().zip(pair.f().components()) {
        uf += uc.iter().zip(fc).map(|(a, b)| a.norm() * b.norm()).sum::<f64>();
    }
    uf *= grid.cell_volume();
    assert!(mass <= uf / k.im.abs() + 1e-8);
    assert!(r.relative() <= 1e-8);
}

#[test]
fn twisted_gradient_examples() {
    let g = Grid::new(3, 64, 16.0).unwrap();
    let u = sample_catalog_field("gaussian_bump", &[2.0, 1.0], &g).unwrap();
    let r = identity_twisted_gradient(&u, 1.0, c64(4.0, 0.0)).unwrap();
    assert!(r.relative() <= 1e-6);
    let r2 = identity_twisted_gradient(&u, 2.0, c64(4.0, 0.0)).unwrap();
    assert!((r2.term("gradient").unwrap() - 2.0 * r.term("gradient").unwrap()).abs() <= 1e-12 * r2.lhs);
    let free = identity_twisted_gradient(&u, 1.5, c64(0.0, 3.0)).unwrap();
    assert!((free.lhs - free.term("gradient").unwrap()).abs() <= 1e-12 * free.lhs);
}

#[test]
fn energy_identity_on_periodic_modes() {
    let g = Grid::new(3, 16, 4.0).unwrap();
    let u = &sample_catalog_field("divfree_mode", &[1.0, 2.0, 1.0], &g).unwrap()
        + &sample_catalog_field("gradient_mode", &[2.0, 1.0], &g).unwrap();
    let p = LameParams::new(1.0, 0.0);
    let k = c64(1.0, 2.0);
    let m = manufacture_f(&u, &p, k).unwrap();
    for sign in [1.0, -1.0] {
        let r = identity_energy(&m.u, &m.f, &p, k, sign).unwrap();
        assert!(r.relative() <= 1e-8, "{}", r.relative());
    }
    let zero = VectorField::zeros(g);
    assert_eq!(identity_energy(&zero, &zero, &p, k, 1.0).unwrap().residual, 0.0);
    assert!(identity_energy(&m.u, &(&m.f * 1.1), &p, k, 1.0).is_err());
}

#[test]
fn potential_generated_energy_bound() {
    let g = Grid::new(3, 32, 8.0).unwrap();
    let u = sample_catalog_field("gaussian_rotation", &[1.0], &g).unwrap();
    let p = LameParams::new(1.0, 0.0);
    let spec: PotentialSpec = "gaussian:0.05,0.02,1".parse().unwrap();
    let v = Potential::from_spec(&spec, g).unwrap();
    let lam = estimate_lambda(&v, &LanczosOptions::default()).unwrap().value;
    for sign in [1.0, -1.0] {
        let b = energy_lower_bound(&u, &p, &v, lam, sign).unwrap();
        assert!(b.right_side >= b.bound - 1e-8 * b.right_side.abs(), "{b:?}");
    }
}
