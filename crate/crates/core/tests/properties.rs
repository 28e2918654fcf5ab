use lamelab::catalog::random_band_limited;
use lamelab::grid::{divergence, inner_l2, jacobian};
use lamelab::helmholtz::decompose;
use lamelab::inequalities::{estimate_lambda, LanczosOptions};
use lamelab::lame::{apply_lame, apply_lame_helmholtz, quadratic_form};
use lamelab::multiplier::RadialWeight;
use lamelab::resolvent::{solve, KRegion};
use lamelab::spectral::assemble;
use lamelab::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(grid: &Grid, seed: u64, modes: usize) -> VectorField {
    random_band_limited(grid, modes, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn rel(a: &VectorField, b: &VectorField) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn grid3() -> Grid {
    Grid::new(3, 8, 2.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn helmholtz_split_is_exact(seed in any::<u64>(), modes in 1usize..=3) {
        let g = grid3();
        let u = field(&g, seed, modes);
        let dec = decompose(&u);
        prop_assert!(rel(&(&dec.u_s + &dec.u_p), &u) <= 1e-12);
        prop_assert!(divergence(&dec.u_s).norm() <= 1e-11 * u.norm());
        let cross = inner_l2(&dec.u_s, &dec.u_p).unwrap().norm();
        prop_assert!(cross <= 1e-12 * u.norm().powi(2));
        let js = jacobian(&dec.u_s);
        let jp = jacobian(&dec.u_p);
        let h1: f64 = js.iter().zip(&jp).map(|(a, b)| inner_l2(a, b).unwrap()).sum::<Complex64>().norm();
        prop_assert!(h1 <= 1e-10 * u.norm().powi(2));
    }

    #[test]
    fn decomposition_is_idempotent(seed in any::<u64>()) {
        let g = grid3();
        let dec = decompose(&field(&g, seed, 2));
        let again = decompose(&dec.u_p);
        prop_assert!(rel(&again.u_p, &dec.u_p) <= 1e-12);
        prop_assert!(again.u_s.norm() <= 1e-12 * dec.u_p.norm().max(1.0));
    }

    #[test]
    fn lame_forms_agree(seed in any::<u64>(), mu in 0.1f64..5.0, t in 0.0f64..1.0) {
        // lambda ranges over the elliptic interval (-2mu, 4mu)
        let lambda = -2.0 * mu + 6.0 * mu * t + 1e-3;
        let p = LameParams::new(mu, lambda);
        let g = grid3();
        let u = field(&g, seed, 3);
        let a = apply_lame(&u, &p).unwrap();
        prop_assert!(rel(&apply_lame_helmholtz(&u, &p).unwrap(), &a) <= 1e-11);
        let q = quadratic_form(&u, &p).unwrap();
        let re = inner_l2(&a, &u).unwrap().re;
        prop_assert!((q - re).abs() <= 1e-10 * re.abs().max(1e-300));
        prop_assert!(q >= 0.0);
    }

    #[test]
    fn operator_handle_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid3();
        let v = Potential::from_spec(&"gaussian:-1,0.5,1".parse().unwrap(), g).unwrap();
        let h = assemble(g, LameParams::new(1.0, 0.3), v).unwrap();
        let (x, y) = (field(&g, s1, 2), field(&g, s2, 2));
        let combo = &(&x * Complex64::new(a, 0.0)) + &(&y * Complex64::new(0.0, b));
        let lhs = h.apply(&combo).unwrap();
        let rhs = &(&h.apply(&x).unwrap() * Complex64::new(a, 0.0)) + &(&h.apply(&y).unwrap() * Complex64::new(0.0, b));
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * (lhs.norm() + rhs.norm()).max(1.0));
    }

    #[test]
    fn free_resolvent_round_trip(seed in any::<u64>(), k1 in -5.0f64..10.0, k2 in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let g = Grid::new(3, 8, 3.0).unwrap();
        let p = LameParams::new(1.0, 0.5);
        let u0 = field(&g, seed, 2);
        let k = Complex64::new(k1, k2);
        let f = &(&apply_lame(&u0, &p).unwrap() * -1.0) + &(&u0 * k);
        let u = solve(&g, &p, &Potential::zero(g), k, &f).unwrap();
        prop_assert!(rel(&u, &u0) <= 1e-8);
    }

    #[test]
    fn radial_split_holds_anywhere(x in prop::array::uniform3(-5.0f64..5.0), w in 0.3f64..4.0) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        for weight in [RadialWeight::quadratic(), RadialWeight::linear(), RadialWeight::gaussian(w)] {
            let g = weight.gradient(&x);
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b / r).sum();
            let total: f64 = g.iter().map(|v| v * v).sum();
            let tang: f64 = g.iter().zip(&x).map(|(a, b)| (a - radial * b / r).powi(2)).sum();
            prop_assert!((total - radial * radial - tang).abs() <= 1e-12 * total.max(1.0));
            // trace of the Hessian is the Laplacian
            let h = weight.hessian(&x);
            prop_assert!((h[0] + h[4] + h[8] - weight.laplacian(&x)).abs() <= 1e-12 * weight.laplacian(&x).abs().max(1.0));
        }
    }

    #[test]
    fn region_points_lie_inside(n_re in 1usize..6, n_im in 1usize..6, lo in -3.0f64..0.0, hi in 0.0f64..3.0) {
        let r = KRegion { re: (lo, hi), im: (lo, hi), n_re, n_im };
        let pts = r.points();
        prop_assert_eq!(pts.len(), n_re * n_im);
        for k in &pts {
            prop_assert!(k.re >= lo - 1e-12 && k.re <= hi + 1e-12);
            prop_assert!(k.im >= lo - 1e-12 && k.im <= hi + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lambda_is_homogeneous(c_re in -3.0f64..3.0, c_im in -3.0f64..3.0) {
        let c = Complex64::new(c_re, c_im);
        prop_assume!(c.norm() > 1e-2);
        let g = Grid::new(3, 8, 3.0).unwrap();
        let spec: PotentialSpec = "lorentzian:0.4,0.1,1".parse().unwrap();
        let base = estimate_lambda(&Potential::from_spec(&spec, g).unwrap(), &LanczosOptions::default()).unwrap().value;
        let scaled = estimate_lambda(&Potential::from_spec(&spec.scaled(c), g).unwrap(), &LanczosOptions::default()).unwrap().value;
        prop_assert!((scaled - c.norm() * base).abs() <= 1e-8 * c.norm() * base);
    }
}
