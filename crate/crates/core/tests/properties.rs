use nalgebra::DMatrix;
use proptest::prelude::*;
use sinkbridge::bounds::{phi, proximal_rates, xi_iota, CurvatureSpec, LowerCurvature};
use sinkbridge::discrete::discrete_kl;
use sinkbridge::gaussian::{gaussian_kl, gelbrich_w2, GaussianMeasure, LinearGaussianKernel};
use sinkbridge::random;
use sinkbridge::riccati::{fixed_point, iterate, psi_residuals, ricc_map, scalar_closed_form, RiccatiParam};
use sinkbridge::spd::{ando_hemmen_check, loewner_leq, PsdMatrix, SymMatrix};

fn param(seed: u64, d: usize) -> RiccatiParam {
    RiccatiParam::Finite(random::spd(&mut random::rng(seed), d, 0.1, 5.0))
}

fn measure(seed: u64, d: usize) -> GaussianMeasure {
    let mut r = random::rng(seed);
    let m = random::vector(&mut r, d, 2.0);
    GaussianMeasure::new(m, random::spd(&mut r, d, 0.2, 4.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ricc_is_monotone_and_below_identity(seed in any::<u64>(), d in 1usize..5) {
        let p = param(seed, d);
        let mut r = random::rng(seed ^ 1);
        let a = random::spd(&mut r, d, 1e-3, 2.0);
        let b = a.sym().add(random::spd(&mut r, d, 1e-3, 2.0).sym()).unwrap().to_psd().unwrap();
        let fa = ricc_map(&p, a.psd()).unwrap();
        let fb = ricc_map(&p, &b).unwrap();
        prop_assert!(loewner_leq(fa.sym(), fb.sym(), 1e-12));
        prop_assert!(loewner_leq(fb.sym(), &SymMatrix::identity(d), 1e-12));
    }

    #[test]
    fn flow_is_sandwiched_by_fixed_point(seed in any::<u64>(), d in 1usize..5) {
        let p = param(seed, d);
        let r = fixed_point(&p);
        let up = iterate(&p, &PsdMatrix::zeros(d), 25).unwrap();
        let down = iterate(&p, &PsdMatrix::identity(d), 25).unwrap();
        for (lo, hi) in up.trajectory.iter().zip(&down.trajectory) {
            prop_assert!(loewner_leq(lo.sym(), r.sym(), 1e-12));
            prop_assert!(loewner_leq(r.sym(), hi.sym(), 1e-12));
        }
        for w in up.trajectory.windows(2) {
            prop_assert!(loewner_leq(w[0].sym(), w[1].sym(), 1e-12));
        }
        let fr = ricc_map(&p, r.psd()).unwrap();
        prop_assert!(fr.sym().sub(r.sym()).unwrap().norm2() < 1e-12);
    }

    #[test]
    fn scalar_closed_form_matches_iteration(w in 0.01f64..50.0, r0 in 0.0f64..3.0, n in 0usize..30) {
        let p = RiccatiParam::scalar(w).unwrap();
        let flow = iterate(&p, &PsdMatrix::from_mat(DMatrix::from_element(1, 1, r0)).unwrap(), n).unwrap();
        let it = flow.last().as_mat()[(0, 0)];
        prop_assert!((it - scalar_closed_form(w, r0, n)).abs() < 1e-12 * (1.0 + r0));
    }

    #[test]
    fn ando_hemmen_holds(seed in any::<u64>(), d in 1usize..6) {
        let mut r = random::rng(seed);
        let u = random::spd(&mut r, d, 0.05, 10.0);
        let v = random::spd(&mut r, d, 0.05, 10.0);
        prop_assert!(ando_hemmen_check(&u, &v));
    }

    #[test]
    fn phi_is_root_of_quadratic(le in -8.0f64..8.0) {
        let eps = 10f64.powf(le);
        let f = phi(eps);
        prop_assert!(f > 0.0);
        let lhs = (1.0 + f).powi(2);
        let rhs = 1.0 + 1.0 / eps + f;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn psi_factorization(seed in any::<u64>(), d in 1usize..5) {
        let mut r = random::rng(seed);
        let g = random::invertible(&mut r, d, 0.3, 3.0);
        let v = random::spd(&mut r, d, 1e-3, 3.0);
        let res = psi_residuals(&g, v.psd()).unwrap();
        prop_assert!(res.composition < 1e-9 && res.transport < 1e-9, "{res:?}");
    }

    #[test]
    fn xi_is_monotone_below_iota(seed in any::<u64>(), d in 1usize..4, t in 0.2f64..5.0) {
        let mut r = random::rng(seed);
        let u = random::spd(&mut r, d, 0.2, 3.0);
        let v = random::spd(&mut r, d, 0.2, 3.0);
        let k = LinearGaussianKernel::isotropic(d, t).unwrap();
        let spec = CurvatureSpec::new(u, v, LowerCurvature::Zero, LowerCurvature::Zero).unwrap();
        let x = xi_iota(&k, &spec, 8).unwrap();
        for xs in [&x.xi_even, &x.xi_odd] {
            for w in xs.windows(2) {
                prop_assert!(w[0] <= w[1] * (1.0 + 1e-12));
            }
            prop_assert!(xs.iter().all(|&s| s <= x.iota * (1.0 + 1e-12)));
        }
        prop_assert!(x.iota >= 1.0 - 1e-12);
    }

    #[test]
    fn proximal_rates_ordered(seed in any::<u64>(), d in 1usize..4) {
        let mut r = random::rng(seed);
        let beta = random::invertible(&mut r, d, 0.3, 2.0);
        let k = LinearGaussianKernel::new(random::vector(&mut r, d, 1.0), beta, random::spd(&mut r, d, 0.2, 2.0)).unwrap();
        let mu = measure(seed ^ 7, d);
        let (a, b) = proximal_rates(&k, &CurvatureSpec::gaussian(&mu, &mu)).unwrap();
        prop_assert!(0.0 < b && b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn gaussian_divergences(seed in any::<u64>(), d in 1usize..5) {
        let p = measure(seed, d);
        let q = measure(seed ^ 3, d);
        prop_assert!(gaussian_kl(&p, &q).unwrap() >= 0.0);
        prop_assert!(gaussian_kl(&p, &p).unwrap().abs() < 1e-12);
        let w = gelbrich_w2(&p, &q).unwrap();
        prop_assert!((w - gelbrich_w2(&q, &p).unwrap()).abs() < 1e-9 * (1.0 + w));
        prop_assert!(gelbrich_w2(&p, &p).unwrap() < 1e-7);
    }

    #[test]
    fn discrete_kl_nonnegative(xs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..40)) {
        let n = xs.len();
        let lw = vec![-(n as f64).ln(); n];
        let (p, q): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
        prop_assert!(discrete_kl(&lw, &p, &q) >= 0.0);
        prop_assert_eq!(discrete_kl(&lw, &p, &p), 0.0);
    }
}

#[test]
fn psi_on_identity() {
    let res = psi_residuals(&DMatrix::identity(3, 3), &PsdMatrix::zeros(3)).unwrap();
    assert!(res.composition < 1e-15);
}
