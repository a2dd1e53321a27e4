use proptest::prelude::*;
use sde_tv_core::density::ClosedFormDensity;
use sde_tv_core::distance::{smooth, tv_densities, w1_cdf, SmoothingParam, TestFunction};
use sde_tv_core::model::{builtin_model, delta_b, delta_sigma, euler_proxy, ModelPair, SdeModel};

fn gaussian() -> impl Strategy<Value = ClosedFormDensity> {
    (-2.0..2.0f64, 0.05..4.0f64).prop_map(|(m, v)| ClosedFormDensity::gaussian(m, v).unwrap())
}

fn catalog_model() -> impl Strategy<Value = SdeModel> {
    prop_oneof![
        (0.1..2.0f64).prop_map(|s| builtin_model("gbm", &[s]).unwrap()),
        (0.1..2.0f64, 0.1..2.0f64, -1.0..1.0f64)
            .prop_map(|(th, s, m)| builtin_model("ou", &[th, s, m]).unwrap()),
        (-1.0..1.0f64, 0.1..2.0f64).prop_map(|(mu, s)| builtin_model("brownian-drift", &[mu, s]).unwrap()),
        Just(builtin_model("sine-diffusion", &[]).unwrap()),
        (0.1..2.0f64, 0.05..0.45f64).prop_map(|(s, e)| builtin_model("clamped-gbm", &[s, e]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tv_is_a_bounded_symmetric_metric(p in gaussian(), q in gaussian(), r in gaussian()) {
        let pq = tv_densities((&p).into(), (&q).into()).unwrap();
        let qp = tv_densities((&q).into(), (&p).into()).unwrap();
        let pr = tv_densities((&p).into(), (&r).into()).unwrap();
        let rq = tv_densities((&r).into(), (&q).into()).unwrap();
        prop_assert!((pq - qp).abs() < 1e-8);
        prop_assert!((0.0..=2.0).contains(&pq));
        prop_assert!(pq <= pr + rq + 1e-8);
        prop_assert!(tv_densities((&p).into(), (&p).into()).unwrap() < 1e-12);
    }

    #[test]
    fn w1_is_symmetric_and_shift_exact(p in gaussian(), q in gaussian(), d in -1.0..1.0f64) {
        let a = w1_cdf((&p).into(), (&q).into()).unwrap();
        let b = w1_cdf((&q).into(), (&p).into()).unwrap();
        prop_assert!((a - b).abs() < 1e-8);
        let (m, v) = match p {
            ClosedFormDensity::Gaussian { mean, var } => (mean, var),
            _ => unreachable!(),
        };
        let shifted = ClosedFormDensity::gaussian(m + d, v).unwrap();
        let w = w1_cdf((&p).into(), (&shifted).into()).unwrap();
        prop_assert!((w - d.abs()).abs() < 1e-8);
    }

    #[test]
    fn euler_proxy_is_idempotent(m in catalog_model(), x in 0.1..3.0f64, t in 0.0..1.0f64, y in -5.0..5.0f64) {
        let once = euler_proxy(&m, x);
        let twice = euler_proxy(&once, x);
        prop_assert_eq!(once.drift(t, y), twice.drift(t, y));
        prop_assert_eq!(once.diffusion(t, y), twice.diffusion(t, y));
        prop_assert_eq!(once.drift(t, y), m.drift(0.0, x));
        prop_assert_eq!(once.diffusion(t, y), m.diffusion(0.0, x));
    }

    #[test]
    fn coefficient_gaps_are_pseudometrics(a in catalog_model(), b in catalog_model(), c in catalog_model(), x in 0.1..3.0f64) {
        let pair = |m1: SdeModel, m2: SdeModel| ModelPair::new(m1, m2, x, 1.0).unwrap();
        for gap in [delta_b, delta_sigma] {
            let ab = gap(&pair(a, b), x);
            prop_assert_eq!(ab, gap(&pair(b, a), x));
            prop_assert!(ab <= gap(&pair(a, c), x) + gap(&pair(c, b), x) + 1e-12);
            prop_assert_eq!(gap(&pair(a, a), x), 0.0);
        }
        prop_assert_eq!(delta_b(&ModelPair::with_euler_proxy(a, x, 1.0).unwrap(), x), 0.0);
        prop_assert_eq!(delta_sigma(&ModelPair::with_euler_proxy(a, x, 1.0).unwrap(), x), 0.0);
    }

    #[test]
    fn smoothing_keeps_functions_bounded(a in -2.0..2.0f64, eps in 1e-4..1.0f64, y in -5.0..5.0f64) {
        let e = SmoothingParam::new(eps).unwrap();
        for f in [TestFunction::Indicator(a), TestFunction::Sign] {
            let v = smooth(&f, e).eval(y);
            prop_assert!(v.abs() <= 1.0);
        }
    }
}
