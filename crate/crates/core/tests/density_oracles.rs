use sde_tv_core::density::{
    aronson_envelope_fit, deriv_l1_norm, fokker_planck_solve, gaussian_density_deriv, ClosedFormDensity,
    GridSpec,
};
use sde_tv_core::distance::tv_densities;
use sde_tv_core::model::builtin_model;

fn central_difference(r: usize, mean: f64, var: f64, y: f64, h: f64) -> f64 {
    let f = |z: f64| gaussian_density_deriv(r - 1, mean, var, z);
    (f(y + h) - f(y - h)) / (2.0 * h)
}

/// Errors are measured relative to the largest `|p^(r)|` on the sample, since
/// pointwise ratios are meaningless at the Hermite roots.
#[test]
fn derivatives_match_finite_differences() {
    for r in 1..=6 {
        for (mean, var) in [(0.0, 1.0), (0.5, 0.3), (-1.0, 2.5)] {
            let sd = f64::sqrt(var);
            let ys: Vec<f64> = (0..=40).map(|k| mean + sd * (-5.0 + 0.25 * k as f64)).collect();
            let exact: Vec<f64> = ys
                .iter()
                .map(|&y| gaussian_density_deriv(r, mean, var, y))
                .collect();
            let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (&y, &e) in ys.iter().zip(&exact) {
                let fd = central_difference(r, mean, var, y, 1e-4);
                assert!((e - fd).abs() / scale < 1e-6, "r = {r}, y = {y}: {e} vs {fd}");
            }
        }
    }
}

#[test]
fn derivative_norms_scale_with_variance() {
    for r in 0..=8 {
        let base = deriv_l1_norm(r, 1.0).unwrap();
        for t in [1e-4, 0.01, 0.3, 5.0] {
            let scaled = deriv_l1_norm(r, t).unwrap();
            let expected = t.powf(-(r as f64) / 2.0) * base;
            assert!((scaled / expected - 1.0).abs() < 1e-10, "r = {r}, t = {t}");
        }
    }
    assert!((deriv_l1_norm(1, 1.0).unwrap() - f64::sqrt(2.0 / std::f64::consts::PI)).abs() < 1e-12);
}

#[test]
fn heat_kernel_refinement_order() {
    let bm = builtin_model("brownian-drift", &[0.0, 1.0]).unwrap();
    let exact = ClosedFormDensity::gaussian(0.0, 0.5).unwrap();
    let base = GridSpec {
        n_cells: 500,
        n_time_steps: 200,
        ..GridSpec::default()
    };
    let errs: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&k| {
            let g = fokker_planck_solve(&bm, 0.0, 0.5, &base.refined(k)).unwrap();
            tv_densities((&g).into(), (&exact).into()).unwrap()
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{errs:?}");
    }
}

#[test]
fn gbm_away_from_zero_matches_lognormal() {
    let gbm = builtin_model("gbm", &[1.0]).unwrap();
    let spec = GridSpec {
        domain: Some((0.2, 3.0)),
        ..GridSpec::default()
    };
    let g = fokker_planck_solve(&gbm, 1.0, 0.05, &spec).unwrap();
    let exact = ClosedFormDensity::gbm_lognormal(1.0, 1.0, 0.05).unwrap();
    assert!(tv_densities((&g).into(), (&exact).into()).unwrap() < 1e-3);
    assert!((g.mass() - 1.0).abs() < 1e-6);
}

#[test]
fn sine_diffusion_envelope_rate_is_in_the_diffusivity_range() {
    let sine = builtin_model("sine-diffusion", &[]).unwrap();
    let t = 0.05;
    let g = fokker_planck_solve(&sine, 0.0, t, &GridSpec::default()).unwrap();
    let env = aronson_envelope_fit(&g, 0.0, t, 1.5).unwrap();
    assert!(env.dominates(&g, 1e-12));
    let (lo, hi) = (1.0 / (2.0 * 1.5 * 1.5), 1.0 / (2.0 * 0.5 * 0.5));
    assert!(env.small_c >= 0.8 * lo && env.small_c <= 1.2 * hi, "{env:?}");
}
