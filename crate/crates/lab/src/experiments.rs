//! Dispatch from a resolved configuration to the core experiments.

use sde_tv_core::density::{
    aronson_envelope_fit, exact_density, fokker_planck_solve, ClosedFormDensity, DensityGrid, GridSpec,
};
use sde_tv_core::distance::{tv_densities, TestFunction};
use sde_tv_core::exec::Executor;
use sde_tv_core::model::{ModelPair, SdeModel};
use sde_tv_core::rates::{
    counterexample_curve, dyadic_grid, fit_slope, smoothing_order_curve, tv_curve, w1_curve, RateCurve,
    RateFit, TvCurveOptions, TvMethod, W1Method,
};
use sde_tv_core::romberg::{vandermonde_residual, weight_bound_checks, weights};
use sde_tv_core::simulate::McBudget;

use crate::config::{catalog_model, Experiment, ExperimentConfig};
use crate::error::LabError;
use crate::output;

/// What a run produces besides the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    /// Printed to standard output.
    pub headline: String,
    /// Printed to standard error.
    pub warnings: Vec<String>,
}

pub fn run<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<RunOutput, LabError> {
    match cfg.experiment() {
        Experiment::Weights => run_weights(cfg),
        Experiment::Counterexample => {
            let curve = counterexample_curve(cfg.x, cfg.sigma, &time_grid(cfg)?)?;
            curve_output(cfg, curve)
        }
        Experiment::TvCurve => {
            let pair = pair(cfg)?;
            let opts = TvCurveOptions {
                method: match cfg.method.as_str() {
                    "fokker-planck" => TvMethod::FokkerPlanck,
                    _ => TvMethod::ClosedForm,
                },
                grid: grid_spec(cfg),
                gate_samples: cfg.gate_samples,
                gate_tol: cfg.gate_tol,
                mc: budget(cfg),
            };
            let curve = tv_curve(&pair, cfg.x, &time_grid(cfg)?, &opts, exec)?;
            curve_output(cfg, curve)
        }
        Experiment::W1Curve => {
            let pair = pair(cfg)?;
            let method = match cfg.w1_method.as_str() {
                "coupled" => W1Method::Coupled,
                _ => W1Method::Auto,
            };
            let curve = w1_curve(&pair, cfg.x, &time_grid(cfg)?, method, &budget(cfg), exec)?;
            curve_output(cfg, curve)
        }
        Experiment::SmoothingOrder => {
            let f = match cfg.test_function.as_str() {
                "sign" => TestFunction::Sign,
                _ => TestFunction::Indicator(cfg.threshold),
            };
            let law = ClosedFormDensity::gaussian(cfg.law_mean, cfg.law_var)?;
            let eps = match &cfg.eps_list {
                Some(list) => list.clone(),
                None => dyadic_grid(cfg.j_min, cfg.j_max)?,
            };
            let curve = smoothing_order_curve(&f, &law, cfg.r, &eps)?;
            curve_output(cfg, curve)
        }
        Experiment::FokkerPlanck => {
            let model = model_x(cfg)?;
            let grid = fokker_planck_solve(&model, cfg.x, cfg.t, &grid_spec(cfg))?;
            let mut headline = format!("mass={:.12}", grid.mass());
            if let Some(exact) = exact_density(&model, cfg.x, cfg.t) {
                let exact = exact?;
                let l1 = tv_densities((&grid).into(), (&exact).into())?;
                headline.push_str(&format!(" l1_vs_exact={l1:.3e}"));
            }
            Ok(RunOutput {
                csv: output::density_csv(&grid),
                headline,
                warnings: Vec::new(),
            })
        }
        Experiment::Envelope => {
            let model = model_x(cfg)?;
            let grid = fokker_planck_solve(&model, cfg.x, cfg.t, &grid_spec(cfg))?;
            let env = aronson_envelope_fit(&grid, cfg.x, cfg.t, sigma_max(&model, cfg.t, &grid))?;
            Ok(RunOutput {
                csv: output::envelope_csv(&grid, |y| env.eval(y)),
                headline: format!(
                    "C={:.6} c={:.6} envelope_mass={:.6}",
                    env.big_c,
                    env.small_c,
                    env.mass()
                ),
                warnings: Vec::new(),
            })
        }
    }
}

fn run_weights(cfg: &ExperimentConfig) -> Result<RunOutput, LabError> {
    let wt = weights(cfg.r)?;
    let residual = vandermonde_residual(&wt);
    let bounds = weight_bound_checks(&wt)?;
    let join = |v: Vec<String>| v.join(", ");
    let headline = format!(
        "r={} w=({})\nresidual=({})\nsum|w_i|n_i^-r={} <= {:.4}\nsum|w_i|2^((i-1)/2)={:.6} <= {:.4}",
        cfg.r,
        join(wt.w().iter().map(output::fraction).collect()),
        join(residual.iter().map(output::fraction).collect()),
        output::fraction(&bounds.sum_over_refiners),
        bounds.refiner_envelope,
        bounds.sum_sqrt2_growth,
        bounds.growth_envelope,
    );
    Ok(RunOutput {
        csv: output::weights_csv(&wt),
        headline,
        warnings: Vec::new(),
    })
}

fn curve_output(cfg: &ExperimentConfig, curve: RateCurve) -> Result<RunOutput, LabError> {
    let n = curve.points.len();
    let fit: RateFit = fit_slope(&curve, cfg.fit_skip.min(n)..n)?;
    Ok(RunOutput {
        csv: output::curve_csv(&curve, Some(&fit)),
        headline: format!(
            "slope={:.4} intercept={:.4} r2={:.6} points={}",
            fit.slope, fit.intercept, fit.r2, fit.used
        ),
        warnings: curve.warnings,
    })
}

fn time_grid(cfg: &ExperimentConfig) -> Result<Vec<f64>, LabError> {
    match &cfg.t_list {
        Some(list) => Ok(list.clone()),
        None => Ok(dyadic_grid(cfg.k_min, cfg.k_max)?),
    }
}

fn model_x(cfg: &ExperimentConfig) -> Result<SdeModel, LabError> {
    let name = cfg
        .model
        .as_deref()
        .ok_or_else(|| LabError::Config(format!("missing required key `model` for `{}`", cfg.experiment)))?;
    catalog_model("model", "params", name, &cfg.params)
}

fn pair(cfg: &ExperimentConfig) -> Result<ModelPair, LabError> {
    let mx = model_x(cfg)?;
    let horizon = time_grid(cfg)?.into_iter().fold(0.0, f64::max);
    Ok(match &cfg.model_y {
        Some(name) => {
            let my = catalog_model("model_y", "params_y", name, &cfg.params_y)?;
            ModelPair::new(mx, my, cfg.x, horizon)?
        }
        None => ModelPair::with_euler_proxy(mx, cfg.x, horizon)?,
    })
}

fn grid_spec(cfg: &ExperimentConfig) -> GridSpec {
    GridSpec {
        n_cells: cfg.n_cells,
        n_time_steps: cfg.n_time_steps,
        half_width_sigmas: cfg.half_width_sigmas,
        domain: cfg.domain_lo.zip(cfg.domain_hi),
        mass_tol: cfg.mass_tol,
    }
}

fn budget(cfg: &ExperimentConfig) -> McBudget {
    McBudget {
        n_paths: cfg.n_paths,
        min_steps: cfg.min_steps,
        fine_h: cfg.fine_h,
        seed: cfg.seed,
    }
}

fn sigma_max(model: &SdeModel, t: f64, grid: &DensityGrid) -> f64 {
    grid.nodes()
        .map(|y| model.diffusion(t, y).abs())
        .fold(f64::MIN_POSITIVE, f64::max)
}
