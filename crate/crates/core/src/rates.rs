//! Distance curves over time grids and log-log slope fits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::density::{
    euler_one_step_density, exact_density, fokker_planck_solve, ClosedFormDensity, DensityGrid, GridSpec,
};
use crate::distance::{
    rr_smoothed_expectation, tv_report, w1_cdf, DensityRef, SmoothingParam, TestFunction, QUAD_TOL,
};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::model::{builtin_model, ModelPair, SdeModel};
use crate::simulate::{
    coupled_terminals, derive_seed, fine_steps, mc_lp_distance, sample_terminals, McBudget,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    /// Histogram TV between Monte Carlo samples and the Fokker-Planck density.
    pub oracle_gap: Option<f64>,
    /// Discrete mass of the Fokker-Planck density.
    pub mass: Option<f64>,
    /// Failed its oracle gate; excluded from fits.
    pub flagged: bool,
}

impl RatePoint {
    pub fn new(t: f64, value: f64, stderr: f64) -> Self {
        RatePoint {
            t,
            value,
            stderr,
            oracle_gap: None,
            mass: None,
            flagged: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CurveMeta {
    pub experiment: String,
    pub seed: u64,
    pub method: String,
}

/// Points sorted by decreasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub points: Vec<RatePoint>,
    pub meta: CurveMeta,
    pub warnings: Vec<String>,
}

impl RateCurve {
    pub fn new(mut points: Vec<RatePoint>, meta: CurveMeta) -> Result<Self> {
        if points
            .iter()
            .any(|p| !(p.t > 0.0 && p.t.is_finite() && p.value.is_finite()))
        {
            return Err(Error::Usage(
                "curve points need finite t > 0 and finite values".into(),
            ));
        }
        points.sort_by(|a, b| b.t.total_cmp(&a.t));
        if points.windows(2).any(|w| w[0].t == w[1].t) {
            return Err(Error::Usage("curve has repeated t values".into()));
        }
        Ok(RateCurve {
            points,
            meta,
            warnings: Vec::new(),
        })
    }

    /// Drops the two largest `t` when at least five points remain.
    pub fn default_window(&self) -> Range<usize> {
        let n = self.points.len();
        if n >= 5 {
            2..n
        } else {
            0..n
        }
    }

    pub fn ts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: Range<usize>,
    /// Unflagged points that entered the regression.
    pub used: usize,
}

/// Least squares of `log value` on `log t` over the unflagged points of `window`.
pub fn fit_slope(curve: &RateCurve, window: Range<usize>) -> Result<RateFit> {
    if window.end > curve.points.len() || window.start > window.end {
        return Err(Error::Fit(format!(
            "window {window:?} outside a curve of {} points",
            curve.points.len()
        )));
    }
    let pts: Vec<&RatePoint> = curve.points[window.clone()]
        .iter()
        .filter(|p| !p.flagged)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 unflagged points, window has {}",
            pts.len()
        )));
    }
    if let Some(p) = pts.iter().find(|p| !(p.value > 0.0)) {
        return Err(Error::Fit(format!(
            "value {} at t = {} is not positive (distance underflow?)",
            p.value, p.t
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| libm::log(p.t)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| libm::log(p.value)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all t in the window coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        window,
        used: pts.len(),
    })
}

/// `2^-k` for `k = k_min..=k_max`.
pub fn dyadic_grid(k_min: i32, k_max: i32) -> Result<Vec<f64>> {
    if k_min > k_max {
        return Err(Error::Usage(format!("empty dyadic grid k = {k_min}..={k_max}")));
    }
    Ok((k_min..=k_max).map(|k| libm::ldexp(1.0, -k)).collect())
}

fn check_grid(ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::Usage("time grid is empty".into()));
    }
    if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Usage("time grid entries must be finite and > 0".into()));
    }
    Ok(())
}

/// Exact TV between GBM from `x` and its one-step Euler law, for each `t`.
pub fn counterexample_curve(x: f64, sigma: f64, ts: &[f64]) -> Result<RateCurve> {
    check_grid(ts)?;
    let gbm = builtin_model("gbm", &[sigma])?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid("gbm", "x", "start point must be > 0"));
    }
    let mut points = Vec::with_capacity(ts.len());
    for &t in ts {
        let exact = ClosedFormDensity::gbm_lognormal(x, sigma, t)?;
        let euler = euler_one_step_density(&gbm, x, t)?;
        let rep = tv_report((&exact).into(), (&euler).into())?;
        points.push(RatePoint::new(t, rep.value, QUAD_TOL.max(rep.error)));
    }
    RateCurve::new(
        points,
        CurveMeta {
            experiment: "counterexample".into(),
            seed: 0,
            method: "closed-form".into(),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMethod {
    ClosedForm,
    FokkerPlanck,
}

impl TvMethod {
    pub fn tag(self) -> &'static str {
        match self {
            TvMethod::ClosedForm => "closed-form",
            TvMethod::FokkerPlanck => "fokker-planck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvCurveOptions {
    pub method: TvMethod,
    pub grid: GridSpec,
    /// Samples for the histogram oracle; 0 disables the gate.
    pub gate_samples: usize,
    pub gate_tol: f64,
    /// Fine-grid settings and seed of the oracle simulation.
    pub mc: McBudget,
}

impl Default for TvCurveOptions {
    fn default() -> Self {
        TvCurveOptions {
            method: TvMethod::ClosedForm,
            grid: GridSpec::default(),
            gate_samples: 4_000_000,
            gate_tol: 0.01,
            mc: McBudget::default(),
        }
    }
}

fn closed_law(model: &SdeModel, x: f64, t: f64) -> Result<ClosedFormDensity> {
    match exact_density(model, x, t) {
        Some(law) => law,
        None => Err(Error::Precondition(format!(
            "`{}` has no closed-form transition density",
            model.name()
        ))),
    }
}

enum Law {
    Closed(ClosedFormDensity),
    Grid(DensityGrid),
}

impl Law {
    fn as_ref(&self) -> DensityRef<'_> {
        match self {
            Law::Closed(c) => c.into(),
            Law::Grid(g) => g.into(),
        }
    }
}

struct TvPoint {
    point: RatePoint,
    warning: Option<String>,
}

fn tv_point<E: Executor>(
    pair: &ModelPair,
    x: f64,
    t: f64,
    index: usize,
    opts: &TvCurveOptions,
    exec: &E,
) -> Result<TvPoint> {
    let law_of = |model: &SdeModel| -> Result<Law> {
        match opts.method {
            TvMethod::ClosedForm => closed_law(model, x, t).map(Law::Closed),
            TvMethod::FokkerPlanck => match exact_density(model, x, t) {
                // Only constant-coefficient laws skip the solver; every
                // other model is the object under test.
                Some(Ok(law)) if model.has_constant_coefficients() => Ok(Law::Closed(law)),
                _ => fokker_planck_solve(model, x, t, &opts.grid).map(Law::Grid),
            },
        }
    };
    let (lx, ly) = (law_of(&pair.model_x)?, law_of(&pair.model_y)?);
    let rep = tv_report(lx.as_ref(), ly.as_ref())?;
    let mut point = RatePoint::new(t, rep.value, QUAD_TOL.max(rep.error));
    let mut warning = None;
    if rep.resample_outside_mass > 1e-9 {
        warning = Some(format!(
            "t = {t:e}: resampled grid mass {:e} fell outside the reference grid",
            rep.resample_outside_mass
        ));
    }
    let mut gate_failures = Vec::new();
    for (model, law) in [(&pair.model_x, &lx), (&pair.model_y, &ly)] {
        let Law::Grid(grid) = law else { continue };
        point.mass = Some(point.mass.map_or(grid.mass(), |m: f64| {
            if (m - 1.0).abs() > (grid.mass() - 1.0).abs() {
                m
            } else {
                grid.mass()
            }
        }));
        if opts.gate_samples == 0 {
            continue;
        }
        let seed = derive_seed(opts.mc.seed, index as u64);
        let steps = fine_steps(t, opts.mc.fine_h, opts.mc.min_steps);
        let mut samples = sample_terminals(model, x, t, steps, opts.gate_samples, seed, exec)?;
        let gap = histogram_tv(&mut samples, grid)?;
        point.oracle_gap = Some(point.oracle_gap.map_or(gap, |g: f64| g.max(gap)));
        if gap > opts.gate_tol {
            gate_failures.push(format!(
                "t = {t:e}: histogram oracle gap {gap:.4} exceeds {} for `{}`",
                opts.gate_tol,
                model.name()
            ));
        }
    }
    if !gate_failures.is_empty() {
        point.flagged = true;
        warning = Some(gate_failures.join("; "));
    }
    Ok(TvPoint { point, warning })
}

/// TV between the two members of `pair` at each `t`; points failing the
/// histogram oracle are flagged and reported in `warnings`.
pub fn tv_curve<E: Executor>(
    pair: &ModelPair,
    x: f64,
    ts: &[f64],
    opts: &TvCurveOptions,
    exec: &E,
) -> Result<RateCurve> {
    check_grid(ts)?;
    let mut points = Vec::with_capacity(ts.len());
    let mut warnings = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        let p = tv_point(pair, x, t, i, opts, exec)?;
        warnings.extend(p.warning);
        points.push(p.point);
    }
    let mut curve = RateCurve::new(
        points,
        CurveMeta {
            experiment: "tv-curve".into(),
            seed: opts.mc.seed,
            method: opts.method.tag().into(),
        },
    )?;
    curve.warnings = warnings;
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum W1Method {
    /// Exact CDF integral when both laws are closed form, coupled bound otherwise.
    Auto,
    /// Always the synchronous-coupling bound `E|X_t - Y_t|`.
    Coupled,
}

/// W1 at each `t`: exact when possible (`Auto`), otherwise the coupled
/// Monte Carlo upper bound `E|X_t - Y_t|` with its standard error.
pub fn w1_curve<E: Executor>(
    pair: &ModelPair,
    x: f64,
    ts: &[f64],
    method: W1Method,
    mc: &McBudget,
    exec: &E,
) -> Result<RateCurve> {
    check_grid(ts)?;
    let closed = |t: f64| -> Option<(ClosedFormDensity, ClosedFormDensity)> {
        let a = exact_density(&pair.model_x, x, t)?.ok()?;
        let b = exact_density(&pair.model_y, x, t)?.ok()?;
        Some((a, b))
    };
    let use_cdf = method == W1Method::Auto && closed(ts[0]).is_some();
    let mut points = Vec::with_capacity(ts.len());
    for (i, &t) in ts.iter().enumerate() {
        let point = if use_cdf {
            let (a, b) =
                closed(t).ok_or_else(|| Error::Precondition("closed form lost along the grid".into()))?;
            RatePoint::new(t, w1_cdf((&a).into(), (&b).into())?, 0.0)
        } else {
            let steps = fine_steps(t, mc.fine_h, mc.min_steps);
            let seed = derive_seed(mc.seed, i as u64);
            let pairs = coupled_terminals(pair, x, t, steps, mc.n_paths, seed, exec)?;
            let est = mc_lp_distance(&pairs, 1.0)?;
            RatePoint::new(t, est.value, est.stderr)
        };
        points.push(point);
    }
    RateCurve::new(
        points,
        CurveMeta {
            experiment: "w1-curve".into(),
            seed: mc.seed,
            method: if use_cdf { "cdf" } else { "coupled-bound" }.to_string(),
        },
    )
}

/// `|RR estimate - E f(Z)|` against the smoothing level; the curve's `t`
/// column holds `eps`.
pub fn smoothing_order_curve(
    f: &TestFunction,
    law: &ClosedFormDensity,
    r: usize,
    eps_grid: &[f64],
) -> Result<RateCurve> {
    check_grid(eps_grid)?;
    let ClosedFormDensity::Gaussian { mean, var } = *law else {
        return Err(Error::Usage("smoothing order curves need a gaussian law".into()));
    };
    let exact = f.gaussian_expectation(mean, var);
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let est = rr_smoothed_expectation(f, law, SmoothingParam::new(eps)?, r)?;
        points.push(RatePoint::new(eps, (est - exact).abs(), 0.0));
    }
    RateCurve::new(
        points,
        CurveMeta {
            experiment: "smoothing-order".into(),
            seed: 0,
            method: format!("closed-form r={r}"),
        },
    )
}

/// Freedman-Diaconis histogram of `samples` compared with `grid` bin by bin:
/// `sum_b |n_b / n - P_grid(b)|` plus the grid mass outside the sample range.
///
/// With `n` samples and `B` bins the statistic carries a positive sampling
/// floor of roughly `sqrt(2 / (pi n)) sum_b sqrt(P(b))`, which grows like
/// `n^{-1/3}` under the Freedman-Diaconis rule. `samples` is sorted in place.
pub fn histogram_tv(samples: &mut [f64], grid: &DensityGrid) -> Result<f64> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::Usage("histogram oracle needs at least 4 samples".into()));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::SolverDiverged("non-finite Monte Carlo sample".into()));
    }
    samples.sort_unstable_by(|a, b| a.total_cmp(b));
    let q = |p: f64| samples[((p * (n - 1) as f64) as usize).min(n - 1)];
    let iqr = q(0.75) - q(0.25);
    let (lo, hi) = (samples[0], samples[n - 1]);
    if !(iqr > 0.0 && hi > lo) {
        return Err(Error::Usage("samples are degenerate".into()));
    }
    let h = 2.0 * iqr / libm::cbrt(n as f64);
    let bins = (libm::ceil((hi - lo) / h) as usize).max(1);
    let width = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0usize; bins];
    for &s in samples.iter() {
        let b = (((s - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut tv = grid.cdf(lo) + (1.0 - grid.cdf(hi));
    let mut prev = grid.cdf(lo);
    for (b, &c) in counts.iter().enumerate() {
        let edge = if b + 1 == bins {
            hi
        } else {
            lo + (b + 1) as f64 * width
        };
        let next = grid.cdf(edge);
        tv += (c as f64 / n as f64 - (next - prev)).abs();
        prev = next;
    }
    Ok(tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ClosedFormDensity;
    use crate::exec::Sequential;
    use crate::model::builtin_model;
    use crate::numeric::linspace;

    fn curve(points: Vec<(f64, f64)>) -> RateCurve {
        RateCurve::new(
            points
                .into_iter()
                .map(|(t, v)| RatePoint::new(t, v, 0.0))
                .collect(),
            CurveMeta {
                experiment: "test".into(),
                seed: 0,
                method: "none".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn exact_power_law() {
        let c = curve(
            (1..=10)
                .map(|k| {
                    let t = libm::ldexp(1.0, -k);
                    (t, 3.0 * libm::sqrt(t))
                })
                .collect(),
        );
        let fit = fit_slope(&c, 0..c.points.len()).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - libm::log(3.0)).abs() < 1e-12);
        assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn constant_curve_has_zero_slope() {
        let c = curve((1..=6).map(|k| (libm::ldexp(1.0, -k), 0.7)).collect());
        let fit = fit_slope(&c, c.default_window()).unwrap();
        assert!(fit.slope.abs() < 1e-14);
        assert_eq!(fit.window, 2..6);
    }

    #[test]
    fn perturbed_linear_law() {
        // Deterministic +-1% wiggle.
        let c = curve(
            (1..=12)
                .map(|k| {
                    let t = libm::ldexp(1.0, -k);
                    let noise = if k % 2 == 0 { 1.0 } else { -1.0 };
                    (t, t * (1.0 + 0.01 * noise))
                })
                .collect(),
        );
        let fit = fit_slope(&c, 0..12).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.02);
    }

    #[test]
    fn fit_errors() {
        let c = curve(alloc::vec![(0.5, 1.0), (0.25, 0.0), (0.125, 1.0)]);
        assert!(matches!(fit_slope(&c, 0..3), Err(Error::Fit(_))));
        assert!(matches!(fit_slope(&c, 0..2), Err(Error::Fit(_))));
        assert!(matches!(fit_slope(&c, 0..9), Err(Error::Fit(_))));
    }

    #[test]
    fn flagged_points_are_skipped() {
        let mut c = curve(
            (1..=5)
                .map(|k| {
                    let t = libm::ldexp(1.0, -k);
                    (t, t)
                })
                .collect(),
        );
        c.points[1].value = 100.0;
        c.points[1].flagged = true;
        let fit = fit_slope(&c, 0..5).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert_eq!(fit.used, 4);
    }

    #[test]
    fn curves_sort_by_decreasing_t() {
        let c = curve(alloc::vec![(0.1, 1.0), (0.4, 2.0), (0.2, 3.0)]);
        assert_eq!(c.ts(), alloc::vec![0.4, 0.2, 0.1]);
        assert!(RateCurve::new(
            alloc::vec![RatePoint::new(0.1, 1.0, 0.0), RatePoint::new(0.1, 1.0, 0.0)],
            c.meta.clone()
        )
        .is_err());
    }

    #[test]
    fn dyadic() {
        assert_eq!(dyadic_grid(1, 3).unwrap(), alloc::vec![0.5, 0.25, 0.125]);
        assert!(dyadic_grid(3, 1).is_err());
    }

    #[test]
    fn counterexample_decreases() {
        let ts = dyadic_grid(4, 10).unwrap();
        let c = counterexample_curve(1.0, 1.0, &ts).unwrap();
        assert!(c.points.windows(2).all(|w| w[0].value > w[1].value));
        assert!(counterexample_curve(-1.0, 1.0, &ts).is_err());
    }

    #[test]
    fn smoothing_curve_orders() {
        let law = ClosedFormDensity::gaussian(0.0, 1.0).unwrap();
        let eps: Vec<f64> = (3..=10).map(|j| libm::ldexp(1.0, -j)).collect();
        let f = TestFunction::Indicator(0.3);
        let errs: Vec<f64> = (1..=3)
            .map(|r| smoothing_order_curve(&f, &law, r, &eps).unwrap().points[0].value)
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn closed_form_tv_curve_needs_closed_laws() {
        let sine = builtin_model("sine-diffusion", &[]).unwrap();
        let pair = ModelPair::with_euler_proxy(sine, 0.0, 1.0).unwrap();
        let err = tv_curve(&pair, 0.0, &[0.1], &TvCurveOptions::default(), &Sequential).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn identical_models_give_zero_w1() {
        let ou = builtin_model("ou", &[1.0, 1.0]).unwrap();
        let pair = ModelPair::new(ou, ou, 1.0, 1.0).unwrap();
        let mc = McBudget {
            n_paths: 200,
            ..McBudget::default()
        };
        for method in [W1Method::Auto, W1Method::Coupled] {
            let c = w1_curve(&pair, 1.0, &[0.1, 0.05], method, &mc, &Sequential).unwrap();
            assert!(c.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn histogram_oracle_on_quantiles() {
        // Stratified samples from N(0, 1) give a small gap against the density.
        let d = ClosedFormDensity::gaussian(0.0, 1.0).unwrap();
        let ys = linspace(-12.0, 12.0, 4801);
        let vals: Vec<f64> = ys.iter().map(|&y| d.pdf(y)).collect();
        let grid = DensityGrid::new(-12.0, ys[1] - ys[0], vals).unwrap();
        let n = 20_000;
        let mut samples: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                crate::numeric::bisect(|z| crate::numeric::normal_cdf(z) - u, -10.0, 10.0)
            })
            .collect();
        let gap = histogram_tv(&mut samples, &grid).unwrap();
        assert!(gap < 0.01, "{gap}");
        let shifted = DensityGrid::new(-11.0, ys[1] - ys[0], grid.values().to_vec()).unwrap();
        assert!(histogram_tv(&mut samples, &shifted).unwrap() > 0.5);
    }
}
