//! Total variation and W1 distances between scalar laws, Gaussian smoothing of
//! bounded test functions, and the Richardson-Romberg smoothed estimator.
//!
//! Total variation is reported as `int |p - q|`, so it ranges over `[0, 2]`.

use alloc::format;
use alloc::vec::Vec;

use crate::density::{deriv_l1_norm, ClosedFormDensity, DensityGrid};
use crate::error::{Error, Result};
use crate::numeric::{self, normal_cdf};
use crate::romberg;

/// Absolute tolerance of the TV and W1 quadratures.
pub const QUAD_TOL: f64 = 1e-10;
/// Samples per density used to bracket crossing points.
const CROSSING_SCAN: usize = 4096;

/// Borrowed scalar law: either closed form or a density grid.
#[derive(Debug, Clone, Copy)]
pub enum DensityRef<'a> {
    Closed(&'a ClosedFormDensity),
    Grid(&'a DensityGrid),
}

impl<'a> From<&'a ClosedFormDensity> for DensityRef<'a> {
    fn from(d: &'a ClosedFormDensity) -> Self {
        DensityRef::Closed(d)
    }
}

impl<'a> From<&'a DensityGrid> for DensityRef<'a> {
    fn from(g: &'a DensityGrid) -> Self {
        DensityRef::Grid(g)
    }
}

impl DensityRef<'_> {
    pub fn pdf(&self, y: f64) -> f64 {
        match self {
            DensityRef::Closed(d) => d.pdf(y),
            DensityRef::Grid(g) => g.pdf(y),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            DensityRef::Closed(d) => d.cdf(y),
            DensityRef::Grid(g) => g.cdf(y),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            DensityRef::Closed(d) => d.support(),
            DensityRef::Grid(g) => (g.lo(), g.hi()),
        }
    }

    fn lower_tail_integral(&self, a: f64) -> f64 {
        match self {
            DensityRef::Closed(d) => d.lower_tail_integral(a),
            DensityRef::Grid(g) => {
                if a <= g.lo() {
                    0.0
                } else {
                    numeric::integrate(|y| g.cdf(y), g.lo(), a, 1e-13)
                        .map(|q| q.value)
                        .unwrap_or(0.0)
                }
            }
        }
    }

    fn upper_tail_integral(&self, b: f64) -> f64 {
        match self {
            DensityRef::Closed(d) => d.upper_tail_integral(b),
            DensityRef::Grid(g) => {
                if b >= g.hi() {
                    0.0
                } else {
                    numeric::integrate(|y| 1.0 - g.cdf(y), b, g.hi(), 1e-13)
                        .map(|q| q.value)
                        .unwrap_or(0.0)
                }
            }
        }
    }

    fn scan_points(&self) -> Vec<f64> {
        match self {
            DensityRef::Closed(d) => {
                let (lo, hi) = d.support();
                match d {
                    ClosedFormDensity::GbmLognormal { .. } => {
                        numeric::linspace(libm::log(lo), libm::log(hi), CROSSING_SCAN)
                            .into_iter()
                            .map(libm::exp)
                            .collect()
                    }
                    _ => numeric::linspace(lo, hi, CROSSING_SCAN),
                }
            }
            DensityRef::Grid(g) => g.nodes().collect(),
        }
    }
}

/// TV value with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvReport {
    pub value: f64,
    /// Quadrature error estimate.
    pub error: f64,
    /// Mass of a resampled grid that fell outside the reference grid; nonzero
    /// values are a warning, not a failure.
    pub resample_outside_mass: f64,
}

fn merged_scan(p: &DensityRef, q: &DensityRef) -> Vec<f64> {
    let mut pts = p.scan_points();
    pts.extend(q.scan_points());
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

fn union_support(p: &DensityRef, q: &DensityRef) -> (f64, f64) {
    let (a, b) = p.support();
    let (c, d) = q.support();
    (a.min(c), b.max(d))
}

/// `int |l(y) - q(y)|` over `[a, b]` with `l` linear between `(a, la)` and `(b, lb)`.
fn abs_linear_minus<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    la: f64,
    lb: f64,
    tol: f64,
) -> Result<numeric::Quadrature> {
    let g = |y: f64| la + (lb - la) * (y - a) / (b - a) - f(y);
    let (ga, gb) = (g(a), g(b));
    let breaks: Vec<f64> = if ga != 0.0 && gb != 0.0 && (ga > 0.0) != (gb > 0.0) {
        alloc::vec![numeric::bisect(g, a, b)]
    } else {
        Vec::new()
    };
    numeric::integrate_split(|y| g(y).abs(), a, b, &breaks, tol)
}

/// Exact `int |p - q|` for two piecewise-linear densities on a common grid.
fn tv_piecewise_linear(p: &[f64], q: &[f64], dx: f64) -> f64 {
    p.windows(2)
        .zip(q.windows(2))
        .map(|(pw, qw)| {
            let (d0, d1) = (pw[0] - qw[0], pw[1] - qw[1]);
            if (d0 >= 0.0) == (d1 >= 0.0) {
                0.5 * (d0.abs() + d1.abs()) * dx
            } else {
                // Two triangles meeting at the crossing.
                0.5 * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs()) * dx
            }
        })
        .sum()
}

pub fn tv_report(p: DensityRef, q: DensityRef) -> Result<TvReport> {
    match (p, q) {
        (DensityRef::Grid(a), DensityRef::Grid(b)) => {
            if a.same_geometry(b) {
                return Ok(TvReport {
                    value: tv_piecewise_linear(a.values(), b.values(), a.dx()),
                    error: 0.0,
                    resample_outside_mass: 0.0,
                });
            }
            let resampled: Vec<f64> = a.nodes().map(|y| b.pdf(y)).collect();
            let outside = b.cdf(a.lo()) + (1.0 - b.cdf(a.hi()));
            Ok(TvReport {
                value: tv_piecewise_linear(a.values(), &resampled, a.dx()) + outside,
                error: 0.0,
                resample_outside_mass: outside,
            })
        }
        (DensityRef::Grid(g), DensityRef::Closed(c)) | (DensityRef::Closed(c), DensityRef::Grid(g)) => {
            let f = |y: f64| c.pdf(y);
            let cells = g.len() - 1;
            let tol = QUAD_TOL / cells as f64;
            let mut value = 0.0;
            let mut error = 0.0;
            let vals = g.values();
            for i in 0..cells {
                let quad = abs_linear_minus(&f, g.node(i), g.node(i + 1), vals[i], vals[i + 1], tol)?;
                value += quad.value;
                error += quad.error;
            }
            // The grid density is zero outside its range.
            value += c.cdf(g.lo()) + (1.0 - c.cdf(g.hi()));
            Ok(TvReport {
                value,
                error,
                resample_outside_mass: 0.0,
            })
        }
        (DensityRef::Closed(a), DensityRef::Closed(b)) => {
            let (pr, qr) = (DensityRef::Closed(a), DensityRef::Closed(b));
            let (lo, hi) = union_support(&pr, &qr);
            let diff = |y: f64| a.pdf(y) - b.pdf(y);
            let crossings = numeric::sign_changes(diff, &merged_scan(&pr, &qr));
            let quad = numeric::integrate_split(|y| diff(y).abs(), lo, hi, &crossings, QUAD_TOL)?;
            let tails = (a.cdf(lo) - b.cdf(lo)).abs() + ((1.0 - a.cdf(hi)) - (1.0 - b.cdf(hi))).abs();
            Ok(TvReport {
                value: (quad.value + tails).min(2.0),
                error: quad.error,
                resample_outside_mass: 0.0,
            })
        }
    }
}

/// `int |p - q|`, in `[0, 2]`.
pub fn tv_densities(p: DensityRef, q: DensityRef) -> Result<f64> {
    tv_report(p, q).map(|r| r.value)
}

/// `W1(p, q) = int |F_p - F_q|`, truncated to the union of the supports with
/// the tails added in closed form.
pub fn w1_cdf(p: DensityRef, q: DensityRef) -> Result<f64> {
    let (lo, hi) = union_support(&p, &q);
    let diff = |y: f64| p.cdf(y) - q.cdf(y);
    let crossings = numeric::sign_changes(diff, &merged_scan(&p, &q));
    let quad = numeric::integrate_split(|y| diff(y).abs(), lo, hi, &crossings, QUAD_TOL)?;
    let lower = (p.lower_tail_integral(lo) - q.lower_tail_integral(lo)).abs();
    let upper = (p.upper_tail_integral(hi) - q.upper_tail_integral(hi)).abs();
    Ok(quad.value + lower + upper)
}

/// Bounded measurable test function.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `1{y <= a}`.
    Indicator(f64),
    /// `sign(y)`.
    Sign,
    /// Piecewise constant: `levels[0]` on `(-inf, breaks[0]]`, `levels[j]` on
    /// `(breaks[j-1], breaks[j]]`, `levels[k]` above `breaks[k-1]`.
    Step { breaks: Vec<f64>, levels: Vec<f64> },
}

impl TestFunction {
    pub fn step(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breaks.len() + 1 {
            return Err(Error::Usage("step needs one more level than breaks".into()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::Usage("step breaks must be finite and increasing".into()));
        }
        if levels.iter().any(|l| !(l.abs() <= 1.0)) {
            return Err(Error::Usage("step levels must lie in [-1, 1]".into()));
        }
        Ok(TestFunction::Step { breaks, levels })
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            TestFunction::Indicator(a) => {
                if y <= *a {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Sign => {
                if y > 0.0 {
                    1.0
                } else if y < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            TestFunction::Step { breaks, levels } => {
                let j = breaks.iter().take_while(|&&b| y > b).count();
                levels[j]
            }
        }
    }

    /// `c + sum_j coef_j 1{y <= a_j}`.
    fn indicator_form(&self) -> (f64, Vec<(f64, f64)>) {
        match self {
            TestFunction::Indicator(a) => (0.0, alloc::vec![(1.0, *a)]),
            // sign = 1 - 2 * 1{y <= 0} off the null set {0}
            TestFunction::Sign => (1.0, alloc::vec![(-2.0, 0.0)]),
            TestFunction::Step { breaks, levels } => {
                let top = *levels.last().unwrap();
                let terms = breaks
                    .iter()
                    .enumerate()
                    .map(|(j, &b)| (levels[j] - levels[j + 1], b))
                    .collect();
                (top, terms)
            }
        }
    }

    /// `E f(Z)` for `Z ~ N(mean, var)`.
    pub fn gaussian_expectation(&self, mean: f64, var: f64) -> f64 {
        let (c, terms) = self.indicator_form();
        let sd = libm::sqrt(var);
        c + terms
            .iter()
            .map(|(coef, a)| coef * normal_cdf((a - mean) / sd))
            .sum::<f64>()
    }
}

/// Smoothing variance `eps > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParam(f64);

impl SmoothingParam {
    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(SmoothingParam(eps))
        } else {
            Err(Error::Usage("smoothing parameter must be finite and > 0".into()))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `f_eps(y) = E f(y + sqrt(eps) Z)`, in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed {
    constant: f64,
    terms: Vec<(f64, f64)>,
    sqrt_eps: f64,
}

impl Smoothed {
    pub fn eval(&self, y: f64) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(coef, a)| coef * normal_cdf((a - y) / self.sqrt_eps))
                .sum::<f64>()
    }
}

pub fn smooth(f: &TestFunction, eps: SmoothingParam) -> Smoothed {
    let (constant, terms) = f.indicator_form();
    Smoothed {
        constant,
        terms,
        sqrt_eps: libm::sqrt(eps.get()),
    }
}

/// `sqrt(2/pi) eps^{-1/2}`, the Lipschitz bound of `f_eps` for `|f| <= 1`.
pub fn smoothing_lipschitz_bound(eps: SmoothingParam) -> f64 {
    numeric::abs_normal_mean() / libm::sqrt(eps.get())
}

/// `sum_i w_i E f_{eps/n_i}(Z)` for a Gaussian `Z`, where
/// `E f_{e}(Z) = E f(N(mean, var + e))`.
pub fn rr_smoothed_expectation(
    f: &TestFunction,
    law: &ClosedFormDensity,
    eps: SmoothingParam,
    r: usize,
) -> Result<f64> {
    let ClosedFormDensity::Gaussian { mean, var } = *law else {
        return Err(Error::invalid(
            "rr_smoothed_expectation",
            "law",
            "closed form needs a gaussian law",
        ));
    };
    let wt = romberg::weights(r)?;
    Ok(wt
        .w_f64()
        .iter()
        .zip(wt.refiners())
        .map(|(w, &n)| w * f.gaussian_expectation(mean, var + eps.get() / n as f64))
        .sum())
}

/// Minimiser of `kappa eps^r + W1 eps^{-1/2}`:
/// `(W1 / (2 r D))^{2/(2r+1)}` with `D` the summed derivative norms.
pub fn optimal_epsilon(r: usize, w1: f64, deriv_norm_sum: f64) -> Result<f64> {
    if r == 0 || !(w1 > 0.0 && deriv_norm_sum > 0.0) {
        return Err(Error::Usage(format!(
            "optimal_epsilon needs r >= 1 and positive inputs (r = {r}, w1 = {w1}, sum = {deriv_norm_sum})"
        )));
    }
    let r = r as f64;
    Ok(libm::pow(w1 / (2.0 * r * deriv_norm_sum), 2.0 / (2.0 * r + 1.0)))
}

/// `TV / (W1^{2r/(2r+1)} D^{1/(2r+1)})` for two Gaussians, where `D` sums the
/// `L1` norms of the `2r`-th density derivatives.
pub fn smoothing_bound_ratio(p: &ClosedFormDensity, q: &ClosedFormDensity, r: usize) -> Result<f64> {
    let (ClosedFormDensity::Gaussian { var: vp, .. }, ClosedFormDensity::Gaussian { var: vq, .. }) = (*p, *q)
    else {
        return Err(Error::Usage("bound ratio is defined for gaussian pairs".into()));
    };
    let tv = tv_densities(p.into(), q.into())?;
    let w1 = w1_cdf(p.into(), q.into())?;
    if w1 == 0.0 {
        return Ok(0.0);
    }
    let d = deriv_l1_norm(2 * r, vp)? + deriv_l1_norm(2 * r, vq)?;
    let r = r as f64;
    Ok(tv / (libm::pow(w1, 2.0 * r / (2.0 * r + 1.0)) * libm::pow(d, 1.0 / (2.0 * r + 1.0))))
}
