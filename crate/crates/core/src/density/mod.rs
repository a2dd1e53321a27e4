//! Transition densities of scalar diffusions.

mod envelope;
mod fokker_planck;
mod grid;

pub use envelope::{aronson_envelope_fit, AronsonEnvelope};
pub use fokker_planck::{fokker_planck_solve, GridSpec};
pub use grid::DensityGrid;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Coefficients, ExactLaw, SdeModel};
use crate::numeric::{self, normal_cdf, normal_pdf};

/// Width, in standard deviations (log-space for the lognormal), of the
/// interval treated as the numerical support of a closed-form law.
pub const SUPPORT_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormDensity {
    Gaussian {
        mean: f64,
        var: f64,
    },
    /// Law of `x exp(sigma W_t)`.
    GbmLognormal {
        x: f64,
        sigma: f64,
        t: f64,
    },
}

impl ClosedFormDensity {
    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        if !(mean.is_finite() && var.is_finite() && var > 0.0) {
            return Err(Error::DegenerateLaw(alloc::format!(
                "gaussian needs finite mean and variance > 0 (got {mean}, {var})"
            )));
        }
        Ok(ClosedFormDensity::Gaussian { mean, var })
    }

    pub fn gbm_lognormal(x: f64, sigma: f64, t: f64) -> Result<Self> {
        if !(x > 0.0 && sigma > 0.0 && t > 0.0 && x.is_finite() && (sigma * sigma * t).is_finite()) {
            return Err(Error::DegenerateLaw(
                "lognormal needs x > 0, sigma > 0, t > 0".into(),
            ));
        }
        Ok(ClosedFormDensity::GbmLognormal { x, sigma, t })
    }

    fn log_scale(&self) -> Option<(f64, f64)> {
        match *self {
            ClosedFormDensity::GbmLognormal { x, sigma, t } => Some((libm::log(x), sigma * libm::sqrt(t))),
            _ => None,
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        match *self {
            ClosedFormDensity::Gaussian { mean, var } => {
                let sd = libm::sqrt(var);
                normal_pdf((y - mean) / sd) / sd
            }
            ClosedFormDensity::GbmLognormal { x, .. } => {
                if y <= 0.0 {
                    return 0.0;
                }
                let (_, s) = self.log_scale().unwrap();
                normal_pdf(libm::log(y / x) / s) / (s * y)
            }
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            ClosedFormDensity::Gaussian { mean, var } => normal_cdf((y - mean) / libm::sqrt(var)),
            ClosedFormDensity::GbmLognormal { x, .. } => {
                if y <= 0.0 {
                    return 0.0;
                }
                let (_, s) = self.log_scale().unwrap();
                normal_cdf(libm::log(y / x) / s)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ClosedFormDensity::Gaussian { mean, .. } => mean,
            ClosedFormDensity::GbmLognormal { x, sigma, t } => x * libm::exp(0.5 * sigma * sigma * t),
        }
    }

    /// Interval carrying all but a `SUPPORT_SIGMAS`-sigma tail.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ClosedFormDensity::Gaussian { mean, var } => {
                let w = SUPPORT_SIGMAS * libm::sqrt(var);
                (mean - w, mean + w)
            }
            ClosedFormDensity::GbmLognormal { x, .. } => {
                let (_, s) = self.log_scale().unwrap();
                (
                    x * libm::exp(-SUPPORT_SIGMAS * s),
                    x * libm::exp(SUPPORT_SIGMAS * s),
                )
            }
        }
    }

    /// `int_{-inf}^{a} F(y) dy`.
    pub fn lower_tail_integral(&self, a: f64) -> f64 {
        match *self {
            ClosedFormDensity::Gaussian { mean, var } => {
                let sd = libm::sqrt(var);
                let z = (a - mean) / sd;
                sd * (z * normal_cdf(z) + normal_pdf(z))
            }
            ClosedFormDensity::GbmLognormal { x, sigma, t } => {
                if a <= 0.0 {
                    return 0.0;
                }
                // a F(a) - E[Y; Y <= a]
                let s = sigma * libm::sqrt(t);
                let z = libm::log(a / x) / s;
                a * normal_cdf(z) - x * libm::exp(0.5 * s * s) * normal_cdf(z - s)
            }
        }
    }

    /// `int_{b}^{inf} (1 - F(y)) dy`.
    pub fn upper_tail_integral(&self, b: f64) -> f64 {
        match *self {
            ClosedFormDensity::Gaussian { mean, var } => {
                let sd = libm::sqrt(var);
                let z = (b - mean) / sd;
                sd * (normal_pdf(z) - z * normal_cdf(-z))
            }
            ClosedFormDensity::GbmLognormal { x, sigma, t } => {
                if b <= 0.0 {
                    return self.mean() - b;
                }
                // E[(Y - b)^+]
                let s = sigma * libm::sqrt(t);
                let z = libm::log(b / x) / s;
                x * libm::exp(0.5 * s * s) * normal_cdf(s - z) - b * normal_cdf(-z)
            }
        }
    }
}

/// Density of `model` started at `x` after one Euler step of length `t`:
/// `N(x + b(0, x) t, sigma(0, x)^2 t)`.
pub fn euler_one_step_density(model: &SdeModel, x: f64, t: f64) -> Result<ClosedFormDensity> {
    require_scalar(model)?;
    let s = model.diffusion(0.0, x);
    if s == 0.0 {
        return Err(Error::DegenerateLaw(alloc::format!(
            "diffusion of `{}` vanishes at x = {x}",
            model.name()
        )));
    }
    ClosedFormDensity::gaussian(x + model.drift(0.0, x) * t, s * s * t)
}

/// Exact time-`t` law for models that carry one, `None` otherwise.
pub fn exact_density(model: &SdeModel, x: f64, t: f64) -> Option<Result<ClosedFormDensity>> {
    if model.dimension() != 1 {
        return None;
    }
    let law = model.exact_law()?;
    Some(match (law, *model.coefficients()) {
        (ExactLaw::GbmLognormal, Coefficients::Gbm { sigma }) => {
            ClosedFormDensity::gbm_lognormal(x, sigma, t)
        }
        (ExactLaw::Gaussian, Coefficients::Ou { theta, mean, sigma }) => {
            let var = if theta.abs() * t < 1e-300 {
                sigma * sigma * t
            } else {
                sigma * sigma * (-libm::expm1(-2.0 * theta * t)) / (2.0 * theta)
            };
            ClosedFormDensity::gaussian(mean + (x - mean) * libm::exp(-theta * t), var)
        }
        (ExactLaw::Gaussian, Coefficients::BrownianDrift { mu, sigma }) => {
            ClosedFormDensity::gaussian(x + mu * t, sigma * sigma * t)
        }
        (ExactLaw::Gaussian, Coefficients::Constant { drift, diffusion }) => {
            ClosedFormDensity::gaussian(x + drift * t, diffusion * diffusion * t)
        }
        _ => return None,
    })
}

pub(crate) fn require_scalar(model: &SdeModel) -> Result<()> {
    if model.dimension() == 1 {
        Ok(())
    } else {
        Err(Error::Precondition(
            "density operations need a one-dimensional model".into(),
        ))
    }
}

/// Probabilists' Hermite polynomial `He_r(u)`.
pub fn hermite(r: usize, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, u);
    if r == 0 {
        return prev;
    }
    for k in 1..r {
        let next = u * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `d^r/dy^r` of the `N(mean, var)` density at `y`, via
/// `phi^(r)(u) = (-1)^r He_r(u) phi(u)`.
pub fn gaussian_density_deriv(r: usize, mean: f64, var: f64, y: f64) -> f64 {
    let sd = libm::sqrt(var);
    let u = (y - mean) / sd;
    let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * hermite(r, u) * normal_pdf(u) / libm::pow(sd, (r + 1) as f64)
}

/// Real roots of `He_r`, ascending.
fn hermite_roots(r: usize) -> Vec<f64> {
    if r == 0 {
        return Vec::new();
    }
    let bound = libm::sqrt(4.0 * r as f64 + 2.0) + 0.5;
    let samples = numeric::linspace(-bound, bound, 400 * (r + 1) + 1);
    numeric::sign_changes(|u| hermite(r, u), &samples)
}

/// `int |d^r/dy^r N(0, var)(y)| dy = var^(-r/2) E|He_r(Z)|`.
pub fn deriv_l1_norm(r: usize, var: f64) -> Result<f64> {
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::Usage("variance must be finite and > 0".into()));
    }
    let reach = libm::sqrt(4.0 * r as f64 + 2.0) + 40.0;
    let roots = hermite_roots(r);
    // E|He_r| grows like sqrt(r!), so the tolerance is relative to that size.
    let tol = 1e-13 * libm::sqrt((1..=r).map(|k| k as f64).product::<f64>()).max(1.0);
    let q = numeric::integrate_split(
        |u| hermite(r, u).abs() * normal_pdf(u),
        -reach,
        reach,
        &roots,
        tol,
    )?;
    Ok(q.value * libm::pow(var, -0.5 * r as f64))
}
