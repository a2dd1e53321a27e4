//! SDE coefficient models, the catalog, and the one-step Euler proxy.
//!
//! All models are scalar: `drift(t, y)` and `diffusion(t, y)` act on a single
//! coordinate. A model of dimension `d > 1` is `d` independent copies driven
//! by independent noise components, which is enough for the simulation layer;
//! the density and distance layers only accept `d = 1`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Closed-form transition law attached to a model, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactLaw {
    Gaussian,
    GbmLognormal,
}

impl ExactLaw {
    pub fn tag(self) -> &'static str {
        match self {
            ExactLaw::Gaussian => "gaussian",
            ExactLaw::GbmLognormal => "gbm-lognormal",
        }
    }
}

/// Scalar coefficient function `(t, y) -> value`.
pub type CoefficientFn = fn(f64, f64) -> f64;

#[derive(Debug, Clone, Copy)]
pub enum Coefficients {
    /// `dY = (sigma^2 / 2) Y dt + sigma Y dW`, i.e. `Y = x exp(sigma W)`.
    Gbm { sigma: f64 },
    /// `dY = theta (mean - Y) dt + sigma dW`.
    Ou { theta: f64, mean: f64, sigma: f64 },
    /// `dY = mu dt + sigma dW`.
    BrownianDrift { mu: f64, sigma: f64 },
    /// `dY = cos(Y) dt + (1 + sin(Y) / 2) dW`.
    SineDiffusion,
    /// GBM drift with the diffusion clamped to `sigma * psi(Y)`, where `psi`
    /// is a smooth version of `clamp(Y, eps, 1 / eps)`.
    ClampedGbm { sigma: f64, eps: f64 },
    /// Constant coefficients; this is what the Euler proxy produces.
    Constant { drift: f64, diffusion: f64 },
    /// User-supplied coefficient functions.
    Custom {
        name: &'static str,
        drift: CoefficientFn,
        diffusion: CoefficientFn,
        autonomous: bool,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct SdeModel {
    coefficients: Coefficients,
    dimension: usize,
}

/// Catalog identifiers with their parameter lists.
pub const CATALOG: &[(&str, &str)] = &[
    ("gbm", "sigma"),
    ("ou", "theta, sigma [, mean]"),
    ("brownian-drift", "mu, sigma"),
    ("sine-diffusion", ""),
    ("clamped-gbm", "sigma, eps"),
];

pub fn catalog_listing() -> String {
    let names: Vec<String> = CATALOG
        .iter()
        .map(|(n, p)| {
            if p.is_empty() {
                String::from(*n)
            } else {
                format!("{n}({p})")
            }
        })
        .collect();
    names.join(", ")
}

fn positive(model: &str, param: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(model, param, "must be finite and > 0"))
    }
}

fn finite(model: &str, param: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(model, param, "must be finite"))
    }
}

fn arity(model: &str, params: &[f64], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&params.len()) {
        Ok(())
    } else {
        Err(Error::invalid(
            model,
            "params",
            &format!("expected {allowed:?} values, got {}", params.len()),
        ))
    }
}

/// Builds a catalog model by name.
pub fn builtin_model(name: &str, params: &[f64]) -> Result<SdeModel> {
    let coefficients = match name {
        "gbm" => {
            arity(name, params, &[1])?;
            Coefficients::Gbm {
                sigma: positive(name, "sigma", params[0])?,
            }
        }
        "ou" => {
            arity(name, params, &[2, 3])?;
            Coefficients::Ou {
                theta: finite(name, "theta", params[0])?,
                sigma: positive(name, "sigma", params[1])?,
                mean: finite(name, "mean", params.get(2).copied().unwrap_or(0.0))?,
            }
        }
        "brownian-drift" => {
            arity(name, params, &[2])?;
            Coefficients::BrownianDrift {
                mu: finite(name, "mu", params[0])?,
                sigma: positive(name, "sigma", params[1])?,
            }
        }
        "sine-diffusion" => {
            arity(name, params, &[0])?;
            Coefficients::SineDiffusion
        }
        "clamped-gbm" => {
            arity(name, params, &[2])?;
            let sigma = positive(name, "sigma", params[0])?;
            let eps = params[1];
            if !(eps > 0.0 && eps < 0.5) {
                return Err(Error::invalid(name, "eps", "must lie in (0, 1/2)"));
            }
            Coefficients::ClampedGbm { sigma, eps }
        }
        _ => {
            return Err(Error::UnknownModel {
                name: name.into(),
                catalog: catalog_listing(),
            })
        }
    };
    Ok(SdeModel::scalar(coefficients))
}

impl SdeModel {
    pub fn scalar(coefficients: Coefficients) -> Self {
        SdeModel {
            coefficients,
            dimension: 1,
        }
    }

    /// `dimension` independent copies of this model.
    pub fn independent_copies(self, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Usage("dimension must be positive".into()));
        }
        Ok(SdeModel { dimension, ..self })
    }

    pub fn constant(drift: f64, diffusion: f64) -> Self {
        Self::scalar(Coefficients::Constant { drift, diffusion })
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn name(&self) -> &'static str {
        match self.coefficients {
            Coefficients::Gbm { .. } => "gbm",
            Coefficients::Ou { .. } => "ou",
            Coefficients::BrownianDrift { .. } => "brownian-drift",
            Coefficients::SineDiffusion => "sine-diffusion",
            Coefficients::ClampedGbm { .. } => "clamped-gbm",
            Coefficients::Constant { .. } => "constant",
            Coefficients::Custom { name, .. } => name,
        }
    }

    pub fn drift(&self, t: f64, y: f64) -> f64 {
        match self.coefficients {
            Coefficients::Gbm { sigma } | Coefficients::ClampedGbm { sigma, .. } => 0.5 * sigma * sigma * y,
            Coefficients::Ou { theta, mean, .. } => theta * (mean - y),
            Coefficients::BrownianDrift { mu, .. } => mu,
            Coefficients::SineDiffusion => libm::cos(y),
            Coefficients::Constant { drift, .. } => drift,
            Coefficients::Custom { drift, .. } => drift(t, y),
        }
    }

    pub fn diffusion(&self, t: f64, y: f64) -> f64 {
        match self.coefficients {
            Coefficients::Gbm { sigma } => sigma * y,
            Coefficients::Ou { sigma, .. } | Coefficients::BrownianDrift { sigma, .. } => sigma,
            Coefficients::SineDiffusion => 1.0 + 0.5 * libm::sin(y),
            Coefficients::ClampedGbm { sigma, eps } => sigma * clamp_profile(y, eps),
            Coefficients::Constant { diffusion, .. } => diffusion,
            Coefficients::Custom { diffusion, .. } => diffusion(t, y),
        }
    }

    /// Whether the coefficients ignore the time argument.
    pub fn is_autonomous(&self) -> bool {
        match self.coefficients {
            Coefficients::Custom { autonomous, .. } => autonomous,
            _ => true,
        }
    }

    pub fn has_constant_coefficients(&self) -> bool {
        matches!(self.coefficients, Coefficients::Constant { .. })
    }

    pub fn exact_law(&self) -> Option<ExactLaw> {
        match self.coefficients {
            Coefficients::Gbm { .. } => Some(ExactLaw::GbmLognormal),
            Coefficients::Ou { .. } | Coefficients::BrownianDrift { .. } | Coefficients::Constant { .. } => {
                Some(ExactLaw::Gaussian)
            }
            _ => None,
        }
    }
}

/// Freezes the coefficients at `(0, x)`.
pub fn euler_proxy(model: &SdeModel, x: f64) -> SdeModel {
    SdeModel {
        coefficients: Coefficients::Constant {
            drift: model.drift(0.0, x),
            diffusion: model.diffusion(0.0, x),
        },
        dimension: model.dimension,
    }
}

/// Two models started from a common point over a finite horizon.
#[derive(Debug, Clone, Copy)]
pub struct ModelPair {
    pub model_x: SdeModel,
    pub model_y: SdeModel,
    pub start: f64,
    pub horizon: f64,
}

impl ModelPair {
    pub fn new(model_x: SdeModel, model_y: SdeModel, start: f64, horizon: f64) -> Result<Self> {
        if model_x.dimension != model_y.dimension {
            return Err(Error::Usage(format!(
                "pair dimensions differ ({} vs {})",
                model_x.dimension, model_y.dimension
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Usage("horizon must be finite and > 0".into()));
        }
        if !start.is_finite() {
            return Err(Error::Usage("start point must be finite".into()));
        }
        Ok(ModelPair {
            model_x,
            model_y,
            start,
            horizon,
        })
    }

    /// A model against its own Euler proxy frozen at `start`.
    pub fn with_euler_proxy(model: SdeModel, start: f64, horizon: f64) -> Result<Self> {
        Self::new(model, euler_proxy(&model, start), start, horizon)
    }
}

/// `|b_x(0, x) - b_y(0, x)|`.
pub fn delta_b(pair: &ModelPair, x: f64) -> f64 {
    (pair.model_x.drift(0.0, x) - pair.model_y.drift(0.0, x)).abs()
}

/// `|sigma_x(0, x) - sigma_y(0, x)|`.
pub fn delta_sigma(pair: &ModelPair, x: f64) -> f64 {
    (pair.model_x.diffusion(0.0, x) - pair.model_y.diffusion(0.0, x)).abs()
}

/// Smallest `sigma^2` over the state/time grid.
///
/// `states` is read in the given order; a sign change of the diffusion between
/// neighbouring states means it vanishes in between, and the bound is 0.
pub fn ellipticity_check(model: &SdeModel, states: &[f64], times: &[f64]) -> f64 {
    let mut lower = f64::INFINITY;
    for &t in times {
        let mut prev: Option<f64> = None;
        for &y in states {
            let s = model.diffusion(t, y);
            if let Some(p) = prev {
                if (p > 0.0 && s < 0.0) || (p < 0.0 && s > 0.0) {
                    return 0.0;
                }
            }
            prev = Some(s);
            lower = lower.min(s * s);
        }
    }
    if lower.is_finite() {
        lower
    } else {
        0.0
    }
}

/// C-infinity step: 0 for `s <= 0`, 1 for `s >= 1`, built from `exp(-1/s)`.
fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = libm::exp(-1.0 / s);
    let b = libm::exp(-1.0 / (1.0 - s));
    a / (a + b)
}

/// Smooth, nondecreasing version of `max(s, 0)`: zero for `s <= 0` and equal
/// to `s` for `s >= delta`.
fn smooth_ramp(s: f64, delta: f64) -> f64 {
    s * smooth_step(s / delta)
}

/// Smooth clamp `psi` used by the clamped GBM: `eps` below `eps`, `1 / eps`
/// above `1 / eps`, and equal to `y` on `[5 eps / 4, 1 / eps - eps / 4]`,
/// which contains `[2 eps, 1 / (2 eps)]`. Nondecreasing and C-infinity.
pub fn clamp_profile(y: f64, eps: f64) -> f64 {
    let delta = 0.25 * eps;
    let mid = 0.5 * (eps + 1.0 / eps);
    if y <= mid {
        eps + smooth_ramp(y - eps, delta)
    } else {
        1.0 / eps - smooth_ramp(1.0 / eps - y, delta)
    }
}
