//! Crank-Nicolson solver for the forward Kolmogorov equation
//! `dp/ds = -d/dy (b p) + 1/2 d^2/dy^2 (sigma^2 p)` on a uniform grid.
//!
//! The solve runs in the self-similar variables `u = (y - x) / sqrt(t)` and
//! `tau = s / t`, where the equation reads
//! `dq/dtau = -sqrt(t) d/du (b q) + 1/2 d^2/du^2 (a q)` with `a = sigma^2`
//! and `p = q / sqrt(t)`. A fixed `u`-grid then resolves the density equally
//! well for every `t`, which keeps small-time rate experiments on one
//! resolution. The Dirac start is replaced by the frozen-coefficient
//! Gaussian at `tau0 = 1/64`, integrated into cell averages.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{euler_one_step_density, require_scalar, ClosedFormDensity, DensityGrid};
use crate::error::{Error, Result};
use crate::model::{ellipticity_check, SdeModel};
use crate::numeric::{self, normal_cdf};

/// Fraction of `t` covered by the frozen-coefficient initial Gaussian.
const INITIAL_FRACTION: f64 = 1.0 / 64.0;
/// Minimum number of time steps over `[t/64, t]`; keeps `ds <= t/200`.
const MIN_TIME_STEPS: usize = 200;
/// Largest negative value clipped to zero without complaint.
const NEGATIVE_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_cells: usize,
    pub n_time_steps: usize,
    /// Half-width of the automatic domain in units of `sigma_max sqrt(t)`.
    pub half_width_sigmas: f64,
    /// Explicit `[lo, hi]` in state space, overriding the automatic domain.
    pub domain: Option<(f64, f64)>,
    /// Allowed deviation of the discrete mass from 1.
    pub mass_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_cells: 4000,
            n_time_steps: 800,
            half_width_sigmas: 10.0,
            domain: None,
            mass_tol: 1e-6,
        }
    }
}

impl GridSpec {
    /// Same settings with every resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        GridSpec {
            n_cells: self.n_cells * factor,
            n_time_steps: self.n_time_steps * factor,
            ..*self
        }
    }
}

/// Largest `|sigma(0, y)|` over a one-step look-ahead window around `x`.
pub(crate) fn local_sigma_max(model: &SdeModel, x: f64, t: f64, half_width_sigmas: f64) -> f64 {
    let s0 = model.diffusion(0.0, x).abs();
    let w = half_width_sigmas * s0 * libm::sqrt(t);
    numeric::linspace(x - w, x + w, 257)
        .into_iter()
        .map(|y| model.diffusion(0.0, y).abs())
        .fold(s0, f64::max)
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    scratch[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * scratch[i - 1];
        scratch[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

struct Operator {
    lower: Vec<f64>,
    center: Vec<f64>,
    upper: Vec<f64>,
}

impl Operator {
    /// Conservative central discretization of the rescaled generator at
    /// physical time `s`.
    fn assemble(model: &SdeModel, x: f64, t: f64, s: f64, u_lo: f64, du: f64, n: usize) -> Self {
        let rt = libm::sqrt(t);
        let a: Vec<f64> = (0..n)
            .map(|i| {
                let sig = model.diffusion(s, x + rt * (u_lo + (i as f64 + 0.5) * du));
                sig * sig
            })
            .collect();
        // Drift on faces i - 1/2, i = 0..=n.
        let b: Vec<f64> = (0..=n)
            .map(|i| model.drift(s, x + rt * (u_lo + i as f64 * du)))
            .collect();
        let half_du = 0.5 / du;
        let mut lower = vec![0.0; n];
        let mut center = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            // Flux through face i+1/2: A q_i + B q_{i+1}.
            let a_right = 0.5 * rt * b[i + 1] + a[i] * half_du;
            let b_left = 0.5 * rt * b[i] - a[i] * half_du;
            center[i] = (b_left - a_right) / du;
            if i > 0 {
                lower[i] = (0.5 * rt * b[i] + a[i - 1] * half_du) / du;
            }
            if i + 1 < n {
                upper[i] = -(0.5 * rt * b[i + 1] - a[i + 1] * half_du) / du;
            }
        }
        Operator { lower, center, upper }
    }

    fn apply(&self, q: &[f64], out: &mut [f64], scale: f64) {
        let n = q.len();
        for i in 0..n {
            let mut v = self.center[i] * q[i];
            if i > 0 {
                v += self.lower[i] * q[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * q[i + 1];
            }
            out[i] = q[i] + scale * v;
        }
    }
}

/// Approximates the time-`t` transition density of `model` from `x`.
pub fn fokker_planck_solve(model: &SdeModel, x: f64, t: f64, spec: &GridSpec) -> Result<DensityGrid> {
    require_scalar(model)?;
    if !(t.is_finite() && t > 0.0 && x.is_finite()) {
        return Err(Error::Usage(
            "fokker_planck_solve needs finite x and t > 0".into(),
        ));
    }
    if spec.n_cells < 16 {
        return Err(Error::Usage("grid needs at least 16 cells".into()));
    }
    let rt = libm::sqrt(t);
    let (u_lo, u_hi) = match spec.domain {
        Some((lo, hi)) => {
            if !(lo < x && x < hi) {
                return Err(Error::Usage(format!(
                    "domain [{lo}, {hi}] must contain the start point {x}"
                )));
            }
            ((lo - x) / rt, (hi - x) / rt)
        }
        None => {
            let s_max = local_sigma_max(model, x, t, spec.half_width_sigmas);
            let w = spec.half_width_sigmas * s_max;
            (-w, w)
        }
    };
    let n = spec.n_cells;
    let du = (u_hi - u_lo) / n as f64;

    let probe: Vec<f64> = (0..=2 * n)
        .map(|k| x + rt * (u_lo + 0.5 * k as f64 * du))
        .collect();
    let times = if model.is_autonomous() {
        vec![0.0]
    } else {
        numeric::linspace(0.0, t, 9)
    };
    let lower_bound = ellipticity_check(model, &probe, &times);
    if !(lower_bound > 0.0) {
        return Err(Error::Precondition(format!(
            "diffusion of `{}` vanishes on the grid [{}, {}]; Fokker-Planck needs an elliptic model",
            model.name(),
            probe[0],
            probe[2 * n]
        )));
    }

    // Initial cell averages of the frozen Gaussian, in u units.
    let t0 = INITIAL_FRACTION * t;
    let (m0, sd0) = match euler_one_step_density(model, x, t0)? {
        ClosedFormDensity::Gaussian { mean, var } => ((mean - x) / rt, libm::sqrt(var) / rt),
        _ => unreachable!("one-step density is gaussian"),
    };
    let mass_between = |a: f64, b: f64| {
        let (za, zb) = ((a - m0) / sd0, (b - m0) / sd0);
        if za > 0.0 {
            normal_cdf(-za) - normal_cdf(-zb)
        } else {
            normal_cdf(zb) - normal_cdf(za)
        }
    };
    let mut q: Vec<f64> = (0..n)
        .map(|i| {
            let a = u_lo + i as f64 * du;
            mass_between(a, a + du) / du
        })
        .collect();

    let steps = spec.n_time_steps.max(MIN_TIME_STEPS);
    let dtau = (1.0 - INITIAL_FRACTION) / steps as f64;
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut op: Option<Operator> = None;
    for k in 0..steps {
        if op.is_none() || !model.is_autonomous() {
            let tau_mid = INITIAL_FRACTION + (k as f64 + 0.5) * dtau;
            let o = Operator::assemble(model, x, t, tau_mid * t, u_lo, du, n);
            for i in 0..n {
                sub[i] = -0.5 * dtau * o.lower[i];
                diag[i] = 1.0 - 0.5 * dtau * o.center[i];
                sup[i] = -0.5 * dtau * o.upper[i];
            }
            op = Some(o);
        }
        op.as_ref().unwrap().apply(&q, &mut rhs, 0.5 * dtau);
        thomas(&sub, &diag, &sup, &mut rhs, &mut scratch);
        core::mem::swap(&mut q, &mut rhs);
        if !q.iter().all(|v| v.is_finite()) {
            return Err(Error::SolverDiverged(format!(
                "non-finite density after {} of {steps} steps",
                k + 1
            )));
        }
    }

    let mut values = Vec::with_capacity(n);
    for (i, &qi) in q.iter().enumerate() {
        let p = qi / rt;
        if p < 0.0 {
            if -p > NEGATIVE_CLIP {
                return Err(Error::SolverDiverged(format!(
                    "density {p:e} < 0 at y = {}",
                    x + rt * (u_lo + (i as f64 + 0.5) * du)
                )));
            }
            values.push(0.0);
        } else {
            values.push(p);
        }
    }
    let grid = DensityGrid::new(x + rt * (u_lo + 0.5 * du), rt * du, values)?;
    let mass = grid.mass();
    if (mass - 1.0).abs() > spec.mass_tol {
        return Err(Error::SolverDiverged(format!(
            "mass {mass} drifted beyond 1 +/- {:e}",
            spec.mass_tol
        )));
    }
    Ok(grid)
}
