//! Path simulation and Monte Carlo distance estimates.
//!
//! Randomness is counter based: a path is identified by a [`StreamId`]
//! (experiment seed, path index) which selects a ChaCha8 key and stream, so
//! any path can be regenerated independently of how work is scheduled.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::model::{ExactLaw, ModelPair, SdeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamId {
    pub seed: u64,
    pub index: u64,
}

impl StreamId {
    fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-experiment `point` of an experiment seeded with `base`.
pub fn derive_seed(base: u64, point: u64) -> u64 {
    mix64(base ^ mix64(point.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Brownian increments on a uniform grid, row-major `(step, component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    increments: Vec<f64>,
    dt: f64,
    dim: usize,
    stream: StreamId,
}

impl NoisePath {
    pub fn n_steps(&self) -> usize {
        self.increments.len() / self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim..(k + 1) * self.dim]
    }

    /// `W_t` for component `c`, summed in step order.
    pub fn terminal(&self, c: usize) -> f64 {
        (0..self.n_steps()).map(|k| self.step(k)[c]).sum()
    }
}

pub fn brownian_increments(n_steps: usize, dt: f64, dim: usize, stream: StreamId) -> Result<NoisePath> {
    if n_steps == 0 || dim == 0 {
        return Err(Error::Usage("n_steps and dim must be positive".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Usage("dt must be finite and > 0".into()));
    }
    let mut rng = stream.rng();
    let scale = libm::sqrt(dt);
    let increments = (0..n_steps * dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(NoisePath {
        increments,
        dt,
        dim,
        stream,
    })
}

fn check_noise(model: &SdeModel, t: f64, n_steps: usize, noise: &NoisePath) -> Result<()> {
    if noise.n_steps() != n_steps || noise.dim != model.dimension() {
        return Err(Error::Usage(format!(
            "noise has {} steps of dimension {}, expected {} steps of dimension {}",
            noise.n_steps(),
            noise.dim,
            n_steps,
            model.dimension()
        )));
    }
    let dt = t / n_steps as f64;
    if (noise.dt - dt).abs() > 1e-12 * dt.max(noise.dt) {
        return Err(Error::Usage(format!(
            "noise step {} does not match t / n_steps = {}",
            noise.dt, dt
        )));
    }
    Ok(())
}

/// Euler-Maruyama recursion `x_{k+1} = x_k + b(t_k, x_k) dt + sigma(t_k, x_k) dW_k`
/// applied componentwise; returns the terminal state.
pub fn euler_path(
    model: &SdeModel,
    x: &[f64],
    t: f64,
    n_steps: usize,
    noise: &NoisePath,
) -> Result<Vec<f64>> {
    check_noise(model, t, n_steps, noise)?;
    if x.len() != model.dimension() {
        return Err(Error::Usage("start point dimension mismatch".into()));
    }
    let dt = t / n_steps as f64;
    let mut state = x.to_vec();
    for k in 0..n_steps {
        let tk = k as f64 * dt;
        for (s, dw) in state.iter_mut().zip(noise.step(k)) {
            *s += model.drift(tk, *s) * dt + model.diffusion(tk, *s) * dw;
        }
    }
    Ok(state)
}

/// `x exp(sigma W_t)` with `W_t` the sum of the increments.
pub fn gbm_exact(x: f64, sigma: f64, t: f64, noise: &NoisePath) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Usage("gbm start must be > 0".into()));
    }
    let horizon = noise.dt * noise.n_steps() as f64;
    if (horizon - t).abs() > 1e-12 * t.max(horizon) {
        return Err(Error::Usage("noise horizon does not match t".into()));
    }
    Ok(x * libm::exp(sigma * noise.terminal(0)))
}

/// Fine-grid step count for the reference simulation: `max(min_steps, ceil(t / h))`.
pub fn fine_steps(t: f64, h: f64, min_steps: usize) -> usize {
    let n = libm::ceil(t / h);
    let n = if n.is_finite() && n > 0.0 { n as usize } else { 1 };
    n.max(min_steps).max(1)
}

/// Advances one scalar path over a shared grid. Constant-coefficient models
/// collapse to their single step, exact GBM uses only `W_t`.
#[derive(Debug, Clone, Copy)]
enum Stepper {
    Euler,
    Constant { drift: f64, diffusion: f64 },
    ExactGbm { sigma: f64 },
}

impl Stepper {
    fn for_model(model: &SdeModel) -> Self {
        match (model.coefficients(), model.exact_law()) {
            (crate::model::Coefficients::Constant { drift, diffusion }, _) => Stepper::Constant {
                drift: *drift,
                diffusion: *diffusion,
            },
            (crate::model::Coefficients::Gbm { sigma }, Some(ExactLaw::GbmLognormal)) => {
                Stepper::ExactGbm { sigma: *sigma }
            }
            _ => Stepper::Euler,
        }
    }
}

struct PathState {
    stepper: Stepper,
    value: f64,
}

impl PathState {
    fn advance(&mut self, model: &SdeModel, tk: f64, dt: f64, dw: f64) {
        if let Stepper::Euler = self.stepper {
            let y = self.value;
            self.value = y + (model.drift(tk, y) * dt + model.diffusion(tk, y) * dw);
        }
    }

    fn finish(&self, x: f64, t: f64, w: f64) -> f64 {
        match self.stepper {
            Stepper::Euler => self.value,
            Stepper::Constant { drift, diffusion } => x + drift * t + diffusion * w,
            Stepper::ExactGbm { sigma } => x * libm::exp(sigma * w),
        }
    }
}

/// Terminal values of `model_x` and `model_y` driven by the same noise.
fn coupled_path(
    model_x: &SdeModel,
    model_y: &SdeModel,
    x: f64,
    t: f64,
    n_steps: usize,
    stream: StreamId,
) -> (f64, f64) {
    let mut rng = stream.rng();
    let dt = t / n_steps as f64;
    let scale = libm::sqrt(dt);
    let mut px = PathState {
        stepper: Stepper::for_model(model_x),
        value: x,
    };
    let mut py = PathState {
        stepper: Stepper::for_model(model_y),
        value: x,
    };
    let mut w = 0.0;
    for k in 0..n_steps {
        let dw = scale * rng.sample::<f64, _>(StandardNormal);
        let tk = k as f64 * dt;
        px.advance(model_x, tk, dt, dw);
        py.advance(model_y, tk, dt, dw);
        w += dw;
    }
    (px.finish(x, t, w), py.finish(x, t, w))
}

/// Coupled Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBudget {
    pub n_paths: usize,
    /// Minimum number of fine steps.
    pub min_steps: usize,
    /// Target fine step size.
    pub fine_h: f64,
    pub seed: u64,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget {
            n_paths: 100_000,
            min_steps: 64,
            fine_h: 1.0 / 4096.0,
            seed: 0,
        }
    }
}

/// `n_paths` synchronously coupled samples `(X_t, Y_t)` from the pair.
///
/// Both members consume the same increments on an `n_steps` grid; GBM is
/// sampled exactly and constant-coefficient models take their single step
/// with the summed increment, which is the same as stepping on the grid.
pub fn coupled_terminals<E: Executor>(
    pair: &ModelPair,
    x: f64,
    t: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<(f64, f64)>> {
    if pair.model_x.dimension() != 1 {
        return Err(Error::Usage("coupled terminals are scalar only".into()));
    }
    if n_steps == 0 || !(t.is_finite() && t > 0.0) {
        return Err(Error::Usage("need n_steps >= 1 and t > 0".into()));
    }
    let (mx, my) = (pair.model_x, pair.model_y);
    Ok(exec.map(n_paths, |i| {
        coupled_path(
            &mx,
            &my,
            x,
            t,
            n_steps,
            StreamId {
                seed,
                index: i as u64,
            },
        )
    }))
}

/// `n_paths` samples of the model's time-`t` value.
pub fn sample_terminals<E: Executor>(
    model: &SdeModel,
    x: f64,
    t: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<f64>> {
    // A frozen partner costs nothing per step.
    let pair = ModelPair::new(*model, SdeModel::constant(0.0, 0.0), x, t.max(f64::MIN_POSITIVE))?;
    Ok(coupled_terminals(&pair, x, t, n_steps, n_paths, seed, exec)?
        .into_iter()
        .map(|(a, _)| a)
        .collect())
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

/// `(E|X - Y|^p)^(1/p)` from paired samples; the standard error is carried
/// through the `1/p` power by the delta method.
pub fn mc_lp_distance(pairs: &[(f64, f64)], p: f64) -> Result<McEstimate> {
    if pairs.is_empty() {
        return Err(Error::Usage("mc_lp_distance needs at least one pair".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Usage("p must be finite and >= 1".into()));
    }
    let n = pairs.len() as f64;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let d = libm::pow((a - b).abs(), p);
        let delta = d - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (d - mean);
    }
    let var = if pairs.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
    let se_mean = libm::sqrt(var / n);
    let value = libm::pow(mean, 1.0 / p);
    let stderr = if mean > 0.0 {
        libm::pow(mean, 1.0 / p - 1.0) / p * se_mean
    } else {
        0.0
    };
    Ok(McEstimate {
        value,
        stderr,
        n_paths: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::model::{builtin_model, euler_proxy};

    #[test]
    fn increments_are_reproducible() {
        let s = StreamId { seed: 7, index: 3 };
        let a = brownian_increments(100, 0.01, 1, s).unwrap();
        let b = brownian_increments(100, 0.01, 1, s).unwrap();
        assert_eq!(a, b);
        let c = brownian_increments(100, 0.01, 1, StreamId { seed: 7, index: 4 }).unwrap();
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn increment_validation() {
        let s = StreamId { seed: 0, index: 0 };
        assert!(brownian_increments(0, 0.1, 1, s).is_err());
        assert!(brownian_increments(1, 0.0, 1, s).is_err());
    }

    #[test]
    fn one_step_euler_of_gbm_proxy() {
        let gbm = builtin_model("gbm", &[1.0]).unwrap();
        let proxy = euler_proxy(&gbm, 1.0);
        let t = 0.04;
        let noise = brownian_increments(1, t, 1, StreamId { seed: 1, index: 0 }).unwrap();
        let w = noise.terminal(0);
        let y = euler_path(&proxy, &[1.0], t, 1, &noise).unwrap()[0];
        assert!((y - (1.0 + 0.5 * t + w)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_models() {
        let zero = SdeModel::constant(0.0, 0.0);
        let noise = brownian_increments(10, 0.1, 1, StreamId { seed: 2, index: 0 }).unwrap();
        assert_eq!(euler_path(&zero, &[3.5], 1.0, 10, &noise).unwrap()[0], 3.5);
        let ode = SdeModel::constant(1.0, 0.0);
        for n in [1, 7, 50] {
            let noise = brownian_increments(n, 2.0 / n as f64, 1, StreamId { seed: 2, index: 0 }).unwrap();
            let y = euler_path(&ode, &[0.5], 2.0, n, &noise).unwrap()[0];
            assert!((y - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn noise_mismatch_is_usage_error() {
        let m = SdeModel::constant(0.0, 1.0);
        let noise = brownian_increments(10, 0.1, 1, StreamId { seed: 2, index: 0 }).unwrap();
        assert!(matches!(
            euler_path(&m, &[0.0], 1.0, 5, &noise),
            Err(Error::Usage(_))
        ));
        assert!(euler_path(&m, &[0.0], 2.0, 10, &noise).is_err());
    }

    #[test]
    fn gbm_exact_values() {
        let noise = brownian_increments(4, 0.25, 1, StreamId { seed: 9, index: 0 }).unwrap();
        let w = noise.terminal(0);
        let y = gbm_exact(2.0, 0.5, 1.0, &noise).unwrap();
        assert!((y - 2.0 * libm::exp(0.5 * w)).abs() < 1e-14);
    }

    #[test]
    fn coupled_path_matches_noise_path_api() {
        let sine = builtin_model("sine-diffusion", &[]).unwrap();
        let proxy = euler_proxy(&sine, 0.0);
        let stream = StreamId { seed: 11, index: 5 };
        let (a, b) = coupled_path(&sine, &proxy, 0.0, 0.5, 32, stream);
        let noise = brownian_increments(32, 0.5 / 32.0, 1, stream).unwrap();
        let ea = euler_path(&sine, &[0.0], 0.5, 32, &noise).unwrap()[0];
        assert_eq!(a, ea);
        let eb = euler_path(&proxy, &[0.0], 0.5, 1, &{
            brownian_increments(1, 0.5, 1, stream).unwrap()
        });
        assert!(eb.is_ok());
        assert!((b - (1.0 * 0.5 + noise.terminal(0))).abs() < 1e-14);
    }

    #[test]
    fn identical_models_couple_exactly() {
        let m = builtin_model("sine-diffusion", &[]).unwrap();
        let pair = ModelPair::new(m, m, 0.0, 1.0).unwrap();
        let pairs = coupled_terminals(&pair, 0.0, 0.1, 16, 500, 3, &Sequential).unwrap();
        assert!(pairs.iter().all(|(a, b)| a == b));
        assert_eq!(mc_lp_distance(&pairs, 1.0).unwrap().value, 0.0);
        let none = coupled_terminals(&pair, 0.0, 0.1, 16, 0, 3, &Sequential).unwrap();
        assert!(none.is_empty());
        assert!(mc_lp_distance(&none, 1.0).is_err());
    }

    #[test]
    fn lp_estimate_known_values() {
        let pairs = [(0.0, 1.0), (0.0, 3.0)];
        let l1 = mc_lp_distance(&pairs, 1.0).unwrap();
        assert_eq!(l1.value, 2.0);
        // sample std of {1, 3} is sqrt(2), over sqrt(2) paths
        assert!((l1.stderr - 1.0).abs() < 1e-15);
        let l2 = mc_lp_distance(&pairs, 2.0).unwrap();
        assert!((l2.value - libm::sqrt(5.0)).abs() < 1e-15);
    }

    #[test]
    fn fine_step_rule() {
        assert_eq!(fine_steps(0.01, 1e-3, 64), 64);
        assert_eq!(fine_steps(1.0, 1e-3, 64), 1000);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}
