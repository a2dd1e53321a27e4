use super::DensityGrid;
use crate::error::{Error, Result};

/// Gaussian envelope `C t^{-1/2} exp(-c (y - x)^2 / t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AronsonEnvelope {
    pub big_c: f64,
    pub small_c: f64,
    pub t: f64,
    pub x: f64,
}

impl AronsonEnvelope {
    pub fn eval(&self, y: f64) -> f64 {
        let d = y - self.x;
        self.big_c / libm::sqrt(self.t) * libm::exp(-self.small_c * d * d / self.t)
    }

    /// Total mass `C sqrt(pi / c)` of the envelope.
    pub fn mass(&self) -> f64 {
        self.big_c * libm::sqrt(core::f64::consts::PI / self.small_c)
    }

    /// Whether the envelope dominates every node of `grid`, up to `slack`.
    pub fn dominates(&self, grid: &DensityGrid, slack: f64) -> bool {
        grid.nodes()
            .zip(grid.values())
            .all(|(y, &p)| p <= self.eval(y) * (1.0 + slack) + slack)
    }
}

const SWEEP_POINTS: usize = 64;

/// Fits a dominating envelope to `grid`.
///
/// The decay rate `c` is swept over 64 log-spaced values in
/// `[1e-2, 1e2] / (2 sigma_max^2)`; for each, `C` is the smallest constant
/// with the envelope above every grid value. The reported pair is the
/// feasible envelope of least total mass `C sqrt(pi / c)`.
pub fn aronson_envelope_fit(grid: &DensityGrid, x: f64, t: f64, sigma_max: f64) -> Result<AronsonEnvelope> {
    if !(t > 0.0 && sigma_max > 0.0 && t.is_finite() && sigma_max.is_finite()) {
        return Err(Error::Usage("envelope fit needs t > 0 and sigma_max > 0".into()));
    }
    let base = 1.0 / (2.0 * sigma_max * sigma_max);
    let rt = libm::sqrt(t);
    let mut best: Option<AronsonEnvelope> = None;
    for k in 0..SWEEP_POINTS {
        let exponent = -2.0 + 4.0 * k as f64 / (SWEEP_POINTS - 1) as f64;
        let c = base * libm::pow(10.0, exponent);
        // Work with log-ratios so extreme tails do not overflow.
        let log_ratio = grid
            .nodes()
            .zip(grid.values())
            .filter(|(_, &p)| p > 0.0)
            .map(|(y, &p)| {
                let d = y - x;
                libm::log(p * rt) + c * d * d / t
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if !log_ratio.is_finite() || log_ratio > 700.0 {
            continue;
        }
        let cand = AronsonEnvelope {
            big_c: libm::exp(log_ratio),
            small_c: c,
            t,
            x,
        };
        if best.is_none_or(|b| cand.mass() < b.mass()) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::Usage("density grid is identically zero".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ClosedFormDensity;
    use crate::numeric::{linspace, INV_SQRT_2PI};
    use alloc::vec::Vec;

    fn sampled(d: &ClosedFormDensity, lo: f64, hi: f64, n: usize) -> DensityGrid {
        let ys = linspace(lo, hi, n);
        let vals: Vec<f64> = ys.iter().map(|&y| d.pdf(y)).collect();
        DensityGrid::new(lo, ys[1] - ys[0], vals).unwrap()
    }

    #[test]
    fn heat_kernel_envelope() {
        let t = 0.3;
        let d = ClosedFormDensity::gaussian(0.0, t).unwrap();
        let g = sampled(&d, -5.0, 5.0, 2001);
        let env = aronson_envelope_fit(&g, 0.0, t, 1.0).unwrap();
        assert!((env.big_c - INV_SQRT_2PI).abs() < 1e-12, "{env:?}");
        assert!(env.small_c <= 0.5 && env.small_c > 0.5 / 1.2);
        assert!(env.dominates(&g, 1e-12));
    }

    #[test]
    fn brownian_envelope_rescales() {
        let d = ClosedFormDensity::gaussian(0.0, 0.2).unwrap();
        let g = sampled(&d, -4.0, 4.0, 1601);
        let env = aronson_envelope_fit(&g, 0.0, 0.2, 1.0).unwrap();
        for t in [0.05, 0.1, 0.4] {
            let other = sampled(&ClosedFormDensity::gaussian(0.0, t).unwrap(), -4.0, 4.0, 1601);
            let moved = AronsonEnvelope { t, ..env };
            assert!(moved.dominates(&other, 1e-12));
        }
    }
}
