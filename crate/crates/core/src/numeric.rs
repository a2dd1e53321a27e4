//! Scalar special functions and adaptive quadrature shared by the other modules.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Standard normal distribution function, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `E|Z|` for a standard normal `Z`.
pub fn abs_normal_mean() -> f64 {
    libm::sqrt(2.0 / PI)
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv = [0.0; 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kronrod * half;
    let resasc = asc * half.abs();
    let resabs = abs_sum * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        let scale = libm::pow(200.0 * error / resasc, 1.5);
        error = resasc * scale.min(1.0);
    }
    let round_off = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && round_off > error {
        error = round_off;
    }
    Panel { a, b, value, error }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss-Kronrod 7/15 integration of `f` over `[a, b]`.
///
/// Panels with the largest error estimate are bisected until the summed
/// estimate drops below `abs_tol` or `max_panels` is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    integrate_with_limit(f, a, b, abs_tol, 4000)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut panels: Vec<Panel> = Vec::with_capacity(64);
    panels.push(gk15(&f, a, b));
    loop {
        let (value, error) = panels
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if error <= abs_tol {
            return Ok(Quadrature { value, error });
        }
        if panels.len() >= max_panels {
            return Err(Error::Quadrature {
                estimate: error,
                tolerance: abs_tol,
            });
        }
        let (worst, _) =
            panels.iter().enumerate().fold(
                (0, -1.0),
                |(wi, we), (i, p)| {
                    if p.error > we {
                        (i, p.error)
                    } else {
                        (wi, we)
                    }
                },
            );
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature {
                estimate: error,
                tolerance: abs_tol,
            });
        }
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}

/// Bisection for a sign change of `f` on `[a, b]`; `f(a)` and `f(b)` must
/// have opposite signs.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Locates sign changes of `f` between consecutive entries of the sorted
/// `samples`, refined by bisection. Exact zeros in `f` are skipped.
pub fn sign_changes<F: Fn(f64) -> f64>(f: F, samples: &[f64]) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &y in samples {
        let fy = f(y);
        if fy == 0.0 || !fy.is_finite() {
            continue;
        }
        if let Some((py, pf)) = prev {
            if (pf > 0.0) != (fy > 0.0) {
                roots.push(bisect(&f, py, y));
            }
        }
        prev = Some((y, fy));
    }
    roots
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| a + h * i as f64).collect()
        }
    }
}

/// Integrates `f` over `[a, b]` after splitting at the given interior points,
/// spreading the tolerance over the pieces.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
) -> Result<Quadrature> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts);
    nodes.push(b);
    let tol = abs_tol / (nodes.len() - 1) as f64;
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
    };
    for w in nodes.windows(2) {
        let q = integrate(&f, w[0], w[1], tol)?;
        total.value += q.value;
        total.error += q.error;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
        assert!((normal_cdf(0.3) - 0.617_911_422_188_953).abs() < 1e-14);
    }

    #[test]
    fn gk_integrates_gaussian_mass() {
        let q = integrate(normal_pdf, -20.0, 20.0, 1e-13).unwrap();
        assert!((q.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gk_handles_kink_by_adaptivity() {
        let q = integrate(|x: f64| (x - 0.3).abs(), -1.0, 1.0, 1e-12).unwrap();
        // 0.5 * (1.3^2 + 0.7^2)
        assert!((q.value - 1.09).abs() < 1e-11);
    }

    #[test]
    fn gk_reports_non_convergence() {
        let err = integrate_with_limit(|x: f64| libm::sin(1.0 / x), 1e-9, 1.0, 1e-14, 8);
        assert!(matches!(err, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn sign_changes_finds_roots() {
        let r = sign_changes(|x| x * x - 2.0, &linspace(-3.0, 3.0, 101));
        assert_eq!(r.len(), 2);
        assert!((r[1] - core::f64::consts::SQRT_2).abs() < 1e-14);
    }
}
