//! Richardson-Romberg weights for the dyadic refiners `n_i = 2^(i-1)`.
//!
//! With `u_k = (prod_{l=1}^{k-1} (1 - 2^-l))^-1`,
//! `v_k = (-1)^k 2^{-k(k+1)/2} u_{k+1}` and `w_k = u_k v_{r-k}`, the weights
//! solve `sum_i w_i n_i^{-k} = [k = 0]` for `k = 0..r-1`. Everything is kept
//! in exact rational arithmetic; floats appear only through the `*_f64`
//! accessors.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest supported order.
pub const MAX_ORDER: usize = 12;

/// Factors used for the `u_infinity` partial product.
const U_INF_FACTORS: i32 = 64;

fn inv_pow2(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// `u_k` for `k >= 1`.
pub fn u_coefficient(k: usize) -> Rational {
    let mut prod = Rational::one();
    for l in 1..k {
        prod *= Rational::one() - inv_pow2(l);
    }
    prod.recip()
}

/// `v_k` for `k >= 0`.
pub fn v_coefficient(k: usize) -> Rational {
    let mag = inv_pow2(k * (k + 1) / 2) * u_coefficient(k + 1);
    if k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RombergWeights {
    r: usize,
    refiners: Vec<u64>,
    u: Vec<Rational>,
    v: Vec<Rational>,
    w: Vec<Rational>,
}

impl RombergWeights {
    pub fn order(&self) -> usize {
        self.r
    }

    /// `n_i = 2^(i-1)`, `i = 1..=r`.
    pub fn refiners(&self) -> &[u64] {
        &self.refiners
    }

    /// `u_1..=u_r`.
    pub fn u(&self) -> &[Rational] {
        &self.u
    }

    /// `v_0..=v_{r-1}`.
    pub fn v(&self) -> &[Rational] {
        &self.v
    }

    /// `w_1..=w_r`.
    pub fn w(&self) -> &[Rational] {
        &self.w
    }

    pub fn w_f64(&self) -> Vec<f64> {
        self.w.iter().map(to_f64).collect()
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact weights of order `r` (`1 <= r <= MAX_ORDER`).
pub fn weights(r: usize) -> Result<RombergWeights> {
    if r == 0 || r > MAX_ORDER {
        return Err(Error::invalid(
            "romberg",
            "r",
            &format!("order must lie in 1..={MAX_ORDER}, got {r}"),
        ));
    }
    let u: Vec<Rational> = (1..=r).map(u_coefficient).collect();
    let v: Vec<Rational> = (0..r).map(v_coefficient).collect();
    let w = (1..=r).map(|k| &u[k - 1] * &v[r - k]).collect();
    Ok(RombergWeights {
        r,
        refiners: (0..r).map(|i| 1u64 << i).collect(),
        u,
        v,
        w,
    })
}

/// `sum_i w_i n_i^{-k} - [k = 0]` for `k = 0..r-1`; all zero for valid weights.
pub fn vandermonde_residual(wt: &RombergWeights) -> Vec<Rational> {
    (0..wt.r)
        .map(|k| {
            let mut acc = if k == 0 {
                -Rational::one()
            } else {
                Rational::zero()
            };
            for (i, w) in wt.w.iter().enumerate() {
                acc += w * inv_pow2(i * k);
            }
            acc
        })
        .collect()
}

/// Same residuals evaluated after rounding the weights to `f64`.
pub fn vandermonde_residual_f64(wt: &RombergWeights) -> Vec<f64> {
    let w = wt.w_f64();
    (0..wt.r)
        .map(|k| {
            let s: f64 = w
                .iter()
                .enumerate()
                .map(|(i, wi)| wi * libm::pow(2.0, -((i * k) as f64)))
                .sum();
            if k == 0 {
                s - 1.0
            } else {
                s
            }
        })
        .collect()
}

/// `u_infinity^2` from the 64-factor partial product.
pub fn u_infinity_squared() -> f64 {
    let mut prod = 1.0;
    for l in 1..=U_INF_FACTORS {
        prod *= 1.0 - libm::pow(2.0, -(l as f64));
    }
    1.0 / (prod * prod)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightBounds {
    /// `sum_i |w_i| n_i^{-r}`, exact.
    pub sum_over_refiners: Rational,
    /// `sum_i |w_i| 2^{(i-1)/2}`.
    pub sum_sqrt2_growth: f64,
    pub u_inf_sq: f64,
    /// `u_inf^2 sum_{i=0}^{r-1} 2^{-i/2}`.
    pub refiner_envelope: f64,
    /// `u_inf^2 2^r`.
    pub growth_envelope: f64,
}

/// Evaluates both weight sums and checks them against their envelopes.
pub fn weight_bound_checks(wt: &RombergWeights) -> Result<WeightBounds> {
    let r = wt.r;
    let mut sum_over_refiners = Rational::zero();
    let mut sum_sqrt2_growth = 0.0;
    for (i, w) in wt.w.iter().enumerate() {
        let a = w.abs();
        sum_over_refiners += &a * inv_pow2(i * r);
        sum_sqrt2_growth += to_f64(&a) * libm::pow(2.0, 0.5 * i as f64);
    }
    let u_inf_sq = u_infinity_squared();
    let refiner_envelope = u_inf_sq * (0..r).map(|i| libm::pow(2.0, -0.5 * i as f64)).sum::<f64>();
    let growth_envelope = u_inf_sq * libm::pow(2.0, r as f64);
    let bounds = WeightBounds {
        sum_over_refiners,
        sum_sqrt2_growth,
        u_inf_sq,
        refiner_envelope,
        growth_envelope,
    };
    if to_f64(&bounds.sum_over_refiners) > refiner_envelope {
        return Err(Error::Invariant(format!(
            "sum |w_i| n_i^-r exceeds its envelope at r = {r}"
        )));
    }
    if sum_sqrt2_growth > growth_envelope {
        return Err(Error::Invariant(format!(
            "sum |w_i| 2^((i-1)/2) exceeds its envelope at r = {r}"
        )));
    }
    Ok(bounds)
}

/// `max(1, floor(sqrt(ln(1/t))))`; returns 1 for `t >= 1`.
pub fn adaptive_order(t: f64) -> usize {
    if !(t > 0.0 && t < 1.0) {
        return 1;
    }
    // The 1e-12 nudge keeps exact squares such as t = e^-9 from rounding down.
    let r = libm::floor(libm::sqrt(libm::log(1.0 / t)) + 1e-12);
    (r as usize).max(1)
}
