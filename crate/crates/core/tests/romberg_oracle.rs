use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use sde_tv_core::romberg::{
    adaptive_order, vandermonde_residual_f64, weight_bound_checks, weights, Rational, MAX_ORDER,
};

/// Solves `sum_i w_i 2^{-(i-1) k} = [k = 0]`, `k = 0..r-1`, by Gauss-Jordan
/// elimination over the rationals.
fn vandermonde_solve(r: usize) -> Vec<Rational> {
    let mut m: Vec<Vec<Rational>> = (0..r)
        .map(|k| {
            let mut row: Vec<Rational> = (0..r)
                .map(|i| Rational::new(BigInt::one(), BigInt::one() << (i * k)))
                .collect();
            row.push(if k == 0 { Rational::one() } else { Rational::zero() });
            row
        })
        .collect();
    for col in 0..r {
        let pivot = (col..r).find(|&row| !m[row][col].is_zero()).expect("singular");
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for row in 0..r {
            if row != col && !m[row][col].is_zero() {
                let f = m[row][col].clone();
                for j in 0..=r {
                    let sub = &f * &m[col][j];
                    m[row][j] -= sub;
                }
            }
        }
    }
    m.into_iter().map(|row| row[r].clone()).collect()
}

#[test]
fn closed_form_equals_linear_solve() {
    for r in 1..=8 {
        assert_eq!(
            weights(r).unwrap().w(),
            vandermonde_solve(r).as_slice(),
            "r = {r}"
        );
    }
}

#[test]
fn weights_sum_to_one() {
    for r in 1..=MAX_ORDER {
        let sum: Rational = weights(r).unwrap().w().iter().sum();
        assert!(sum.is_one(), "r = {r}");
    }
}

#[test]
fn sign_pattern_alternates_from_the_top() {
    for r in 1..=MAX_ORDER {
        let wt = weights(r).unwrap();
        let w = wt.w();
        for (j, wi) in w.iter().rev().enumerate() {
            assert_eq!(wi.is_positive(), j % 2 == 0, "r = {r}, index {}", r - j);
        }
    }
}

#[test]
fn float_residuals_stay_small() {
    for r in 1..=8 {
        let res = vandermonde_residual_f64(&weights(r).unwrap());
        assert!(res.iter().all(|x| x.abs() < 1e-8), "r = {r}: {res:?}");
    }
}

#[test]
fn weight_sums_stay_below_envelopes() {
    for r in 1..=MAX_ORDER {
        let b = weight_bound_checks(&weights(r).unwrap()).unwrap();
        assert!(sde_tv_core::romberg::to_f64(&b.sum_over_refiners) <= b.refiner_envelope);
        assert!(b.sum_sqrt2_growth <= b.growth_envelope);
    }
}

#[test]
fn refiners_are_dyadic() {
    assert_eq!(weights(5).unwrap().refiners(), &[1, 2, 4, 8, 16]);
}

#[test]
fn adaptive_order_is_monotone() {
    let ts: Vec<f64> = (1..400).map(|k| (-0.1 * k as f64).exp()).collect();
    for w in ts.windows(2) {
        assert!(adaptive_order(w[1]) >= adaptive_order(w[0]));
    }
}
