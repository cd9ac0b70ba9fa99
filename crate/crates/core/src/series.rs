//! Truncated Taylor series.
//!
//! High-order derivatives of products of powers of linear factors,
//! `Π (d_i + t)^{e_i}`, are read off as Taylor coefficients of the truncated
//! product. No finite differencing is involved, so the only error is
//! floating-point rounding in the Cauchy products.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex64;
use num_traits::{Num, NumAssign};

use crate::error::{Error, Result};

/// Offsets smaller than this in modulus are treated as a pole when the
/// exponent is negative.
pub const POLE_GUARD: f64 = 1e-9;

/// Field-like scalar usable as a series coefficient.
pub trait Scalar:
    Copy + Debug + Send + Sync + Num + NumAssign + Neg<Output = Self> + From<f64> + 'static
{
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Dense truncated Taylor series `c_0 + c_1 t + … + c_K t^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T = f64> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Series<T> {
    /// Builds a series of order `coeffs.len() - 1`.
    ///
    /// # Panics
    /// Panics on an empty coefficient vector.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least one coefficient");
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); order + 1],
        }
    }

    /// The multiplicative identity `1 + 0 t + …` at the given order.
    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = T::one();
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs[k]
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn scale(mut self, factor: T) -> Self {
        for c in &mut self.coeffs {
            *c *= factor;
        }
        self
    }

    /// Cauchy product truncated to the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        let order = self.order();
        let mut out = vec![T::zero(); order + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            for (j, &b) in other.coeffs[..=order - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self { coeffs: out })
    }

    /// The `r`-th derivative at `t = 0`, i.e. `r! c_r`.
    pub fn derivative_at_zero(&self, r: usize) -> T {
        self.coeffs[r] * T::from(factorial(r))
    }
}

/// The factor `(offset + t)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFactor<T = f64> {
    pub offset: T,
    pub exponent: i32,
}

impl<T: Scalar> LinearFactor<T> {
    pub fn new(offset: T, exponent: i32) -> Self {
        Self { offset, exponent }
    }

    fn eval(&self, t: T) -> T {
        powi(self.offset + t, self.exponent)
    }
}

/// Taylor coefficients of `(d + t)^e` around `t = 0` up to `order`.
///
/// Uses generalized binomial coefficients `C(e, k) d^{e-k}`; for `e >= 0` the
/// expansion terminates after degree `e`.
pub fn series_of_factor<T: Scalar>(factor: &LinearFactor<T>, order: usize) -> Result<Series<T>> {
    let d = factor.offset;
    let e = factor.exponent;
    let mut coeffs = vec![T::zero(); order + 1];
    if e >= 0 {
        let e = e as usize;
        let mut binom = 1.0_f64;
        for k in 0..=order.min(e) {
            if k > 0 {
                binom = binom * (e + 1 - k) as f64 / k as f64;
            }
            coeffs[k] = T::from(binom) * powi(d, (e - k) as i32);
        }
    } else {
        if d.modulus() < POLE_GUARD {
            return Err(Error::Pole {
                offset: d.modulus(),
                exponent: e,
            });
        }
        let inv = T::one() / d;
        coeffs[0] = powi(inv, -e);
        for k in 1..=order {
            let ratio = T::from((e - k as i32 + 1) as f64 / k as f64);
            coeffs[k] = coeffs[k - 1] * ratio * inv;
        }
    }
    Ok(Series { coeffs })
}

/// Truncated series of `Π_i (d_i + t)^{e_i}` at the given order.
pub fn factor_product_series<T: Scalar>(
    factors: &[LinearFactor<T>],
    order: usize,
) -> Result<Series<T>> {
    let mut acc = Series::one(order);
    for f in factors {
        acc = acc.mul(&series_of_factor(f, order)?)?;
    }
    Ok(acc)
}

/// The `r`-th derivative at `t = 0` of `Π_i (d_i + t)^{e_i}`.
pub fn derivative_of_factor_product<T: Scalar>(factors: &[LinearFactor<T>], r: usize) -> Result<T> {
    Ok(factor_product_series(factors, r)?.derivative_at_zero(r))
}

/// Direct evaluation of `Π_i (d_i + t)^{e_i}`.
pub fn eval_factor_product<T: Scalar>(factors: &[LinearFactor<T>], t: T) -> T {
    factors.iter().fold(T::one(), |acc, f| acc * f.eval(t))
}

pub(crate) fn powi<T: Scalar>(base: T, exp: i32) -> T {
    let mut result = T::one();
    let mut b = if exp < 0 { T::one() / base } else { base };
    let mut n = exp.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            result *= b;
        }
        b *= b;
        n >>= 1;
    }
    result
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    /// r-th derivative at 0 by the Cauchy integral formula on a circle of
    /// radius `rho`, trapezoid rule with `n` nodes.
    fn cauchy_oracle(factors: &[LinearFactor<f64>], r: usize, rho: f64, n: usize) -> f64 {
        let cf: Vec<LinearFactor<Complex64>> = factors
            .iter()
            .map(|f| LinearFactor::new(Complex64::from(f.offset), f.exponent))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let t = Complex64::from_polar(rho, theta);
            acc += eval_factor_product(&cf, t) / t.powi(r as i32);
        }
        (acc / n as f64).re * factorial(r)
    }

    fn repeated_difference(f: &dyn Fn(f64) -> f64, r: usize, h: f64) -> f64 {
        // central r-th difference: Σ (-1)^k C(r,k) f((r/2 - k) h) / h^r
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=r {
            if k > 0 {
                binom = binom * (r + 1 - k) as f64 / k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * f((r as f64 / 2.0 - k as f64) * h);
        }
        acc / h.powi(r as i32)
    }

    #[test]
    fn factor_series_examples() {
        let s = series_of_factor(&LinearFactor::new(2.0, 2), 2).unwrap();
        assert_eq!(s.coeffs(), &[4.0, 4.0, 1.0]);

        let s = series_of_factor(&LinearFactor::new(1.0, -1), 3).unwrap();
        assert_eq!(s.coeffs(), &[1.0, -1.0, 1.0, -1.0]);

        // (3+t)^{-2}: 1/9, -2/27, 3/81
        let s = series_of_factor(&LinearFactor::new(3.0, -2), 2).unwrap();
        let want = [1.0 / 9.0, -2.0 / 27.0, 1.0 / 27.0];
        for (a, b) in s.coeffs().iter().zip(want) {
            assert!(close(*a, b, 1e-15), "{a} vs {b}");
        }
    }

    #[test]
    fn factor_series_truncates_polynomials() {
        let s = series_of_factor(&LinearFactor::new(2.0, 2), 5).unwrap();
        assert_eq!(s.coeffs(), &[4.0, 4.0, 1.0, 0.0, 0.0, 0.0]);
        let s = series_of_factor(&LinearFactor::new(0.0, 3), 4).unwrap();
        assert_eq!(s.coeffs(), &[0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn pole_is_an_error() {
        let err = series_of_factor(&LinearFactor::new(0.0, -1), 2).unwrap_err();
        assert!(matches!(err, Error::Pole { .. }));
        let err = series_of_factor(&LinearFactor::new(1e-12, -2), 2).unwrap_err();
        assert!(matches!(err, Error::Pole { .. }));
        assert!(derivative_of_factor_product(&[LinearFactor::new(2.0, 1), LinearFactor::new(0.0, -3)], 1).is_err());
    }

    #[test]
    fn mul_examples() {
        let a = Series::new(vec![1.0, 1.0, 0.0]);
        let b = Series::new(vec![1.0, -1.0, 0.0]);
        assert_eq!(a.mul(&b).unwrap().coeffs(), &[1.0, 0.0, -1.0]);

        let c = Series::new(vec![1.0, 2.0, 1.0]);
        assert_eq!(c.mul(&c).unwrap().coeffs(), &[1.0, 4.0, 6.0]);
        assert_eq!(c.mul(&Series::one(2)).unwrap(), c);
    }

    #[test]
    fn mul_rejects_order_mismatch() {
        let a = Series::new(vec![1.0, 1.0]);
        let b = Series::new(vec![1.0, 1.0, 1.0]);
        assert_eq!(
            a.mul(&b).unwrap_err(),
            Error::OrderMismatch { left: 1, right: 2 }
        );
    }

    #[test]
    fn derivative_examples() {
        let v = derivative_of_factor_product(&[LinearFactor::new(5.0, 3)], 0).unwrap();
        assert_eq!(v, 125.0);
        let v = derivative_of_factor_product(&[LinearFactor::new(1.0, -1)], 2).unwrap();
        assert!(close(v, 2.0, 1e-15));
        let factors = [LinearFactor::new(2.0, 2), LinearFactor::new(1.0, -1)];
        let v = derivative_of_factor_product(&factors, 1).unwrap();
        assert!(v.abs() < 1e-14);
        let f = |t: f64| eval_factor_product(&factors, t);
        let fd = (f(1e-5) - f(-1e-5)) / 2e-5;
        assert!(fd.abs() < 1e-9);
    }

    #[test]
    fn complex_scalars_work() {
        let f = [LinearFactor::new(Complex64::new(0.0, 2.0), -2)];
        let v = derivative_of_factor_product(&f, 1).unwrap();
        // d/dt (2i + t)^{-2} = -2 (2i)^{-3} = -2 / (-8i) = -i/4
        assert!((v - Complex64::new(0.0, -0.25)).norm() < 1e-15);
    }

    #[test]
    fn cauchy_oracle_sanity() {
        let f = [LinearFactor::new(1.0, -1)];
        // d^3/dt^3 (1+t)^{-1} = -6
        assert!(close(cauchy_oracle(&f, 3, 0.5, 64), -6.0, 1e-12));
    }

    fn factor_strategy() -> impl Strategy<Value = LinearFactor<f64>> {
        (0.1f64..3.0, prop::bool::ANY, -3i32..=3).prop_map(|(mag, neg, e)| {
            LinearFactor::new(if neg { -mag } else { mag }, e)
        })
    }

    proptest! {
        #[test]
        fn nonnegative_exponents_give_binomials(d in -5i32..=5, e in 0i32..=8) {
            let s = series_of_factor(&LinearFactor::new(d as f64, e), 8).unwrap();
            for (k, c) in s.coeffs().iter().enumerate() {
                let expect = if k as i32 > e {
                    0.0
                } else {
                    let b = (0..k).fold(1.0, |acc, i| acc * (e as f64 - i as f64) / (i as f64 + 1.0));
                    b * (d as f64).powi(e - k as i32)
                };
                prop_assert!((c - expect).abs() <= 1e-12 * expect.abs().max(1.0));
                prop_assert!((c - c.round()).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }

        #[test]
        fn low_order_matches_finite_differences(
            factors in prop::collection::vec(factor_strategy(), 1..4),
            r in 0usize..=2,
        ) {
            let exact = derivative_of_factor_product(&factors, r).unwrap();
            let f = |t: f64| eval_factor_product(&factors, t);
            let fd = repeated_difference(&f, r, 1e-4);
            let scale = exact.abs().max(eval_factor_product(&factors, 0.0).abs());
            prop_assert!((exact - fd).abs() <= 1e-5 * scale, "{} vs {}", exact, fd);
        }

        #[test]
        fn matches_contour_integral(
            factors in prop::collection::vec(factor_strategy(), 1..4),
            r in 0usize..=5,
        ) {
            let exact = derivative_of_factor_product(&factors, r).unwrap();
            let oracle = cauchy_oracle(&factors, r, 0.05, 128);
            // Cauchy bound on the contour fixes the absolute floor
            let bound = (0..64)
                .map(|k| {
                    let t = Complex64::from_polar(0.05, std::f64::consts::TAU * k as f64 / 64.0);
                    let cf: Vec<LinearFactor<Complex64>> =
                        factors.iter().map(|f| LinearFactor::new(Complex64::from(f.offset), f.exponent)).collect();
                    eval_factor_product(&cf, t).norm()
                })
                .fold(0.0, f64::max)
                * factorial(r)
                / 0.05f64.powi(r as i32);
            let tol = 1e-8 * exact.abs().max(oracle.abs()) + 1e-13 * bound;
            prop_assert!((exact - oracle).abs() <= tol, "{} vs {}", exact, oracle);
        }

        #[test]
        fn leibniz_rule(a in factor_strategy(), b in factor_strategy(), r in 0usize..=5) {
            let whole = derivative_of_factor_product(&[a, b], r).unwrap();
            let mut sum = 0.0;
            let mut binom = 1.0;
            for k in 0..=r {
                if k > 0 {
                    binom = binom * (r + 1 - k) as f64 / k as f64;
                }
                sum += binom
                    * derivative_of_factor_product(&[a], k).unwrap()
                    * derivative_of_factor_product(&[b], r - k).unwrap();
            }
            prop_assert!((whole - sum).abs() <= 1e-10 * whole.abs().max(sum.abs()).max(1.0));
        }
    }
}
