//! Variance of the weighted average when the spacing weights come from
//! power-distributed cut points instead of uniform ones.
//!
//! Draw `n` i.i.d. variates with density `θ v^{θ−1}` on `[0, 1]`, order them
//! as `V_(1) ≤ … ≤ V_(n)`, and take the `n + 1` spacings
//! `W_i = V_(i) − V_(i−1)` with `V_(0) = 0` and `W_{n+1} = 1 − V_(n)`. With
//! i.i.d. atoms of variance `σ²` independent of the weights,
//! `Var(Σ W_i X_i) = σ² Σ E W_i²` up to the mean term, which vanishes for
//! centered atoms. θ = 1 gives uniform spacings with `Σ E W_i² = 2/(n+2)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::chunked;
use crate::rng::RngState;
use crate::series::factorial;

fn check(n: usize, theta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive and finite, got {theta}"
        )));
    }
    Ok(())
}

/// `E W_i²` for `i = 1..=n+1`.
///
/// With `a = 1/θ`, `V_(i) = U_(i)^a` for uniform order statistics, and the
/// adjacent-pair moment integrals collapse to
/// `E W_i² = 2a² / ((a+i−1)(2a+i−1)) · Π_{j=i}^{n} j / (2a+j)`.
pub fn spacing_second_moments(n: usize, theta: f64) -> Result<Vec<f64>> {
    check(n, theta)?;
    let a = 1.0 / theta;
    let mut out = vec![0.0; n + 1];
    // build the products from the top down
    let mut prod = 1.0;
    for i in (1..=n + 1).rev() {
        if i <= n {
            prod *= i as f64 / (2.0 * a + i as f64);
        }
        let k = (i - 1) as f64;
        out[i - 1] = 2.0 * a * a / ((a + k) * (2.0 * a + k)) * prod;
    }
    Ok(out)
}

/// `Σ_i E W_i²` over the `n + 1` spacings of `n` power(θ) variates.
pub fn expected_sq_sum(n: usize, theta: f64) -> Result<f64> {
    Ok(spacing_second_moments(n, theta)?.iter().sum())
}

/// How the denominator `(n−i−1−k)` of the alternating double sum is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoubleSumReading {
    /// `(n−i−1−k)!`, matching the neighbouring factorials.
    Factorial,
    /// The bare integer `(n−i−1−k)`.
    Literal,
}

/// The alternating closed form
/// `2nθ/(θ+2) − 2nθ/(nθ+1) + 1 − Σ_{i=1}^{n−1} Σ_{k=0}^{n−i−1} 2 n! θ² (−1)^{n−i−1−k} / ((iθ+1)(i−1)! k! D (nθ−kθ+2))`
/// with `D` given by `reading`.
///
/// The factorial reading equals [`expected_sq_sum`] exactly, but the sum
/// alternates with factorial-sized terms and loses about one digit per unit
/// of `n` in double precision; it is trustworthy for `n ≤ 12` or so. The
/// literal reading hits `D = 0` at `k = n−i−1` and is undefined.
pub fn bracket_esq_sum(n: usize, theta: f64, reading: DoubleSumReading) -> Result<f64> {
    check(n, theta)?;
    let nf = n as f64;
    let head = 2.0 * nf * theta / (theta + 2.0) - 2.0 * nf * theta / (nf * theta + 1.0) + 1.0;
    let mut tail = 0.0;
    for i in 1..n {
        for k in 0..n - i {
            let j = n - i - 1 - k;
            let d = match reading {
                DoubleSumReading::Factorial => factorial(j),
                DoubleSumReading::Literal if j == 0 => {
                    return Err(Error::Undefined(format!(
                        "literal double-sum reading divides by (n−i−1−k) = 0 at n={n}, i={i}, k={k}"
                    )))
                }
                DoubleSumReading::Literal => j as f64,
            };
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            tail += 2.0 * factorial(n) * theta * theta * sign
                / ((i as f64 * theta + 1.0)
                    * factorial(i - 1)
                    * factorial(k)
                    * d
                    * (nf * theta - k as f64 * theta + 2.0));
        }
    }
    Ok(head - tail)
}

/// `d/dθ Σ E W_i²` at θ = 1:
/// `[2n − 2(n+2) Σ_{i=2}^{n+1} 1/i] / ((n+1)(n+2)²)`.
pub fn dvariance_dtheta_at1(n: usize) -> Result<f64> {
    check(n, 1.0)?;
    let nf = n as f64;
    let harmonic_tail: f64 = (2..=n + 1).map(|i| 1.0 / i as f64).sum();
    Ok((2.0 * nf - 2.0 * (nf + 2.0) * harmonic_tail) / ((nf + 1.0) * (nf + 2.0).powi(2)))
}

/// `σ² Σ E W_i²` tabulated over a θ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub n: usize,
    pub sigma2: f64,
    pub thetas: Vec<f64>,
    pub esq_sums: Vec<f64>,
}

impl VarianceCurve {
    pub fn variances(&self) -> impl Iterator<Item = f64> + '_ {
        self.esq_sums.iter().map(move |v| self.sigma2 * v)
    }

    /// Grid point with the smallest value.
    pub fn argmin(&self) -> Option<f64> {
        self.thetas
            .iter()
            .zip(&self.esq_sums)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(t, _)| *t)
    }
}

pub fn variance_curve(n: usize, theta_grid: &[f64], sigma2: f64) -> Result<VarianceCurve> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma2 must be non-negative, got {sigma2}")));
    }
    if theta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("theta grid must be strictly increasing".into()));
    }
    let esq_sums = theta_grid
        .iter()
        .map(|&t| expected_sq_sum(n, t))
        .collect::<Result<_>>()?;
    Ok(VarianceCurve {
        n,
        sigma2,
        thetas: theta_grid.to_vec(),
        esq_sums,
    })
}

/// The three curves n ∈ {10, 20, 40}, θ = 1, 1.05, …, 5, σ² = 1.
pub fn fig1_curves() -> Result<Vec<VarianceCurve>> {
    let grid = fig1_grid();
    [10, 20, 40].iter().map(|&n| variance_curve(n, &grid, 1.0)).collect()
}

pub fn fig1_grid() -> Vec<f64> {
    (0..=80).map(|j| 1.0 + 0.05 * j as f64).collect()
}

pub const MIN_DRAWS: usize = 10_000;

/// Monte Carlo estimate of `Σ E W_i²` and its standard error.
pub fn mc_expected_sq_sum(n: usize, theta: f64, draws: usize, state: RngState) -> Result<(f64, f64)> {
    check(n, theta)?;
    if draws < MIN_DRAWS {
        return Err(Error::Budget(format!("need at least {MIN_DRAWS} draws, got {draws}")));
    }
    let inv = 1.0 / theta;
    let parts = chunked(draws, state, |rng, len| {
        let mut v = vec![0.0; n];
        let (mut s, mut q) = (0.0, 0.0);
        for _ in 0..len {
            for x in v.iter_mut() {
                *x = rng.random::<f64>().powf(inv);
            }
            v.sort_by(f64::total_cmp);
            let mut prev = 0.0;
            let mut acc = 0.0;
            for &x in &v {
                acc += (x - prev) * (x - prev);
                prev = x;
            }
            acc += (1.0 - prev) * (1.0 - prev);
            s += acc;
            q += acc * acc;
        }
        Ok(vec![(s, q)])
    })?;
    let nd = draws as f64;
    let s: f64 = parts.iter().map(|p| p.0).sum();
    let q: f64 = parts.iter().map(|p| p.1).sum();
    let mean = s / nd;
    let var = ((q - nd * mean * mean) / (nd - 1.0)).max(0.0);
    Ok((mean, (var / nd).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `E W_i²` by one-dimensional quadrature of the spacing law: with
    /// `V = U^a`, `W_i` has the law of `U_(i)^a − U_(i−1)^a`; integrate
    /// over the joint density of `(U_(i−1), U_(i))` on a fine grid.
    fn moment_by_quadrature(n: usize, theta: f64, i: usize) -> f64 {
        let a = 1.0 / theta;
        let ln_f = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
        // density of (U_(i−1), U_(i)) = (u, w): n!/((i−2)!(n−i)!) u^{i−2} (1−w)^{n−i}
        let g = 400;
        let nodes = crate::quad::gauss_legendre(g);
        let mut acc = 0.0;
        if i == 1 {
            for &(w, ww) in &nodes {
                let dens = (ln_f(n) - ln_f(n - 1)).exp() * (1.0 - w).powi((n - 1) as i32);
                acc += ww * dens * w.powf(2.0 * a);
            }
            return acc;
        }
        if i == n + 1 {
            for &(u, wu) in &nodes {
                let dens = n as f64 * u.powi((n - 1) as i32);
                acc += wu * dens * (1.0 - u.powf(a)).powi(2);
            }
            return acc;
        }
        let c = (ln_f(n) - ln_f(i - 2) - ln_f(n - i)).exp();
        for &(w, ww) in &nodes {
            for &(s, ws) in &nodes {
                let u = s * w;
                let dens = c * u.powi((i - 2) as i32) * (1.0 - w).powi((n - i) as i32);
                acc += ww * ws * w * dens * (w.powf(a) - u.powf(a)).powi(2);
            }
        }
        acc
    }

    #[test]
    fn product_form_matches_moment_quadrature() {
        for (n, theta) in [(2, 0.5), (3, 1.0), (4, 2.0), (6, 1.5)] {
            let m = spacing_second_moments(n, theta).unwrap();
            for i in 1..=n + 1 {
                let q = moment_by_quadrature(n, theta, i);
                assert!((m[i - 1] - q).abs() < 1e-6, "n={n} θ={theta} i={i}: {} vs {q}", m[i - 1]);
            }
        }
    }

    #[test]
    fn reference_values() {
        // exact rationals: n=2, θ=1/2 gives 26/45; θ=1 gives 1/2
        assert!((expected_sq_sum(2, 0.5).unwrap() - 26.0 / 45.0).abs() < 1e-15);
        assert!((expected_sq_sum(2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((expected_sq_sum(2, 2.0).unwrap() - 0.511111111111).abs() < 1e-11);
        assert!((expected_sq_sum(10, 0.5).unwrap() - 0.212454).abs() < 1e-6);
        assert!((expected_sq_sum(10, 2.0).unwrap() - 0.198261).abs() < 1e-6);
    }

    #[test]
    fn uniform_spacings_case() {
        for n in 2..=40 {
            let v = expected_sq_sum(n, 1.0).unwrap();
            assert!((v - 2.0 / (n as f64 + 2.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn factorial_reading_agrees_with_product_form() {
        for n in 2..=12 {
            for theta in [0.5, 1.0, 1.5, 2.0, 5.0] {
                let b = bracket_esq_sum(n, theta, DoubleSumReading::Factorial).unwrap();
                let p = expected_sq_sum(n, theta).unwrap();
                assert!((b - p).abs() < 1e-9, "n={n} θ={theta}: {b} vs {p}");
            }
        }
    }

    #[test]
    fn literal_reading_is_undefined() {
        for n in 2..=6 {
            assert!(matches!(
                bracket_esq_sum(n, 1.0, DoubleSumReading::Literal),
                Err(Error::Undefined(_))
            ));
        }
    }

    #[test]
    fn derivative_closed_form() {
        assert!((dvariance_dtheta_at1(2).unwrap() + 1.0 / 18.0).abs() < 1e-12);
        assert!((dvariance_dtheta_at1(10).unwrap() + 0.0179779).abs() < 1e-7);
        for n in [2, 5, 10, 20, 40] {
            let h = 1e-4;
            let fd = (expected_sq_sum(n, 1.0 + h).unwrap() - expected_sq_sum(n, 1.0 - h).unwrap()) / (2.0 * h);
            let d = dvariance_dtheta_at1(n).unwrap();
            assert!((fd - d).abs() <= 1e-5 * d.abs(), "n={n}: {fd} vs {d}");
        }
        for n in 2..=100 {
            assert!(dvariance_dtheta_at1(n).unwrap() < 0.0);
        }
        assert!(dvariance_dtheta_at1(1).is_err());
    }

    #[test]
    fn increasing_away_from_one() {
        let grid: Vec<f64> = (0..=160).map(|j| 2.0 + 0.05 * j as f64).collect();
        for n in [10, 20, 40] {
            let c = variance_curve(n, &grid, 1.0).unwrap();
            assert!(c.esq_sums.windows(2).all(|w| w[1] > w[0]), "n={n}");
        }
    }

    #[test]
    fn curve_shape_and_scaling() {
        for c in fig1_curves().unwrap() {
            assert_eq!(c.thetas.len(), 81);
            assert!(c.esq_sums[1] < c.esq_sums[0]);
            let arg = c.argmin().unwrap();
            assert!(arg > 1.0 && arg < 2.0, "n={}: argmin {arg}", c.n);
            assert!(c.esq_sums.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
        let zero = variance_curve(10, &[1.0, 2.0, 3.0, 4.0], 0.0).unwrap();
        assert!(zero.variances().all(|v| v == 0.0));
        let a = expected_sq_sum(10, 1.0).unwrap();
        let b = expected_sq_sum(40, 1.0).unwrap();
        assert!(b < a);
        assert!(variance_curve(10, &[2.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn monte_carlo_agrees() {
        for n in [2, 10] {
            for theta in [0.5, 1.0, 2.0, 5.0] {
                let (est, se) = mc_expected_sq_sum(n, theta, 100_000, RngState::new(9, n as u64)).unwrap();
                let exact = expected_sq_sum(n, theta).unwrap();
                assert!((est - exact).abs() <= 3.0 * se, "n={n} θ={theta}: {est} ± {se} vs {exact}");
            }
        }
    }

    #[test]
    fn large_theta_degenerates() {
        let (est, _) = mc_expected_sq_sum(2, 50.0, 20_000, RngState::new(1, 0)).unwrap();
        assert!(est > 0.9);
        assert!(mc_expected_sq_sum(2, 1.0, 10, RngState::new(1, 0)).is_err());
    }

    #[test]
    fn standard_error_shrinks_like_root_draws() {
        let (_, a) = mc_expected_sq_sum(5, 1.0, 10_000, RngState::new(3, 0)).unwrap();
        let (_, b) = mc_expected_sq_sum(5, 1.0, 160_000, RngState::new(3, 0)).unwrap();
        let ratio = a / b;
        assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
    }
}
