//! Conditional law of a randomly weighted average given its atoms.
//!
//! For distinct atoms `x_j` with multiplicities `m_j` and `n* = Σ m_j`,
//!
//! ```text
//! k(z | x) = Σ_{j : x_j ≤ z} f_j^{(m_j−1)}(x_j; z) / (m_j−1)!,
//! f_j(x; z) = (x − z)^{n*−1} / Π_{i≠j} (x − x_i)^{m_i},
//! ```
//!
//! which is `P(Σ_j D_j x_j ≤ z)` for `D ~ Dirichlet(m)`. The derivative over
//! the factorial is the Taylor coefficient of order `m_j − 1`, read off the
//! truncated series product.
//!
//! [`kernel_apply`] generalizes this to `k(g | x)` for any function `g` that
//! can supply Taylor coefficients, and [`mixture_cdf`] integrates the
//! conditional CDF against the marginals of the atoms.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::atoms::{AtomConfig, WeightScheme, DEFAULT_MERGE_TOL};
use crate::dists::Dist;
use crate::error::{Error, Result};
use crate::mc::chunked;
use crate::quad::gauss_legendre;
use crate::rng::RngState;
use crate::series::{factor_product_series, LinearFactor, Scalar, Series};

/// Largest supported `n* − 1`, i.e. the highest derivative order.
pub const DEFAULT_ORDER_CAP: usize = 64;

/// Kernel values outside `[−BAND, 1 + BAND]` are reported as ill-conditioned.
pub const CONDITIONING_BAND: f64 = 1e-7;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn check_cap(nstar: u32) -> Result<()> {
    let order = nstar as usize - 1;
    if order > DEFAULT_ORDER_CAP {
        return Err(Error::OrderCap {
            order,
            cap: DEFAULT_ORDER_CAP,
        });
    }
    Ok(())
}

/// Conditional CDF `k(z | x_1, …, x_n)` of the weighted average.
///
/// Right-continuous: an atom equal to `z` contributes its term. Returns 0
/// below the smallest atom and 1 at or above the largest.
pub fn weisberg_cdf(cfg: &AtomConfig, z: f64) -> Result<f64> {
    if z < cfg.min() {
        return Ok(0.0);
    }
    if z >= cfg.max() {
        return Ok(1.0);
    }
    check_cap(cfg.nstar())?;
    let atoms = cfg.atoms();
    let mult = cfg.multiplicities();
    let top = cfg.nstar() as i32 - 1;
    let mut factors = Vec::with_capacity(atoms.len());
    // the terms over all atoms sum to 1, so either side determines k
    let (mut lower, mut upper) = (CompensatedSum::default(), CompensatedSum::default());
    let (mut lower_mag, mut upper_mag) = (0.0, 0.0);
    for (j, (&xj, &mj)) in atoms.iter().zip(mult).enumerate() {
        factors.clear();
        factors.push(LinearFactor::new(xj - z, top));
        for (i, (&xi, &mi)) in atoms.iter().zip(mult).enumerate() {
            if i != j {
                factors.push(LinearFactor::new(xj - xi, -(mi as i32)));
            }
        }
        let r = mj as usize - 1;
        let term = factor_product_series(&factors, r)?.coeff(r);
        if xj <= z {
            lower.add(term);
            lower_mag += term.abs();
        } else {
            upper.add(term);
            upper_mag += term.abs();
        }
    }
    let value = if lower_mag <= upper_mag {
        lower.value()
    } else {
        1.0 - upper.value()
    };
    if !(-CONDITIONING_BAND..=1.0 + CONDITIONING_BAND).contains(&value) {
        return Err(Error::Conditioning { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// A function `g` described by its Taylor coefficients.
pub trait TaylorSource<T> {
    /// Coefficients `g(a), g'(a), g''(a)/2!, …` up to `order`.
    fn taylor(&self, at: f64, order: usize) -> Vec<T>;
}

impl<T, F> TaylorSource<T> for F
where
    F: Fn(f64, usize) -> Vec<T>,
{
    fn taylor(&self, at: f64, order: usize) -> Vec<T> {
        self(at, order)
    }
}

/// `g(x) ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant<T>(pub T);

impl<T: Scalar> TaylorSource<T> for Constant<T> {
    fn taylor(&self, _at: f64, order: usize) -> Vec<T> {
        let mut c = vec![T::zero(); order + 1];
        c[0] = self.0;
        c
    }
}

/// `g_z(x) = (z − x)^power · U(z − x)` with `U(0) = 1`.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedPower {
    pub z: f64,
    pub power: u32,
}

impl TaylorSource<f64> for TruncatedPower {
    fn taylor(&self, at: f64, order: usize) -> Vec<f64> {
        if at > self.z {
            return vec![0.0; order + 1];
        }
        // (z − a − t)^p = (−1)^p (a − z + t)^p
        let sign = if self.power % 2 == 0 { 1.0 } else { -1.0 };
        crate::series::series_of_factor(&LinearFactor::new(at - self.z, self.power as i32), order)
            .expect("nonnegative exponent never hits a pole")
            .scale(sign)
            .into_coeffs()
    }
}

/// `g(x) = 1 / (z − x)` for complex `z`.
#[derive(Debug, Clone, Copy)]
pub struct Resolvent {
    pub z: Complex64,
}

impl TaylorSource<Complex64> for Resolvent {
    fn taylor(&self, at: f64, order: usize) -> Vec<Complex64> {
        let inv = 1.0 / (self.z - at);
        let mut c = Vec::with_capacity(order + 1);
        let mut p = inv;
        for _ in 0..=order {
            c.push(p);
            p *= inv;
        }
        c
    }
}

/// General conditional kernel
/// `k(g | x) = Σ_j (−1)^{m_j−1}/(m_j−1)! · ∂^{m_j−1}/∂x_j^{m_j−1} [ g(x_j) / Π_{i≠j} (x_i − x_j)^{m_i} ]`.
pub fn kernel_apply<T, G>(cfg: &AtomConfig, g: &G) -> Result<T>
where
    T: Scalar,
    G: TaylorSource<T> + ?Sized,
{
    check_cap(cfg.nstar())?;
    let atoms = cfg.atoms();
    let mult = cfg.multiplicities();
    let mut total = T::zero();
    let mut factors = Vec::with_capacity(atoms.len());
    for (j, (&xj, &mj)) in atoms.iter().zip(mult).enumerate() {
        let r = mj as usize - 1;
        let coeffs = g.taylor(xj, r);
        if coeffs.len() < r + 1 {
            return Err(Error::InsufficientOrder {
                needed: r + 1,
                got: coeffs.len(),
            });
        }
        // (x_i − x_j − t)^{−m_i} = (−1)^{m_i} (x_j − x_i + t)^{−m_i}
        factors.clear();
        let mut sign_flips = 0u32;
        for (i, (&xi, &mi)) in atoms.iter().zip(mult).enumerate() {
            if i != j {
                factors.push(LinearFactor::new(T::from(xj - xi), -(mi as i32)));
                sign_flips += mi;
            }
        }
        let g_series = Series::new(coeffs[..=r].to_vec());
        let prod = factor_product_series(&factors, r)?.mul(&g_series)?;
        let mut term = prod.coeff(r);
        if (sign_flips + r as u32) % 2 == 1 {
            term = -term;
        }
        total += term;
    }
    Ok(total)
}

/// How [`mixture_cdf`] integrates over the atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureMethod {
    /// Tensor-product Gauss–Legendre in the probability scale, `nodes` per axis.
    Quadrature { nodes: usize },
    /// Average of the conditional CDF over `samples` atom draws.
    MonteCarlo { samples: usize, state: RngState },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureEstimate {
    pub value: f64,
    /// Standard error of a Monte Carlo estimate; `None` for quadrature.
    pub std_error: Option<f64>,
}

/// Maximum number of tensor-product nodes evaluated by the quadrature path.
pub const QUADRATURE_NODE_CAP: usize = 50_000_000;

/// Conditional CDFs at every `z` for one atom vector. Near-coincident atoms
/// are merged; on a conditioning failure the merge tolerance is coarsened.
fn kernel_row(x: &[f64], scheme: &WeightScheme, zs: &[f64], out: &mut [f64]) -> Result<()> {
    let mut last = None;
    for tol in [DEFAULT_MERGE_TOL, 1e-6, 1e-4] {
        let cfg = AtomConfig::normalize(x, scheme, tol)?;
        let attempt: Result<()> = zs
            .iter()
            .zip(out.iter_mut())
            .try_for_each(|(&z, o)| weisberg_cdf(&cfg, z).map(|v| *o = v));
        match attempt {
            Ok(()) => return Ok(()),
            Err(e @ (Error::Conditioning { .. } | Error::Pole { .. })) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Unconditional CDF `F_S(z) = E[k(z | X_1, …, X_n)]` on a grid of `z`.
pub fn mixture_cdf_grid(
    scheme: &WeightScheme,
    marginals: &[Dist],
    zs: &[f64],
    method: MixtureMethod,
) -> Result<Vec<MixtureEstimate>> {
    if marginals.len() != scheme.len() {
        return Err(Error::LengthMismatch {
            what: "marginals vs multiplicities",
            left: marginals.len(),
            right: scheme.len(),
        });
    }
    match method {
        MixtureMethod::Quadrature { nodes } => quadrature_mixture(scheme, marginals, zs, nodes),
        MixtureMethod::MonteCarlo { samples, state } => {
            montecarlo_mixture(scheme, marginals, zs, samples, state)
        }
    }
}

/// Single-point form of [`mixture_cdf_grid`].
pub fn mixture_cdf(
    scheme: &WeightScheme,
    marginals: &[Dist],
    z: f64,
    method: MixtureMethod,
) -> Result<MixtureEstimate> {
    Ok(mixture_cdf_grid(scheme, marginals, &[z], method)?[0])
}

fn quadrature_mixture(
    scheme: &WeightScheme,
    marginals: &[Dist],
    zs: &[f64],
    nodes: usize,
) -> Result<Vec<MixtureEstimate>> {
    if nodes < 8 {
        return Err(Error::Budget(format!(
            "quadrature needs at least 8 nodes per axis, got {nodes}"
        )));
    }
    if let Some(d) = marginals.iter().find(|d| !d.support().is_compact()) {
        return Err(Error::InvalidParameter(format!(
            "quadrature mixture needs compact supports; `{d}` is unbounded"
        )));
    }
    let dims = marginals.len();
    let total = (nodes as f64).powi(dims as i32);
    if total > QUADRATURE_NODE_CAP as f64 {
        return Err(Error::Budget(format!(
            "{nodes}^{dims} tensor nodes exceed the cap of {QUADRATURE_NODE_CAP}"
        )));
    }
    let rule = gauss_legendre(nodes);
    let axes: Vec<Vec<(f64, f64)>> = marginals
        .iter()
        .map(|d| rule.iter().map(|&(u, w)| (d.quantile(u), w)).collect())
        .collect();

    // parallel over the first axis, merged in index order
    let partials: Vec<Vec<f64>> = (0..nodes)
        .into_par_iter()
        .map(|first| -> Result<Vec<f64>> {
            let mut acc = vec![CompensatedSum::default(); zs.len()];
            let mut idx = vec![0usize; dims];
            idx[0] = first;
            let mut x = vec![0.0; dims];
            let mut row = vec![0.0; zs.len()];
            loop {
                let mut w = 1.0;
                for d in 0..dims {
                    let (xv, wv) = axes[d][idx[d]];
                    x[d] = xv;
                    w *= wv;
                }
                kernel_row(&x, scheme, zs, &mut row)?;
                for (a, v) in acc.iter_mut().zip(&row) {
                    a.add(w * v);
                }
                // odometer over axes 1..dims
                let mut d = 1;
                while d < dims {
                    idx[d] += 1;
                    if idx[d] < nodes {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d >= dims {
                    break;
                }
            }
            Ok(acc.iter().map(CompensatedSum::value).collect())
        })
        .collect::<Result<_>>()?;

    Ok((0..zs.len())
        .map(|k| {
            let mut s = CompensatedSum::default();
            for p in &partials {
                s.add(p[k]);
            }
            MixtureEstimate {
                value: s.value().clamp(0.0, 1.0),
                std_error: None,
            }
        })
        .collect())
}

fn montecarlo_mixture(
    scheme: &WeightScheme,
    marginals: &[Dist],
    zs: &[f64],
    samples: usize,
    state: RngState,
) -> Result<Vec<MixtureEstimate>> {
    if samples < 2 {
        return Err(Error::Budget(format!(
            "Monte Carlo needs at least 2 samples, got {samples}"
        )));
    }
    let per_chunk = chunked(samples, state, |rng, len| {
        let mut sum = vec![0.0; zs.len()];
        let mut sq = vec![0.0; zs.len()];
        let mut x = vec![0.0; marginals.len()];
        let mut row = vec![0.0; zs.len()];
        for _ in 0..len {
            for (xv, d) in x.iter_mut().zip(marginals) {
                *xv = d.sample(rng);
            }
            kernel_row(&x, scheme, zs, &mut row)?;
            for k in 0..zs.len() {
                sum[k] += row[k];
                sq[k] += row[k] * row[k];
            }
        }
        Ok(vec![(sum, sq)])
    })?;
    let n = samples as f64;
    Ok((0..zs.len())
        .map(|k| {
            let s: f64 = per_chunk.iter().map(|(a, _)| a[k]).sum();
            let q: f64 = per_chunk.iter().map(|(_, b)| b[k]).sum();
            let mean = s / n;
            let var = ((q - n * mean * mean) / (n - 1.0)).max(0.0);
            MixtureEstimate {
                value: mean,
                std_error: Some((var / n).sqrt()),
            }
        })
        .collect())
}
