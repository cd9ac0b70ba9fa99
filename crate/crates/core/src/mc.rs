//! Random weights, randomly weighted average sampling, empirical CDFs and
//! Kolmogorov–Smirnov distances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::atoms::WeightScheme;
use crate::dists::Dist;
use crate::error::{Error, Result};
use crate::rng::RngState;

/// Samples per parallel chunk. Chunk `i` always uses stream `split(i)`.
pub const CHUNK: usize = 8192;

/// Runs `work(rng, len)` over `count` items cut into [`CHUNK`]-sized pieces
/// and concatenates the outputs in chunk order.
pub(crate) fn chunked<T, F>(count: usize, state: RngState, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Result<Vec<T>> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(count - c * CHUNK);
            let mut rng = state.split(c as u64).rng();
            work(&mut rng, len)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Replaces the last weight by `1 − Σ others` so the vector sums to one.
fn close_simplex(w: &mut [f64]) {
    let n = w.len();
    let mut head: f64 = w[..n - 1].iter().sum();
    while head > 1.0 {
        for x in &mut w[..n - 1] {
            *x /= head;
        }
        head = w[..n - 1].iter().sum();
    }
    w[n - 1] = 1.0 - head;
}

/// Dirichlet(m_1, …, m_n) weights from normalized Gamma variates.
pub fn sample_weights_dirichlet<R: Rng + ?Sized>(scheme: &WeightScheme, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = scheme
        .multiplicities()
        .iter()
        .map(|&m| {
            Gamma::new(m as f64, 1.0)
                .expect("multiplicities are positive")
                .sample(rng)
        })
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    close_simplex(&mut w);
    w
}

/// Increments `U_(k_j) − U_(k_{j−1})` of `nstar − 1` sorted uniforms.
pub fn sample_weights_orderstat<R: Rng + ?Sized>(scheme: &WeightScheme, rng: &mut R) -> Vec<f64> {
    let nstar = scheme.nstar() as usize;
    let mut u: Vec<f64> = (0..nstar - 1).map(|_| rng.random::<f64>()).collect();
    u.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    let mut w: Vec<f64> = scheme
        .indices()
        .iter()
        .map(|&k| {
            let cut = u[k as usize - 1];
            let r = cut - prev;
            prev = cut;
            r
        })
        .collect();
    w.push(1.0 - prev);
    close_simplex(&mut w);
    w
}

/// `count` independent draws of `Σ_j R_j X_j` with Dirichlet weights and
/// independent marginals.
pub fn sample_rwa(
    scheme: &WeightScheme,
    marginals: &[Dist],
    count: usize,
    state: RngState,
) -> Result<Vec<f64>> {
    if marginals.len() != scheme.len() {
        return Err(Error::LengthMismatch {
            what: "marginals vs multiplicities",
            left: marginals.len(),
            right: scheme.len(),
        });
    }
    chunked(count, state, |rng, len| {
        let mut out = Vec::with_capacity(len);
        let mut xs = vec![0.0; marginals.len()];
        for _ in 0..len {
            let w = sample_weights_dirichlet(scheme, rng);
            for (x, d) in xs.iter_mut().zip(marginals) {
                *x = d.sample(rng);
            }
            let s: f64 = w.iter().zip(&xs).map(|(a, b)| a * b).sum();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            if !(s >= lo - slack && s <= hi + slack) {
                return Err(Error::Internal(format!(
                    "weighted average {s} escaped the hull [{lo}, {hi}]"
                )));
            }
            out.push(s);
        }
        Ok(out)
    })
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empty sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidParameter("sample contains NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Groups of equal values as `(value, first index, one past last index)`.
    fn jumps(&self) -> impl Iterator<Item = (f64, usize, usize)> + '_ {
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= self.sorted.len() {
                return None;
            }
            let v = self.sorted[i];
            let start = i;
            while i < self.sorted.len() && self.sorted[i] == v {
                i += 1;
            }
            Some((v, start, i))
        })
    }
}

/// The reference law a sample is compared against.
#[derive(Clone, Copy)]
pub enum KsReference<'a> {
    Dist(&'a Dist),
    Ecdf(&'a Ecdf),
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// Sup-norm distance between an empirical CDF and a reference, evaluated on
/// both sides of every jump.
pub fn ks_distance(e: &Ecdf, reference: KsReference<'_>) -> f64 {
    let n = e.len() as f64;
    match reference {
        KsReference::Ecdf(other) => {
            let mut d: f64 = 0.0;
            for (v, _, _) in e.jumps().chain(other.jumps()) {
                d = d.max((e.eval(v) - other.eval(v)).abs());
            }
            d
        }
        KsReference::Dist(dist) => e.jumps().fold(0.0, |d: f64, (v, i0, i1)| {
            let right = dist.cdf(v);
            let left = dist.cdf_left(v);
            d.max((i1 as f64 / n - right).abs()).max((left - i0 as f64 / n).abs())
        }),
        KsReference::Cdf(f) => e.jumps().fold(0.0, |d: f64, (v, i0, i1)| {
            let fv = f(v);
            d.max((i1 as f64 / n - fv).abs()).max((fv - i0 as f64 / n).abs())
        }),
    }
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
