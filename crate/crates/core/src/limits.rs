//! Limit experiments for uniform-spacing weights: the largest spacing
//! shrinks to zero, and the weighted average of i.i.d. atoms with a finite
//! mean concentrates at that mean.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::atoms::WeightScheme;
use crate::dists::Dist;
use crate::error::{Error, Result};
use crate::mc::{chunked, sample_weights_dirichlet};
use crate::rng::RngState;

pub const MIN_REPLICATES: usize = 200;

/// Summary of the largest of `n` uniform spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxSpacingSummary {
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    Ok(())
}

/// Largest spacing of `n − 1` sorted uniforms on `[0, 1]`, one per replicate.
pub fn max_spacings(n: usize, replicates: usize, state: RngState) -> Result<Vec<f64>> {
    check_n(n)?;
    chunked(replicates, state, |rng, len| {
        let mut u = vec![0.0; n - 1];
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            for x in u.iter_mut() {
                *x = rng.random::<f64>();
            }
            u.sort_by(f64::total_cmp);
            let mut prev = 0.0;
            let mut best: f64 = 0.0;
            for &x in &u {
                best = best.max(x - prev);
                prev = x;
            }
            out.push(best.max(1.0 - prev));
        }
        Ok(out)
    })
}

pub fn summarize(n: usize, mut values: Vec<f64>) -> MaxSpacingSummary {
    values.sort_by(f64::total_cmp);
    let replicates = values.len();
    MaxSpacingSummary {
        n,
        replicates,
        mean: values.iter().sum::<f64>() / replicates as f64,
        p50: quantile_sorted(&values, 0.5),
        p95: quantile_sorted(&values, 0.95),
    }
}

pub fn max_spacing_stats(n: usize, replicates: usize, state: RngState) -> Result<MaxSpacingSummary> {
    if replicates == 0 {
        return Err(Error::Budget("need at least one replicate".into()));
    }
    Ok(summarize(n, max_spacings(n, replicates, state)?))
}

/// One replicate of the weighted average: its value and its largest weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicate {
    pub average: f64,
    pub max_weight: f64,
}

/// `Σ R_i X_i` over `n` uniform spacings and i.i.d. draws of `marginal`.
pub fn replicate_averages(
    marginal: &Dist,
    n: usize,
    replicates: usize,
    state: RngState,
) -> Result<Vec<Replicate>> {
    check_n(n)?;
    let scheme = WeightScheme::uniform(n)?;
    chunked(replicates, state, |rng, len| {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let w = sample_weights_dirichlet(&scheme, rng);
            let mut average = 0.0;
            let mut max_weight: f64 = 0.0;
            for &r in &w {
                average += r * marginal.sample(rng);
                max_weight = max_weight.max(r);
            }
            out.push(Replicate { average, max_weight });
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Estimated `P(|S_n − μ| > ε)`.
    pub prob_exceed: f64,
    /// Binomial standard error of `prob_exceed`.
    pub prob_se: f64,
    pub eps: f64,
    pub max_spacing_mean: f64,
    pub max_spacing_p95: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub seed: u64,
    pub mu: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Estimates `P(|S_n − μ| > ε)` along `n_grid`. Row `k` uses stream
/// `state.split(k)`.
pub fn convergence_experiment(
    marginal: &Dist,
    mu: f64,
    n_grid: &[usize],
    eps: f64,
    replicates: usize,
    state: RngState,
) -> Result<ConvergenceTable> {
    if marginal.mean().is_none() {
        return Err(Error::Hypothesis(format!(
            "`{marginal}` has E|X| = ∞, so the weighted average has no mean to converge to"
        )));
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::Budget(format!(
            "need at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let rows = n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let reps = replicate_averages(marginal, n, replicates, state.split(k as u64))?;
            let hits = reps.iter().filter(|r| (r.average - mu).abs() > eps).count();
            let p = hits as f64 / replicates as f64;
            let summary = summarize(n, reps.iter().map(|r| r.max_weight).collect());
            Ok(ConvergenceRow {
                n,
                prob_exceed: p,
                prob_se: (p * (1.0 - p) / replicates as f64).sqrt(),
                eps,
                max_spacing_mean: summary.mean,
                max_spacing_p95: summary.p95,
                replicates,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceTable {
        seed: state.seed,
        mu,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{ks_distance, Ecdf, KsReference};

    #[test]
    fn two_points_mean_three_quarters() {
        let s = max_spacing_stats(2, 10_000, RngState::new(1, 0)).unwrap();
        assert!((s.mean - 0.75).abs() < 0.01, "{}", s.mean);
    }

    #[test]
    fn max_spacing_shrinks() {
        let means: Vec<f64> = [10, 100, 1000, 10_000]
            .iter()
            .map(|&n| max_spacing_stats(n, 500, RngState::new(2, n as u64)).unwrap().mean)
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
        let big = max_spacing_stats(10_000, 2000, RngState::new(3, 0)).unwrap();
        assert!(big.p95 < 0.002, "{}", big.p95);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
        assert_eq!(quantile_sorted(&v, 0.95), 3.8);
        assert_eq!(quantile_sorted(&[7.0], 0.95), 7.0);
    }

    #[test]
    fn pipelines_agree_on_the_largest_weight() {
        let n = 50;
        let a = max_spacings(n, 10_000, RngState::new(4, 0)).unwrap();
        let b: Vec<f64> = replicate_averages(&Dist::point_mass(0.0).unwrap(), n, 10_000, RngState::new(4, 1))
            .unwrap()
            .iter()
            .map(|r| r.max_weight)
            .collect();
        let ks = ks_distance(&Ecdf::new(a).unwrap(), KsReference::Ecdf(&Ecdf::new(b).unwrap()));
        assert!(ks < 0.02, "{ks}");
    }

    #[test]
    fn exponential_concentrates() {
        let t = convergence_experiment(
            &Dist::exponential(1.0).unwrap(),
            1.0,
            &[100, 1000, 10_000],
            0.05,
            1000,
            RngState::new(7, 0),
        )
        .unwrap();
        let p: Vec<f64> = t.rows.iter().map(|r| r.prob_exceed).collect();
        assert!(p[2] < 0.05, "{p:?}");
        for w in t.rows.windows(2) {
            assert!(w[1].prob_exceed <= w[0].prob_exceed + 2.0 * w[0].prob_se.max(w[1].prob_se));
        }
        assert!(t.rows.iter().all(|r| (0.0..=1.0).contains(&r.prob_exceed)));
    }

    #[test]
    fn point_mass_never_exceeds() {
        let t = convergence_experiment(
            &Dist::point_mass(2.5).unwrap(),
            2.5,
            &[10, 100],
            0.05,
            200,
            RngState::new(1, 0),
        )
        .unwrap();
        assert!(t.rows.iter().all(|r| r.prob_exceed == 0.0));
    }

    #[test]
    fn cauchy_is_rejected() {
        let err = convergence_experiment(
            &Dist::cauchy(0.0, 1.0).unwrap(),
            0.0,
            &[10],
            0.05,
            200,
            RngState::new(1, 0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
        assert!(err.to_string().contains("E|X|"));
    }

    #[test]
    fn too_few_replicates() {
        let e = Dist::exponential(1.0).unwrap();
        assert!(convergence_experiment(&e, 1.0, &[10], 0.05, 199, RngState::new(1, 0)).is_err());
    }

    #[test]
    fn reproducible_given_seed() {
        let e = Dist::exponential(1.0).unwrap();
        let a = convergence_experiment(&e, 1.0, &[10, 100], 0.1, 300, RngState::new(5, 0)).unwrap();
        let b = convergence_experiment(&e, 1.0, &[10, 100], 0.1, 300, RngState::new(5, 0)).unwrap();
        assert_eq!(a, b);
    }
}
