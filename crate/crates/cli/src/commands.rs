//! Command implementations. Each returns an [`Outcome`] and leaves writing
//! to the caller.

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use rwa_core::atoms::parse_atoms;
use rwa_core::kernel::{mixture_cdf_grid, weisberg_cdf, MixtureMethod};
use rwa_core::limits::{convergence_experiment, max_spacing_stats};
use rwa_core::mc::sample_rwa;
use rwa_core::stieltjes::{
    square_identity_residual, remark1_residual, theorem1_residual, Identity, Law, ResidualReport,
};
use rwa_core::variance::{fig1_curves, variance_curve, VarianceCurve};
use rwa_core::{AtomConfig, Dist, RngState};

use crate::output::{to_pretty_json, Cell, Table};
use crate::parse::{
    complex_from_json, parse_dist, parse_grid, parse_marginals_for, parse_scheme, parse_usize_list,
};
use crate::{Cli, CliError, Command, MixtureMethodArg, Outcome, Rendered};

pub fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::KernelCdf(a) => kernel_cdf(a),
        Command::MixtureCdf(a) => mixture_cdf(a, cli.seed),
        Command::Sample(a) => sample(a, cli.seed),
        Command::CheckStieltjes(a) => check_stieltjes(&a.config, cli.seed),
        Command::VarianceCurve(a) => {
            let ns = parse_usize_list(&a.n, "n")?;
            let grid = parse_grid(&a.theta)?;
            let curves = ns
                .iter()
                .map(|&n| variance_curve(n, &grid, a.sigma2))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Outcome::table(curve_table(&curves)))
        }
        Command::Fig1 => Ok(Outcome::table(curve_table(&fig1_curves()?))),
        Command::Converge(a) => converge(a, cli.seed),
        Command::MaxSpacing(a) => {
            let ns = parse_usize_list(&a.n, "n")?;
            let mut t = Table::new(vec!["n", "replicates", "mean", "p50", "p95"]);
            for (k, &n) in ns.iter().enumerate() {
                let s = max_spacing_stats(n, a.replicates, RngState::new(cli.seed, 0).split(k as u64))?;
                t.push(vec![
                    Cell::Int(n as u64),
                    Cell::Int(s.replicates as u64),
                    Cell::Float(s.mean),
                    Cell::Float(s.p50),
                    Cell::Float(s.p95),
                ]);
            }
            Ok(Outcome::table(t))
        }
    }
}

fn kernel_cdf(a: &crate::KernelCdfArgs) -> Result<Outcome, CliError> {
    let (x, scheme) = parse_atoms(&a.atoms).map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = parse_grid(&a.grid)?;
    let cfg = AtomConfig::normalize(&x, &scheme, a.merge_tol).map_err(|e| CliError::Usage(e.to_string()))?;
    if cfg.len() < x.len() {
        eprintln!(
            "warning: atoms closer than {:e} were merged: {} -> {cfg}",
            a.merge_tol, a.atoms
        );
    }
    let mut t = Table::new(vec!["z", "cdf"]);
    for z in grid {
        let v = weisberg_cdf(&cfg, z).map_err(|e| match CliError::from(e) {
            CliError::Numeric(m) => CliError::Numeric(format!("at z={z}: {m}")),
            other => other,
        })?;
        t.push(vec![Cell::Float(z), Cell::Float(v)]);
    }
    Ok(Outcome::table(t))
}

fn mixture_cdf(a: &crate::MixtureCdfArgs, seed: u64) -> Result<Outcome, CliError> {
    let scheme = parse_scheme(&a.scheme)?;
    let marginals = parse_marginals_for(&a.marginals, &scheme)?;
    let grid = parse_grid(&a.grid)?;
    let method = match a.method {
        MixtureMethodArg::Quadrature => MixtureMethod::Quadrature { nodes: a.nodes },
        MixtureMethodArg::Mc => MixtureMethod::MonteCarlo {
            samples: a.samples,
            state: RngState::new(seed, a.stream),
        },
    };
    let est = mixture_cdf_grid(&scheme, &marginals, &grid, method)?;
    let mut t = Table::new(vec!["z", "cdf", "se"]);
    for (z, e) in grid.iter().zip(est) {
        t.push(vec![
            Cell::Float(*z),
            Cell::Float(e.value),
            e.std_error.map_or(Cell::Empty, Cell::Float),
        ]);
    }
    Ok(Outcome::table(t))
}

fn sample(a: &crate::SampleArgs, seed: u64) -> Result<Outcome, CliError> {
    let scheme = parse_scheme(&a.scheme)?;
    let marginals = parse_marginals_for(&a.marginals, &scheme)?;
    let values = sample_rwa(&scheme, &marginals, a.count, RngState::new(seed, a.stream))?;
    let mut t = Table::new(vec!["value"]);
    for v in values {
        t.push(vec![Cell::Float(v)]);
    }
    let meta = json!({
        "scheme": scheme.multiplicities(),
        "marginals": marginals.iter().map(Dist::to_string).collect::<Vec<_>>(),
        "seed": seed,
        "stream": a.stream,
        "count": a.count,
    });
    let mut out = Outcome::table(t);
    out.extras.push(("meta.json".into(), to_pretty_json(&meta)?));
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SchemeSpec {
    List(Vec<u32>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MarginalSpec {
    List(Vec<String>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum MixtureSpec {
    Analytic {
        dist: String,
    },
    Empirical {
        count: usize,
        seed: Option<u64>,
        #[serde(default)]
        stream: u64,
    },
}

/// Config file of `check-stieltjes`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StieltjesConfig {
    #[serde(default = "default_identity")]
    identity: Identity,
    scheme: SchemeSpec,
    marginals: MarginalSpec,
    mixture: MixtureSpec,
    z_points: Vec<serde_json::Value>,
    /// Largest acceptable relative residual.
    tolerance: Option<f64>,
    /// Largest acceptable residual in standard errors (sampled mixtures).
    se_multiple: Option<f64>,
}

fn default_identity() -> Identity {
    Identity::Theorem1
}

fn check_stieltjes(path: &std::path::Path, seed: u64) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read `{}`: {e}", path.display())))?;
    let cfg: StieltjesConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config `{}`: {e}", path.display())))?;
    let scheme = match &cfg.scheme {
        SchemeSpec::List(m) => rwa_core::WeightScheme::new(m.clone()).map_err(|e| CliError::Usage(e.to_string()))?,
        SchemeSpec::Text(s) => parse_scheme(s)?,
    };
    let marginals = match &cfg.marginals {
        MarginalSpec::Text(s) => parse_marginals_for(s, &scheme)?,
        MarginalSpec::List(v) => parse_marginals_for(&v.join(";"), &scheme)?,
    };
    let z: Vec<Complex64> = cfg.z_points.iter().map(complex_from_json).collect::<Result<_, _>>()?;
    if z.is_empty() {
        return Err(CliError::Usage("z_points is empty".into()));
    }
    let mixture = match &cfg.mixture {
        MixtureSpec::Analytic { dist } => Law::Analytic(parse_dist(dist)?),
        MixtureSpec::Empirical { count, seed: s, stream } => Law::Empirical(sample_rwa(
            &scheme,
            &marginals,
            *count,
            RngState::new(s.unwrap_or(seed), *stream),
        )?),
    };
    let report = match cfg.identity {
        Identity::Theorem1 => theorem1_residual(&scheme, &marginals, &mixture, &z)?,
        Identity::Remark1 => {
            let m = scheme.multiplicities();
            if m.len() != 2 {
                return Err(CliError::Usage(format!(
                    "remark1 needs a two-entry scheme (n1,n2), got {scheme}"
                )));
            }
            remark1_residual(m[0], m[1], &marginals[0], &marginals[1], &mixture, &z)?
        }
        Identity::Square => {
            if scheme.multiplicities() != [1, 1] || marginals[0] != marginals[1] {
                return Err(CliError::Usage(
                    "square needs scheme 1,1 with two identical marginals".into(),
                ));
            }
            square_identity_residual(&marginals[0], &mixture, &z)?
        }
    };
    let deferred = tolerance_failure(&report, cfg.tolerance, cfg.se_multiple);
    let table = report_table(&report);
    let value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome {
        primary: Rendered::Json(value, table),
        extras: Vec::new(),
        deferred,
    })
}

fn tolerance_failure(r: &ResidualReport, tol: Option<f64>, se_multiple: Option<f64>) -> Option<CliError> {
    if let Some(t) = tol {
        let worst = r.max_rel();
        if !(worst <= t) {
            return Some(CliError::Numeric(format!(
                "{} residual {worst:e} exceeds tolerance {t:e}",
                r.identity
            )));
        }
    }
    if let (Some(k), Some(worst)) = (se_multiple, r.max_z_score()) {
        if !(worst <= k) {
            return Some(CliError::Numeric(format!(
                "{} residual is {worst:.2} standard errors, limit {k}",
                r.identity
            )));
        }
    }
    None
}

fn report_table(r: &ResidualReport) -> Table {
    let mut t = Table::new(vec![
        "z_re", "z_im", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_res", "rel_res", "se",
    ]);
    for p in &r.points {
        t.push(vec![
            Cell::Float(p.z_re),
            Cell::Float(p.z_im),
            Cell::Float(p.lhs_re),
            Cell::Float(p.lhs_im),
            Cell::Float(p.rhs_re),
            Cell::Float(p.rhs_im),
            Cell::Float(p.abs_res),
            Cell::Float(p.rel_res),
            p.se.map_or(Cell::Empty, Cell::Float),
        ]);
    }
    t
}

fn curve_table(curves: &[VarianceCurve]) -> Table {
    let mut t = Table::new(vec!["n", "theta", "esq_sum", "variance"]);
    for c in curves {
        for ((theta, esq), var) in c.thetas.iter().zip(&c.esq_sums).zip(c.variances()) {
            t.push(vec![
                Cell::Int(c.n as u64),
                Cell::Float(*theta),
                Cell::Float(*esq),
                Cell::Float(var),
            ]);
        }
    }
    t
}

fn converge(a: &crate::ConvergeArgs, seed: u64) -> Result<Outcome, CliError> {
    let marginal = parse_dist(&a.marginal)?;
    let ns = parse_usize_list(&a.n_grid, "n-grid")?;
    let mu = a.mu.or(marginal.mean()).unwrap_or(f64::NAN);
    let table = convergence_experiment(&marginal, mu, &ns, a.eps, a.replicates, RngState::new(seed, 0))?;
    let mut t = Table::new(vec![
        "n",
        "prob_exceed",
        "eps",
        "max_spacing_mean",
        "max_spacing_p95",
        "replicates",
        "seed",
    ]);
    for r in &table.rows {
        t.push(vec![
            Cell::Int(r.n as u64),
            Cell::Float(r.prob_exceed),
            Cell::Float(r.eps),
            Cell::Float(r.max_spacing_mean),
            Cell::Float(r.max_spacing_p95),
            Cell::Int(r.replicates as u64),
            Cell::Int(table.seed),
        ]);
    }
    Ok(Outcome::table(t))
}
