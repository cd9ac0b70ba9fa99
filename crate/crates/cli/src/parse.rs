//! Text syntaxes shared by the commands.

use num_complex::Complex64;
use rwa_core::dists::parse_marginals;
use rwa_core::{Dist, WeightScheme};

use crate::CliError;

/// A `z` grid: `lo:hi:steps` (inclusive, evenly spaced) or an explicit
/// comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    let number = |tok: &str| {
        tok.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::Usage(format!("grid: bad number `{}`", tok.trim())))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!("grid `{text}` is not lo:hi:steps")));
        }
        let (lo, hi) = (number(parts[0])?, number(parts[1])?);
        let steps: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("grid: bad step count `{}`", parts[2].trim())))?;
        if steps == 0 {
            return Err(CliError::Usage("grid: step count must be positive".into()));
        }
        if steps == 1 {
            if lo != hi {
                return Err(CliError::Usage(format!(
                    "grid `{text}`: a single step needs lo = hi"
                )));
            }
            return Ok(vec![lo]);
        }
        if !(lo < hi) {
            return Err(CliError::Usage(format!("grid `{text}`: need lo < hi")));
        }
        let last = (steps - 1) as f64;
        return Ok((0..steps)
            .map(|k| if k + 1 == steps { hi } else { lo + (hi - lo) * k as f64 / last })
            .collect());
    }
    if text.is_empty() {
        return Err(CliError::Usage("grid is empty".into()));
    }
    text.split(',').map(number).collect()
}

/// Comma-separated positive integers.
pub fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{what}: bad integer `{}`", t.trim())))
        })
        .collect()
}

pub fn parse_scheme(text: &str) -> Result<WeightScheme, CliError> {
    text.parse().map_err(|e: rwa_core::Error| CliError::Usage(e.to_string()))
}

/// Marginals for a scheme; a single entry is repeated for every atom.
pub fn parse_marginals_for(text: &str, scheme: &WeightScheme) -> Result<Vec<Dist>, CliError> {
    let mut m = parse_marginals(text).map_err(|e| CliError::Usage(e.to_string()))?;
    if m.len() == 1 && scheme.len() > 1 {
        m = vec![m[0]; scheme.len()];
    }
    if m.len() != scheme.len() {
        return Err(CliError::Usage(format!(
            "{} marginals given for a scheme of length {}",
            m.len(),
            scheme.len()
        )));
    }
    Ok(m)
}

pub fn parse_dist(text: &str) -> Result<Dist, CliError> {
    text.parse().map_err(|e: rwa_core::Error| CliError::Usage(e.to_string()))
}

/// A complex point from JSON: a number, `[re, im]`, or `{"re": .., "im": ..}`.
pub fn complex_from_json(v: &serde_json::Value) -> Result<Complex64, CliError> {
    let bad = || CliError::Usage(format!("bad z point `{v}`; use [re, im]"));
    let num = |x: &serde_json::Value| x.as_f64().ok_or_else(bad);
    match v {
        serde_json::Value::Number(_) => Ok(Complex64::new(num(v)?, 0.0)),
        serde_json::Value::Array(a) if a.len() == 2 => Ok(Complex64::new(num(&a[0])?, num(&a[1])?)),
        serde_json::Value::Object(o) => Ok(Complex64::new(
            num(o.get("re").ok_or_else(bad)?)?,
            o.get("im").map(num).transpose()?.unwrap_or(0.0),
        )),
        _ => Err(bad()),
    }
}
