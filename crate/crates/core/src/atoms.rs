//! Weight schemes and conditioning atom configurations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance under which two atoms are merged.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

/// Block sizes `(m_1, …, m_n)` of the selected order-statistic cuts.
///
/// The induced weights are `Dirichlet(m_1, …, m_n)`; `nstar = Σ m_j` is the
/// number of uniform spacings being grouped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct WeightScheme {
    multiplicities: Vec<u32>,
    nstar: u32,
}

impl WeightScheme {
    pub fn new(multiplicities: Vec<u32>) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::InvalidScheme("empty multiplicity vector".into()));
        }
        if let Some(pos) = multiplicities.iter().position(|&m| m == 0) {
            return Err(Error::InvalidScheme(format!(
                "multiplicity at position {} is zero",
                pos + 1
            )));
        }
        let nstar = multiplicities.iter().sum();
        Ok(Self {
            multiplicities,
            nstar,
        })
    }

    /// Scheme with every multiplicity equal to one (plain uniform spacings).
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    /// Builds the scheme from cut indices `k_1 < … < k_{n-1}` in `[1, nstar-1]`,
    /// with `k_0 = 0` and `k_n = nstar`.
    pub fn from_indices(nstar: u32, k: &[u32]) -> Result<Self> {
        if nstar == 0 {
            return Err(Error::InvalidScheme("nstar must be positive".into()));
        }
        let mut prev = 0;
        let mut m = Vec::with_capacity(k.len() + 1);
        for &idx in k {
            if idx == 0 || idx >= nstar {
                return Err(Error::InvalidScheme(format!(
                    "index {idx} outside [1, {}]",
                    nstar - 1
                )));
            }
            if idx <= prev {
                return Err(Error::InvalidScheme(format!(
                    "indices not strictly increasing at {idx}"
                )));
            }
            m.push(idx - prev);
            prev = idx;
        }
        m.push(nstar - prev);
        Self::new(m)
    }

    /// Cut indices `k_1, …, k_{n-1}` (partial sums of the multiplicities).
    pub fn indices(&self) -> Vec<u32> {
        let mut acc = 0;
        self.multiplicities[..self.len() - 1]
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect()
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn nstar(&self) -> u32 {
        self.nstar
    }

    pub fn len(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<u32>> for WeightScheme {
    type Error = Error;

    fn try_from(m: Vec<u32>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<WeightScheme> for Vec<u32> {
    fn from(s: WeightScheme) -> Self {
        s.multiplicities
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.multiplicities.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    /// Comma-separated multiplicities, e.g. `3,1,1`.
    fn from_str(s: &str) -> Result<Self> {
        let m = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidScheme(format!("bad multiplicity `{}`", tok.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m)
    }
}

/// Distinct atoms `x_j` paired with the multiplicities of a weight scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomConfig {
    atoms: Vec<f64>,
    scheme: WeightScheme,
}

impl AtomConfig {
    /// Validates that the atoms are pairwise distinct and match the scheme.
    pub fn new(atoms: Vec<f64>, scheme: WeightScheme) -> Result<Self> {
        if atoms.len() != scheme.len() {
            return Err(Error::LengthMismatch {
                what: "atoms vs multiplicities",
                left: atoms.len(),
                right: scheme.len(),
            });
        }
        for (i, &a) in atoms.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("atom {a} is not finite")));
            }
            if let Some(&b) = atoms[..i].iter().find(|&&b| b == a) {
                return Err(Error::TiedAtoms { a: b, b: a });
            }
        }
        Ok(Self { atoms, scheme })
    }

    /// Merges atoms closer than `tol` (single linkage) into one atom carrying
    /// the summed multiplicity, placed at the multiplicity-weighted mean.
    /// Cluster order follows first appearance in `x`.
    pub fn normalize(x: &[f64], scheme: &WeightScheme, tol: f64) -> Result<Self> {
        if x.len() != scheme.len() {
            return Err(Error::LengthMismatch {
                what: "atoms vs multiplicities",
                left: x.len(),
                right: scheme.len(),
            });
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("atom {bad} is not finite")));
        }
        let m = scheme.multiplicities();
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

        // cluster id per original index
        let mut cluster = vec![0usize; x.len()];
        let mut next = 0;
        for w in 0..order.len() {
            if w > 0 && x[order[w]] - x[order[w - 1]] > tol {
                next += 1;
            }
            cluster[order[w]] = next;
        }
        if next + 1 == x.len() {
            return Self::new(x.to_vec(), scheme.clone());
        }

        let mut slot = vec![usize::MAX; next + 1];
        let mut sums: Vec<(f64, u32)> = Vec::new();
        for (i, &c) in cluster.iter().enumerate() {
            if slot[c] == usize::MAX {
                slot[c] = sums.len();
                sums.push((0.0, 0));
            }
            let s = &mut sums[slot[c]];
            s.0 += m[i] as f64 * x[i];
            s.1 += m[i];
        }
        let atoms = sums.iter().map(|&(w, k)| w / k as f64).collect();
        let mult = sums.iter().map(|&(_, k)| k).collect();
        Self::new(atoms, WeightScheme::new(mult)?)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn multiplicities(&self) -> &[u32] {
        self.scheme.multiplicities()
    }

    pub fn nstar(&self) -> u32 {
        self.scheme.nstar()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.atoms.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.atoms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest pairwise distance between atoms (`inf` for a single atom).
    pub fn min_gap(&self) -> f64 {
        let mut sorted = self.atoms.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// The configuration `a x_j + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        Self::new(
            self.atoms.iter().map(|x| a * x + b).collect(),
            self.scheme.clone(),
        )
    }
}

impl fmt::Display for AtomConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .zip(self.multiplicities())
            .map(|(x, m)| format!("{x}:{m}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Parses the textual `x:m` list, e.g. `3:1,2:1,1:1`, into raw atoms and a
/// scheme. Ties are left in place; pass the result through
/// [`AtomConfig::normalize`].
pub fn parse_atoms(text: &str) -> Result<(Vec<f64>, WeightScheme)> {
    let mut xs = Vec::new();
    let mut ms = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        let (x, m) = tok
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("atom token `{tok}` is not x:m")))?;
        let x: f64 = x
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("atom value in `{tok}`")))?;
        let m: u32 = m
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("multiplicity in `{tok}`")))?;
        xs.push(x);
        ms.push(m);
    }
    Ok((xs, WeightScheme::new(ms)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scheme_from_indices_examples() {
        let s = WeightScheme::from_indices(3, &[1, 2]).unwrap();
        assert_eq!(s.multiplicities(), &[1, 1, 1]);
        let s = WeightScheme::from_indices(5, &[3, 4]).unwrap();
        assert_eq!(s.multiplicities(), &[3, 1, 1]);
        let s = WeightScheme::from_indices(2, &[1]).unwrap();
        assert_eq!(s.multiplicities(), &[1, 1]);
        assert_eq!(s.nstar(), 2);
    }

    #[test]
    fn scheme_from_indices_errors() {
        assert!(WeightScheme::from_indices(5, &[3, 3]).is_err());
        assert!(WeightScheme::from_indices(5, &[4, 2]).is_err());
        assert!(WeightScheme::from_indices(5, &[0, 2]).is_err());
        assert!(WeightScheme::from_indices(5, &[2, 5]).is_err());
        assert!(WeightScheme::new(vec![1, 0]).is_err());
        assert!(WeightScheme::new(vec![]).is_err());
    }

    #[test]
    fn normalize_merges_ties() {
        let s = WeightScheme::uniform(3).unwrap();
        let cfg = AtomConfig::normalize(&[1.0, 1.0, 0.0], &s, 1e-12).unwrap();
        assert_eq!(cfg.atoms(), &[1.0, 0.0]);
        assert_eq!(cfg.multiplicities(), &[2, 1]);

        let cfg = AtomConfig::normalize(&[3.0, 2.0, 1.0], &s, 1e-12).unwrap();
        assert_eq!(cfg.atoms(), &[3.0, 2.0, 1.0]);
        assert_eq!(cfg.multiplicities(), &[1, 1, 1]);

        let s2 = WeightScheme::uniform(2).unwrap();
        let cfg = AtomConfig::normalize(&[0.0, 0.0], &s2, 1e-12).unwrap();
        assert_eq!(cfg.atoms(), &[0.0]);
        assert_eq!(cfg.multiplicities(), &[2]);
    }

    #[test]
    fn normalize_uses_weighted_mean() {
        let s = WeightScheme::new(vec![3, 1, 2]).unwrap();
        let cfg = AtomConfig::normalize(&[1.0, 1.0 + 4e-4, 5.0], &s, 1e-3).unwrap();
        assert_eq!(cfg.multiplicities(), &[4, 2]);
        assert!((cfg.atoms()[0] - (1.0 + 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn new_rejects_ties_and_mismatch() {
        let s = WeightScheme::uniform(2).unwrap();
        assert!(matches!(
            AtomConfig::new(vec![1.0, 1.0], s.clone()),
            Err(Error::TiedAtoms { .. })
        ));
        assert!(matches!(
            AtomConfig::new(vec![1.0], s),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn parses_atom_syntax() {
        let (x, s) = parse_atoms("3:1, 2:1,1:1").unwrap();
        assert_eq!(x, vec![3.0, 2.0, 1.0]);
        assert_eq!(s.multiplicities(), &[1, 1, 1]);
        let (x, s) = parse_atoms("-0.5:3,1e-1:2").unwrap();
        assert_eq!(x, vec![-0.5, 0.1]);
        assert_eq!(s.nstar(), 5);
        assert!(parse_atoms("3").is_err());
        assert!(parse_atoms("a:1").is_err());
        assert!(parse_atoms("1:0").is_err());
        assert_eq!("3,1,1".parse::<WeightScheme>().unwrap().nstar(), 5);
    }

    proptest! {
        #[test]
        fn indices_roundtrip(m in prop::collection::vec(1u32..5, 1..6)) {
            let s = WeightScheme::new(m).unwrap();
            let back = WeightScheme::from_indices(s.nstar(), &s.indices()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn normalize_is_idempotent_and_preserves_nstar(
            x in prop::collection::vec(-3i32..3, 1..7),
            tol in prop::sample::select(vec![1e-12, 0.5, 1.0, 1.5]),
        ) {
            let xs: Vec<f64> = x.iter().map(|&v| v as f64 * 0.5).collect();
            let s = WeightScheme::new((0..xs.len() as u32).map(|i| i % 3 + 1).collect()).unwrap();
            let once = AtomConfig::normalize(&xs, &s, tol).unwrap();
            prop_assert_eq!(once.nstar(), s.nstar());
            prop_assert!(once.len() == 1 || once.min_gap() > tol);
            let twice = AtomConfig::normalize(once.atoms(), once.scheme(), tol).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}
