//! Distribution catalog: arcsin, semicircle, power semicircle, power,
//! uniform, point mass, Cauchy and exponential laws.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::quad::tanh_sinh;

/// Support `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn is_compact(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_whole_line(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    /// Euclidean distance from a complex point to the support segment.
    pub fn distance(&self, z: Complex64) -> f64 {
        let clamped = z.re.clamp(self.lo, self.hi);
        Complex64::new(z.re - clamped, z.im).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kind {
    Arcsin,
    Semicircle,
    PowerSemicircle { p: f64, normalizer: f64 },
    Power { theta: f64 },
    Uniform { a: f64, b: f64 },
    PointMass { x: f64 },
    Cauchy { location: f64, scale: f64 },
    Exponential { rate: f64 },
}

/// A catalog distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dist(Kind);

impl Dist {
    /// Density `1/(π√(1−x²))` on `(−1, 1)`.
    pub fn arcsin() -> Self {
        Dist(Kind::Arcsin)
    }

    /// Density `(2/π)√(1−x²)` on `[−1, 1]`.
    pub fn semicircle() -> Self {
        Dist(Kind::Semicircle)
    }

    /// Density `c_p (1−x²)^p` on `[−1, 1]` for `p > −1`.
    ///
    /// `c_p` is obtained by quadrature; [`power_semicircle_normalizer_closed`]
    /// is the closed-form cross-check.
    pub fn power_semicircle(p: f64) -> Result<Self> {
        if !(p > -1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power semicircle exponent must exceed -1, got {p}"
            )));
        }
        let normalizer = 1.0 / power_semicircle_mass(p)?;
        Ok(Dist(Kind::PowerSemicircle { p, normalizer }))
    }

    /// Density `θ v^{θ−1}` on `[0, 1]`.
    pub fn power(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power parameter must be positive, got {theta}"
            )));
        }
        Ok(Dist(Kind::Power { theta }))
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "uniform needs finite a < b, got a={a}, b={b}"
            )));
        }
        Ok(Dist(Kind::Uniform { a, b }))
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("point mass at {x}")));
        }
        Ok(Dist(Kind::PointMass { x }))
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !location.is_finite() || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cauchy needs finite location and positive scale, got {location}, {scale}"
            )));
        }
        Ok(Dist(Kind::Cauchy { location, scale }))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Dist(Kind::Exponential { rate }))
    }

    pub(crate) fn kind(&self) -> Kind {
        self.0
    }

    pub fn support(&self) -> Support {
        let (lo, hi) = match self.0 {
            Kind::Arcsin | Kind::Semicircle | Kind::PowerSemicircle { .. } => (-1.0, 1.0),
            Kind::Power { .. } => (0.0, 1.0),
            Kind::Uniform { a, b } => (a, b),
            Kind::PointMass { x } => (x, x),
            Kind::Cauchy { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Kind::Exponential { .. } => (0.0, f64::INFINITY),
        };
        Support { lo, hi }
    }

    /// Whether the density is unbounded at the (lower, upper) endpoint.
    pub fn endpoint_singularity(&self) -> (bool, bool) {
        match self.0 {
            Kind::Arcsin => (true, true),
            Kind::PowerSemicircle { p, .. } if p < 0.0 => (true, true),
            Kind::Power { theta } if theta < 1.0 => (true, false),
            _ => (false, false),
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self.0, Kind::PointMass { .. })
    }

    /// Mean, or `None` when `E|X|` is infinite.
    pub fn mean(&self) -> Option<f64> {
        match self.0 {
            Kind::Arcsin | Kind::Semicircle | Kind::PowerSemicircle { .. } => Some(0.0),
            Kind::Power { theta } => Some(theta / (theta + 1.0)),
            Kind::Uniform { a, b } => Some(0.5 * (a + b)),
            Kind::PointMass { x } => Some(x),
            Kind::Cauchy { .. } => None,
            Kind::Exponential { rate } => Some(1.0 / rate),
        }
    }

    /// The normalizer of a power-semicircle law (`None` for other members).
    pub fn normalizer(&self) -> Option<f64> {
        match self.0 {
            Kind::PowerSemicircle { normalizer, .. } => Some(normalizer),
            _ => None,
        }
    }

    /// Density; for a point mass this is zero everywhere (no density).
    pub fn pdf(&self, x: f64) -> f64 {
        match self.0 {
            Kind::Arcsin => {
                if x.abs() < 1.0 {
                    1.0 / (PI * ((1.0 - x) * (1.0 + x)).sqrt())
                } else {
                    0.0
                }
            }
            Kind::Semicircle => {
                if x.abs() <= 1.0 {
                    2.0 / PI * ((1.0 - x) * (1.0 + x)).sqrt()
                } else {
                    0.0
                }
            }
            Kind::PowerSemicircle { p, normalizer } => {
                if x.abs() < 1.0 || (x.abs() == 1.0 && p >= 0.0) {
                    normalizer * ((1.0 - x) * (1.0 + x)).powf(p)
                } else {
                    0.0
                }
            }
            Kind::Power { theta } => {
                if (0.0..=1.0).contains(&x) && !(x == 0.0 && theta < 1.0) {
                    theta * x.powf(theta - 1.0)
                } else {
                    0.0
                }
            }
            Kind::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Kind::PointMass { .. } => 0.0,
            Kind::Cauchy { location, scale } => {
                let u = (x - location) / scale;
                1.0 / (PI * scale * (1.0 + u * u))
            }
            Kind::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.0 {
            Kind::Arcsin => {
                if x <= -1.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    0.5 + x.asin() / PI
                }
            }
            Kind::Semicircle => {
                if x <= -1.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    0.5 + (x * ((1.0 - x) * (1.0 + x)).sqrt() + x.asin()) / PI
                }
            }
            Kind::PowerSemicircle { p, .. } => {
                if x <= -1.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else if x <= 0.0 {
                    statrs::function::beta::beta_reg(p + 1.0, p + 1.0, 0.5 * (1.0 + x))
                } else {
                    // upper half by symmetry keeps tail accuracy near +1
                    1.0 - statrs::function::beta::beta_reg(p + 1.0, p + 1.0, 0.5 * (1.0 - x))
                }
            }
            Kind::Power { theta } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    x.powf(theta)
                }
            }
            Kind::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Kind::PointMass { x: at } => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Cauchy { location, scale } => 0.5 + ((x - location) / scale).atan() / PI,
            Kind::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
        }
    }

    /// Left limit `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self.0 {
            Kind::PointMass { x: at } => {
                if x > at {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(x),
        }
    }

    /// Inverse CDF on `(0, 1)`; endpoints map to the support endpoints.
    pub fn quantile(&self, u: f64) -> f64 {
        match self.0 {
            Kind::Arcsin => (PI * (u - 0.5)).sin(),
            Kind::Semicircle | Kind::PowerSemicircle { .. } => self.invert_symmetric(u),
            Kind::Power { theta } => u.powf(1.0 / theta),
            Kind::Uniform { a, b } => a + (b - a) * u,
            Kind::PointMass { x } => x,
            Kind::Cauchy { location, scale } => location + scale * (PI * (u - 0.5)).tan(),
            Kind::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }

    /// Safeguarded Newton iteration on `[−1, 1]`.
    fn invert_symmetric(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return -1.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        if u > 0.5 {
            return -self.invert_symmetric(1.0 - u);
        }
        let (mut lo, mut hi) = (-1.0_f64, 0.0_f64);
        // arcsin quantile is a decent starting point for every member
        let mut x = (PI * (u - 0.5)).sin().clamp(lo, hi);
        for _ in 0..200 {
            let f = self.cdf(x) - u;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-16 * x.abs().max(1e-300) || hi - lo <= f64::EPSILON * 2.0 {
                return next;
            }
            x = next;
        }
        x
    }

    /// Draws one variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.0 {
            Kind::Arcsin => (PI * (rng.random::<f64>() - 0.5)).sin(),
            Kind::Semicircle => loop {
                let x = 2.0 * rng.random::<f64>() - 1.0;
                let v: f64 = rng.random();
                if v * v <= (1.0 - x) * (1.0 + x) {
                    break x;
                }
            },
            Kind::PowerSemicircle { p, .. } => {
                let beta = Beta::new(p + 1.0, p + 1.0).expect("p > -1 checked at construction");
                2.0 * beta.sample(rng) - 1.0
            }
            Kind::Power { theta } => rng.random::<f64>().powf(1.0 / theta),
            Kind::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Kind::PointMass { x } => x,
            Kind::Cauchy { .. } | Kind::Exponential { .. } => self.quantile(rng.random::<f64>()),
        }
    }
}

/// `∫_{−1}^{1} (1−x²)^p dx`, computed as `∫ cos^{2p+1} t dt` over `[−π/2, π/2]`.
fn power_semicircle_mass(p: f64) -> Result<f64> {
    tanh_sinh(
        |_, da, db| da.min(db).sin().powf(2.0 * p + 1.0),
        -FRAC_PI_2,
        FRAC_PI_2,
        1e-14,
    )
}

/// `1 / B(1/2, p+1)`, the closed form of the power-semicircle normalizer.
pub fn power_semicircle_normalizer_closed(p: f64) -> f64 {
    1.0 / statrs::function::beta::beta(0.5, p + 1.0)
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Kind::Arcsin => write!(f, "arcsin"),
            Kind::Semicircle => write!(f, "semicircle"),
            Kind::PowerSemicircle { p, .. } => write!(f, "psc:{p}"),
            Kind::Power { theta } => write!(f, "power:{theta}"),
            Kind::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            Kind::PointMass { x } => write!(f, "point:{x}"),
            Kind::Cauchy { location, scale } => write!(f, "cauchy:{location},{scale}"),
            Kind::Exponential { rate } => write!(f, "exp:{rate}"),
        }
    }
}

impl FromStr for Dist {
    type Err = Error;

    /// `arcsin`, `semicircle`, `psc:p`, `uniform:a,b`, `power:theta`,
    /// `cauchy:x0,g`, `point:x`, `exp:rate`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s, None),
        };
        let nums = |want: usize| -> Result<Vec<f64>> {
            let a = args.ok_or_else(|| {
                Error::InvalidParameter(format!("`{s}`: `{name}` needs {want} parameter(s)"))
            })?;
            let v = a
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("`{s}`: bad number `{}`", t.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            if v.len() != want {
                return Err(Error::InvalidParameter(format!(
                    "`{s}`: `{name}` needs {want} parameter(s), got {}",
                    v.len()
                )));
            }
            Ok(v)
        };
        match name {
            "arcsin" if args.is_none() => Ok(Dist::arcsin()),
            "semicircle" if args.is_none() => Ok(Dist::semicircle()),
            "psc" => Dist::power_semicircle(nums(1)?[0]),
            "uniform" => {
                let v = nums(2)?;
                Dist::uniform(v[0], v[1])
            }
            "power" => Dist::power(nums(1)?[0]),
            "cauchy" => {
                let v = nums(2)?;
                Dist::cauchy(v[0], v[1])
            }
            "point" => Dist::point_mass(nums(1)?[0]),
            "exp" => Dist::exponential(nums(1)?[0]),
            _ => Err(Error::InvalidParameter(format!("unknown distribution `{s}`"))),
        }
    }
}

/// Parses a marginal list such as `arcsin,uniform:-1,1,point:0`.
///
/// Entries are separated by `;` when one is present, otherwise by `,`; a bare
/// numeric token continues the parameter list of the entry before it.
pub fn parse_marginals(text: &str) -> Result<Vec<Dist>> {
    let entries: Vec<String> = if text.contains(';') {
        text.split(';').map(|s| s.trim().to_string()).collect()
    } else {
        let mut out: Vec<String> = Vec::new();
        for tok in text.split(',') {
            let tok = tok.trim();
            match out.last_mut() {
                Some(prev) if tok.parse::<f64>().is_ok() => {
                    prev.push(',');
                    prev.push_str(tok);
                }
                _ => out.push(tok.to_string()),
            }
        }
        out
    };
    entries.iter().map(|e| e.parse()).collect()
}
