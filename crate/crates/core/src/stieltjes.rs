//! Stieltjes transforms `S(F, z) = ∫ F(dx) / (z − x)`, their derivatives,
//! and residual checks of the product identities linking the transform of a
//! randomly weighted average to those of its atoms.
//!
//! Derivatives are never obtained by differencing: `S^{(m−1)}(F, z)` is the
//! integral `(−1)^{m−1} (m−1)! ∫ (z − x)^{−m} F(dx)`, evaluated directly.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atoms::WeightScheme;
use crate::dists::{Dist, Kind};
use crate::error::{Error, Result};
use crate::quad::{adaptive_gk, tanh_sinh, QuadOptions};
use crate::series::factorial;

/// Points closer than this to the support are rejected.
pub const MIN_DISTANCE: f64 = 1e-6;

fn check_order(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("derivative order m must be at least 1".into()));
    }
    Ok(())
}

fn signed_factorial(m: u32) -> f64 {
    let f = factorial(m as usize - 1);
    if m % 2 == 1 {
        f
    } else {
        -f
    }
}

/// `∫ (z − x)^{−m} F(dx)` for a catalog distribution.
pub fn resolvent_moment(dist: &Dist, z: Complex64, m: u32) -> Result<Complex64> {
    check_order(m)?;
    let distance = dist.support().distance(z);
    if distance < MIN_DISTANCE {
        return Err(Error::Domain {
            re: z.re,
            im: z.im,
            distance,
        });
    }
    let m = m as i32;
    let kernel = |x: f64| (z - x).powi(-m);
    let opts = QuadOptions::default();
    let gk = |f: &dyn Fn(f64) -> Complex64, a: f64, b: f64| -> Result<Complex64> {
        adaptive_gk(f, a, b, opts).map(|r| r.value)
    };
    match dist.kind() {
        Kind::PointMass { x } => Ok(kernel(x)),
        Kind::Semicircle => sine_scale(z, m, 0.5, 2.0 / PI),
        Kind::PowerSemicircle { p, normalizer } => sine_scale(z, m, p, normalizer),
        // probability scale: the quantile absorbs endpoint singularities
        _ => gk(&|u| kernel(dist.quantile(u)), 0.0, 1.0),
    }
}

/// `∫_{−π/2}^{π/2} c cos^{2p+1}(t) (z − sin t)^{−m} dt`, the power-semicircle
/// integral after `x = sin t`.
fn sine_scale(z: Complex64, m: i32, p: f64, c: f64) -> Result<Complex64> {
    let power = 2.0 * p + 1.0;
    if power >= 0.0 {
        let f = |t: f64| (z - t.sin()).powi(-m) * (c * t.cos().powf(power));
        return adaptive_gk(f, -FRAC_PI_2, FRAC_PI_2, QuadOptions::default()).map(|r| r.value);
    }
    // weight blows up at ±π/2; cos t is the sine of the endpoint distance
    let part = |take_im: bool| {
        tanh_sinh(
            |t, da, db| {
                let v = (z - t.sin()).powi(-m) * (c * da.min(db).sin().powf(power));
                if take_im {
                    v.im
                } else {
                    v.re
                }
            },
            -FRAC_PI_2,
            FRAC_PI_2,
            1e-12,
        )
    };
    Ok(Complex64::new(part(false)?, part(true)?))
}

/// `S^{(m−1)}(F, z)`, the `(m−1)`-th derivative of the Stieltjes transform.
pub fn transform_deriv(dist: &Dist, z: Complex64, m: u32) -> Result<Complex64> {
    Ok(resolvent_moment(dist, z, m)? * signed_factorial(m))
}

/// A law given either analytically or by samples.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Analytic(Dist),
    Empirical(Vec<f64>),
}

/// A transform value with the standard error of a sample average, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub std_error: Option<f64>,
}

impl Law {
    /// `∫ (z − x)^{−m} dF` for this law.
    pub fn resolvent_moment(&self, z: Complex64, m: u32) -> Result<Estimate> {
        match self {
            Law::Analytic(d) => Ok(Estimate {
                value: resolvent_moment(d, z, m)?,
                std_error: None,
            }),
            Law::Empirical(samples) => empirical_moment(samples, z, m),
        }
    }

    /// `S^{(m−1)}` of this law.
    pub fn transform_deriv(&self, z: Complex64, m: u32) -> Result<Estimate> {
        let e = self.resolvent_moment(z, m)?;
        let s = signed_factorial(m);
        Ok(Estimate {
            value: e.value * s,
            std_error: e.std_error.map(|v| v * s.abs()),
        })
    }
}

fn empirical_moment(samples: &[f64], z: Complex64, m: u32) -> Result<Estimate> {
    check_order(m)?;
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "an empirical law needs at least two samples".into(),
        ));
    }
    let m = m as i32;
    let n = samples.len() as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let (mut sq_re, mut sq_im) = (0.0, 0.0);
    for &s in samples {
        let d = z - s;
        if d.norm() < MIN_DISTANCE {
            return Err(Error::Domain {
                re: z.re,
                im: z.im,
                distance: d.norm(),
            });
        }
        let v = d.powi(-m);
        sum += v;
        sq_re += v.re * v.re;
        sq_im += v.im * v.im;
    }
    let mean = sum / n;
    let var_re = ((sq_re - n * mean.re * mean.re) / (n - 1.0)).max(0.0);
    let var_im = ((sq_im - n * mean.im * mean.im) / (n - 1.0)).max(0.0);
    Ok(Estimate {
        value: mean,
        std_error: Some(((var_re + var_im) / n).sqrt()),
    })
}

/// Which identity a [`ResidualReport`] checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Identity {
    /// `∫ (z−x)^{−n*} dF_S = Π_i ∫ (z−x)^{−m_i} dF_i`, in derivative form.
    Theorem1,
    /// `B(n₁, n₂) S^{(n₁+n₂−1)}(F_Z) = −S^{(n₁−1)}(F_1) S^{(n₂−1)}(F_2)`.
    Remark1,
    /// `−S′(F_Z) = S(F_X)²` for two equally weighted i.i.d. atoms.
    Square,
}

impl std::fmt::Display for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Identity::Theorem1 => "theorem1",
            Identity::Remark1 => "remark1",
            Identity::Square => "square",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub z_re: f64,
    pub z_im: f64,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub abs_res: f64,
    pub rel_res: f64,
    /// Standard error of the left side when it comes from samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

impl ResidualPoint {
    pub fn new(z: Complex64, lhs: Complex64, rhs: Complex64, se: Option<f64>) -> Self {
        let abs_res = (lhs - rhs).norm();
        let rel_res = abs_res / lhs.norm().max(rhs.norm()).max(1e-300);
        Self {
            z_re: z.re,
            z_im: z.im,
            lhs_re: lhs.re,
            lhs_im: lhs.im,
            rhs_re: rhs.re,
            rhs_im: rhs.im,
            abs_res,
            rel_res,
            se,
        }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: Identity,
    pub points: Vec<ResidualPoint>,
}

impl ResidualReport {
    pub fn max_rel(&self) -> f64 {
        self.points.iter().map(|p| p.rel_res).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.abs_res).fold(0.0, f64::max)
    }

    /// Largest `|lhs − rhs| / se` over points carrying a standard error.
    pub fn max_z_score(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.se.map(|se| p.abs_res / se))
            .reduce(f64::max)
    }
}

/// Residuals of the product identity
/// `[(−1)^{n*−1}/(n*−1)!] S^{(n*−1)}(F, z) = Π_i [(−1)^{m_i−1}/(m_i−1)!] S^{(m_i−1)}(F_i, z)`.
pub fn theorem1_residual(
    scheme: &WeightScheme,
    marginals: &[Dist],
    mixture: &Law,
    z_points: &[Complex64],
) -> Result<ResidualReport> {
    if marginals.len() != scheme.len() {
        return Err(Error::LengthMismatch {
            what: "marginals vs multiplicities",
            left: marginals.len(),
            right: scheme.len(),
        });
    }
    let points = z_points
        .iter()
        .map(|&z| {
            // the normalized derivatives are exactly the resolvent moments
            let lhs = mixture.resolvent_moment(z, scheme.nstar())?;
            let mut rhs = Complex64::new(1.0, 0.0);
            for (d, &m) in marginals.iter().zip(scheme.multiplicities()) {
                rhs *= resolvent_moment(d, z, m)?;
            }
            Ok(ResidualPoint::new(z, lhs.value, rhs, lhs.std_error))
        })
        .collect::<Result<_>>()?;
    Ok(ResidualReport {
        identity: Identity::Theorem1,
        points,
    })
}

/// Euler Beta function `Γ(a)Γ(b)/Γ(a+b)` at positive integers.
pub fn beta_int(a: u32, b: u32) -> f64 {
    factorial(a as usize - 1) * factorial(b as usize - 1) / factorial((a + b) as usize - 1)
}

/// Residuals of `B(n₁, n₂) S^{(n₁+n₂−1)}(F_Z, z) = −S^{(n₁−1)}(F_1, z) S^{(n₂−1)}(F_2, z)`.
pub fn remark1_residual(
    n1: u32,
    n2: u32,
    fx1: &Dist,
    fx2: &Dist,
    fz: &Law,
    z_points: &[Complex64],
) -> Result<ResidualReport> {
    check_order(n1)?;
    check_order(n2)?;
    let b = beta_int(n1, n2);
    let points = z_points
        .iter()
        .map(|&z| {
            let s = fz.transform_deriv(z, n1 + n2)?;
            let lhs = s.value * b;
            let rhs = -(transform_deriv(fx1, z, n1)? * transform_deriv(fx2, z, n2)?);
            Ok(ResidualPoint::new(z, lhs, rhs, s.std_error.map(|e| e * b)))
        })
        .collect::<Result<_>>()?;
    Ok(ResidualReport {
        identity: Identity::Remark1,
        points,
    })
}

/// Residuals of `−S′(F_Z, z) = S(F_X, z)²`.
pub fn square_identity_residual(fx: &Dist, fz: &Law, z_points: &[Complex64]) -> Result<ResidualReport> {
    let points = z_points
        .iter()
        .map(|&z| {
            let s = fz.transform_deriv(z, 2)?;
            let t = transform_deriv(fx, z, 1)?;
            Ok(ResidualPoint::new(z, -s.value, t * t, s.std_error))
        })
        .collect::<Result<_>>()?;
    Ok(ResidualReport {
        identity: Identity::Square,
        points,
    })
}

/// Laws whose transform has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    Arcsin,
    Semicircle,
}

/// `√(z−1)·√(z+1)` with principal roots: the branch of `√(z²−1)` that
/// behaves like `z` at infinity, cut along `[−1, 1]`.
fn sqrt_z2_minus_1(z: Complex64) -> Complex64 {
    (z - 1.0).sqrt() * (z + 1.0).sqrt()
}

/// Closed-form transform: arcsin `1/√(z²−1)`, semicircle `2(z − √(z²−1))`.
pub fn closed_form_transform(name: ClosedForm, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re.abs() <= 1.0 {
        return Err(Error::Domain {
            re: z.re,
            im: z.im,
            distance: 0.0,
        });
    }
    let root = sqrt_z2_minus_1(z);
    Ok(match name {
        ClosedForm::Arcsin => 1.0 / root,
        ClosedForm::Semicircle => 2.0 * (z - root),
    })
}
