//! The two Gauss hypergeometric families that drive every coverage formula:
//!
//! * `₂F₁([1,−δ]; 1−δ; −x) = 1 + x^δ ∫₀ˣ δ / ((1+y) y^δ) dy`
//! * `₂F₁([1, δ]; 1+δ; −x) = ∫₀¹ δ y^(δ−1) / (1+x y) dy`
//!
//! Both integrals are reduced to bounded integrands of the form
//! `1 / (1 + c·u^p)` on subintervals of `[0, 1]` by power substitutions
//! (and `y ↦ 1/y` for the part beyond `y = 1`), which keeps the adaptive rule
//! accurate from `x = 0` up to the `2^K`-sized arguments seen at tiny `t`.

mod quadrature;
mod series;

pub use quadrature::{integrate, integrate_with_breaks, try_integrate_with_breaks, QuadratureSpec};
pub use series::hyp2f1_series_oracle;

use crate::error::NumericError;

/// `δ = 2/α`, restricted to `(0, 1)` (path-loss exponent `α > 2`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Delta(f64);

impl Delta {
    pub fn new(delta: f64) -> Result<Self, NumericError> {
        if delta > 0.0 && delta < 1.0 {
            Ok(Self(delta))
        } else {
            Err(NumericError::Domain(format!(
                "delta must lie in (0, 1), got {delta}"
            )))
        }
    }

    pub fn from_alpha(alpha: f64) -> Result<Self, NumericError> {
        if alpha > 2.0 && alpha.is_finite() {
            Self::new(2.0 / alpha)
        } else {
            Err(NumericError::Domain(format!(
                "path-loss exponent must be finite and > 2, got {alpha}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

fn check_argument(x: f64) -> Result<(), NumericError> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(NumericError::Domain(format!(
            "argument must be non-negative, got {x}"
        )))
    }
}

/// `∫_a^b du / (1 + c·u^p)` for `0 ≤ a ≤ b ≤ 1`.
fn rational_power_kernel(
    p: f64,
    c: f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericError> {
    integrate(|u: f64| 1.0 / (1.0 + c * u.powf(p)), a, b, spec)
}

/// `∫₀ˣ δ y^(−δ) / (1+y) dy`.
fn neg_family_integral(delta: f64, x: f64, spec: &QuadratureSpec) -> Result<f64, NumericError> {
    let d = delta;
    let lead = d / (1.0 - d);
    let p_low = 1.0 / (1.0 - d);
    if x <= 1.0 {
        // u = y^(1−δ)
        Ok(lead * rational_power_kernel(p_low, 1.0, 0.0, x.powf(1.0 - d), spec)?)
    } else {
        // [0,1]: u = y^(1−δ); [1,x]: y = 1/s, then w = s^δ.
        let head = lead * rational_power_kernel(p_low, 1.0, 0.0, 1.0, spec)?;
        let tail = rational_power_kernel(1.0 / d, 1.0, x.powf(-d), 1.0, spec)?;
        Ok(head + tail)
    }
}

/// `₂F₁([1,−δ]; 1−δ; −x) − 1`, computed without forming the leading 1.
pub fn hyp2f1_neg_delta_minus_one_with(
    delta: Delta,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericError> {
    check_argument(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let d = delta.get();
    Ok(x.powf(d) * neg_family_integral(d, x, spec)?)
}

/// `₂F₁([1,−δ]; 1−δ; −x)` for `x ≥ 0` (`x = +∞` maps to `+∞`).
///
/// Always `≥ 1` and strictly increasing in `x`.
pub fn hyp2f1_neg_delta(delta: Delta, x: f64) -> Result<f64, NumericError> {
    hyp2f1_neg_delta_with(delta, x, &QuadratureSpec::default())
}

pub fn hyp2f1_neg_delta_with(
    delta: Delta,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericError> {
    Ok(1.0 + hyp2f1_neg_delta_minus_one_with(delta, x, spec)?)
}

/// `d/dx ₂F₁([1,−δ]; 1−δ; −x) = δ·[(F − 1)/x + 1/(1+x)]`, with value
/// `δ/(1−δ)` at the origin.
pub fn hyp2f1_neg_delta_derivative_with(
    delta: Delta,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericError> {
    check_argument(x)?;
    let d = delta.get();
    if x == 0.0 {
        return Ok(d / (1.0 - d));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    let excess = x.powf(d - 1.0) * neg_family_integral(d, x, spec)?;
    Ok(d * (excess + 1.0 / (1.0 + x)))
}

/// `₂F₁([1,δ]; 1+δ; −x)` for `x ≥ 0` (`x = +∞` maps to `0`).
///
/// Lies in `(0, 1]` and decreases strictly to zero as `x → ∞`.
pub fn hyp2f1_pos_delta(delta: Delta, x: f64) -> Result<f64, NumericError> {
    hyp2f1_pos_delta_with(delta, x, &QuadratureSpec::default())
}

pub fn hyp2f1_pos_delta_with(
    delta: Delta,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericError> {
    check_argument(x)?;
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    let d = delta.get();
    if x <= 1.0 {
        // u = y^δ removes the y^(δ−1) endpoint singularity.
        rational_power_kernel(1.0 / d, x, 0.0, 1.0, spec)
    } else {
        // y = s/x, then split ∫₀ˣ δ s^(δ−1)/(1+s) ds at s = 1.
        let head = rational_power_kernel(1.0 / d, 1.0, 0.0, 1.0, spec)?;
        let tail = d / (1.0 - d)
            * rational_power_kernel(1.0 / (1.0 - d), 1.0, x.powf(d - 1.0), 1.0, spec)?;
        Ok(x.powf(-d) * (head + tail))
    }
}
