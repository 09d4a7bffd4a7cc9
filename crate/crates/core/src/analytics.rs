//! Closed-form typical-user analysis: packet-time CCDF bounds, success
//! probabilities, rates and the rateless-over-fixed gains.
//!
//! Every formula is written in terms of the interference exponent
//! `H(x) = ₂F₁([1,−δ];1−δ;−x) − 1`. With the serving distance modelled as
//! Rayleigh with scale `1/√(2πcλ)`, the probability that the SIR stays below
//! `x` is `H/(c+H)`, which for `c = 1` is the familiar `1 − 1/₂F₁(…)`.

use crate::error::NumericError;
use crate::specfun::{
    hyp2f1_neg_delta_derivative_with, hyp2f1_neg_delta_minus_one_with, hyp2f1_pos_delta_with,
    try_integrate_with_breaks, Delta, QuadratureSpec,
};

type Result<T> = std::result::Result<T, NumericError>;

/// Slack allowed on the analytic orderings before they are reported as a bug.
pub const ORDERING_SLACK: f64 = 1e-9;

/// Packet size, delay constraint and propagation of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingParams {
    /// Information bits per packet (`K`).
    pub k_bits: f64,
    /// Delay constraint in channel uses (`N`).
    pub n_max: f64,
    pub alpha: f64,
    pub delta: Delta,
    /// Crofton constant of the Rayleigh serving-distance model.
    pub crofton_c: f64,
    pub quadrature: QuadratureSpec,
}

impl CodingParams {
    pub fn new(k_bits: f64, n_max: f64, alpha: f64) -> Result<Self> {
        if !(k_bits > 0.0 && k_bits.is_finite()) {
            return Err(NumericError::Domain(format!(
                "packet size must be positive, got {k_bits}"
            )));
        }
        if !(n_max >= 1.0 && n_max.is_finite()) {
            return Err(NumericError::Domain(format!(
                "delay constraint must be at least one channel use, got {n_max}"
            )));
        }
        Ok(Self {
            k_bits,
            n_max,
            alpha,
            delta: Delta::from_alpha(alpha)?,
            crofton_c: 1.0,
            quadrature: QuadratureSpec::default(),
        })
    }

    pub fn with_crofton_c(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(NumericError::Domain(format!(
                "Crofton constant must be positive, got {c}"
            )));
        }
        self.crofton_c = c;
        Ok(self)
    }

    pub fn with_quadrature(mut self, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        self.quadrature = spec;
        Ok(self)
    }

    pub fn with_n_max(self, n_max: f64) -> Result<Self> {
        let mut p = Self::new(self.k_bits, n_max, self.alpha)?;
        p.crofton_c = self.crofton_c;
        p.quadrature = self.quadrature;
        Ok(p)
    }

    fn interference_exponent(&self, x: f64) -> Result<f64> {
        hyp2f1_neg_delta_minus_one_with(self.delta, x, &self.quadrature)
    }

    /// `P(SIR ≤ x)` under the Rayleigh serving-distance model.
    fn outage(&self, x: f64) -> Result<f64> {
        let h = self.interference_exponent(x)?;
        Ok(if h.is_infinite() {
            1.0
        } else {
            h / (self.crofton_c + h)
        })
    }
}

/// SIR threshold `2^(K/t) − 1` for decoding `K` bits within `t` channel uses.
///
/// Evaluated as `expm1(K ln2 / t)`; `t = 0` and exponents past the `f64` range
/// map to `+∞`.
pub fn theta_t(params: &CodingParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(NumericError::Domain(format!(
            "time must be non-negative, got {t}"
        )));
    }
    let exponent = params.k_bits / t;
    if exponent >= f64::MAX_EXP as f64 {
        return Ok(f64::INFINITY);
    }
    Ok((exponent * std::f64::consts::LN_2).exp_m1())
}

/// Upper bound on `P(T > t)` with every interferer permanently active.
pub fn ccdf_ub_theorem1(params: &CodingParams, t: f64) -> Result<f64> {
    let theta = theta_t(params, t)?;
    if t >= params.n_max {
        return Ok(0.0);
    }
    params.outage(theta)
}

/// Exact `P(T > t)` when the interferers transmit continuously; same kernel as
/// [`ccdf_ub_theorem1`].
pub fn ccdf_continuous(params: &CodingParams, t: f64) -> Result<f64> {
    ccdf_ub_theorem1(params, t)
}

/// CCDF of the packet time when only the nearest interferer is present and
/// always active: `1 − ₂F₁([1,δ];1+δ;−θ_t)`. Not truncated at `N`.
pub fn ccdf_tni(params: &CodingParams, t: f64) -> Result<f64> {
    let theta = theta_t(params, t)?;
    Ok(1.0 - hyp2f1_pos_delta_with(params.delta, theta, &params.quadrature)?)
}

/// Mean interferer transmission time `μ = ∫₀ᴺ P(T_ni > t) dt`.
pub fn mean_interferer_time_mu(params: &CodingParams) -> Result<f64> {
    try_integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                Ok(1.0)
            } else {
                ccdf_tni(params, t)
            }
        },
        &[0.0, params.n_max],
        &params.quadrature,
    )
}

/// `μ` for `α = 4` via `1 − arctan√θ_t / √θ_t`, independent of the
/// hypergeometric kernel.
pub fn mean_interferer_time_mu_alpha4(params: &CodingParams) -> Result<f64> {
    require_alpha4(params)?;
    try_integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                return Ok(1.0);
            }
            let s = theta_t(params, t)?.sqrt();
            Ok(if s.is_infinite() {
                1.0
            } else if s == 0.0 {
                0.0
            } else {
                1.0 - s.atan() / s
            })
        },
        &[0.0, params.n_max],
        &params.quadrature,
    )
}

fn require_alpha4(params: &CodingParams) -> Result<()> {
    if params.alpha == 4.0 {
        Ok(())
    } else {
        Err(NumericError::Domain(format!(
            "arctan closed form needs alpha = 4, got {}",
            params.alpha
        )))
    }
}

fn check_mu(params: &CodingParams, mu: f64) -> Result<()> {
    if mu > 0.0 && mu < params.n_max {
        Ok(())
    } else {
        Err(NumericError::Domain(format!(
            "mean interferer time must lie in (0, {}), got {mu}",
            params.n_max
        )))
    }
}

/// Independent-thinning upper bound `P_ub(t)`: interferers thinned by
/// `min(1, μ/t)`; zero from `t = N` on.
pub fn ccdf_ub_thinning(params: &CodingParams, t: f64, mu: f64) -> Result<f64> {
    check_mu(params, mu)?;
    let theta = theta_t(params, t)?;
    if t >= params.n_max {
        return Ok(0.0);
    }
    params.outage(theta * (mu / t).min(1.0))
}

/// Law of the interferer transmission time `T̄` under the independent thinning
/// model, given by its CDF.
pub trait InterfererCdf {
    fn cdf(&self, t: f64) -> f64;

    /// Locations of jumps in the CDF, if known.
    fn jumps(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: Fn(f64) -> f64> InterfererCdf for F {
    fn cdf(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Deterministic interferer time.
#[derive(Debug, Clone, Copy)]
pub struct PointMass(pub f64);

impl InterfererCdf for PointMass {
    fn cdf(&self, t: f64) -> f64 {
        if t >= self.0 {
            1.0
        } else {
            0.0
        }
    }

    fn jumps(&self) -> Vec<f64> {
        vec![self.0]
    }
}

/// `min(T_ni, N)`: the nearest-interferer packet time truncated at the delay
/// constraint, whose mean is [`mean_interferer_time_mu`].
#[derive(Debug, Clone, Copy)]
pub struct NearestInterfererLaw(pub CodingParams);

impl InterfererCdf for NearestInterfererLaw {
    fn cdf(&self, t: f64) -> f64 {
        if t >= self.0.n_max {
            1.0
        } else if t <= 0.0 {
            0.0
        } else {
            // The kernel only fails on invalid arguments, excluded above.
            ccdf_tni(&self.0, t).map_or(f64::NAN, |c| 1.0 - c)
        }
    }

    fn jumps(&self) -> Vec<f64> {
        vec![self.0.n_max]
    }
}

fn validate_cdf(law: &dyn InterfererCdf, upper: f64) -> Result<()> {
    const PROBES: usize = 257;
    let mut previous = 0.0;
    for i in 0..PROBES {
        let t = upper * i as f64 / (PROBES - 1) as f64;
        let v = law.cdf(t);
        if !(0.0..=1.0).contains(&v) || v < previous {
            return Err(NumericError::Domain(format!(
                "interferer CDF is not a valid non-decreasing CDF near t = {t} (value {v})"
            )));
        }
        previous = v;
    }
    Ok(())
}

/// `P(T > t)` under independent thinning, evaluated exactly as an expectation
/// over the interferer-time law instead of through Jensen's inequality.
///
/// With `φ(s) = ₂F₁([1,−δ];1−δ;−θ_t·s/t) − 1` the exponent is
/// `H(t) = E[φ(min(T̄, t))]`, integrated by parts into
/// `φ(t) − θ_t ∫₀¹ F(t·u) ₂F₁′(θ_t·u) du`, which needs only CDF values.
pub fn ccdf_thinning_exact(
    params: &CodingParams,
    t: f64,
    interferer: &dyn InterfererCdf,
) -> Result<f64> {
    let theta = theta_t(params, t)?;
    validate_cdf(interferer, params.n_max.max(t))?;
    if t >= params.n_max {
        return Ok(0.0);
    }
    if theta.is_infinite() {
        return Ok(1.0);
    }
    let spec = &params.quadrature;
    let mut breaks = vec![0.0];
    breaks.extend(
        interferer
            .jumps()
            .into_iter()
            .map(|j| j / t)
            .filter(|&u| u > 0.0 && u < 1.0),
    );
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    let correction = try_integrate_with_breaks(
        |u| {
            let f = interferer.cdf(t * u);
            if f == 0.0 {
                return Ok(0.0);
            }
            Ok(f * hyp2f1_neg_delta_derivative_with(params.delta, theta * u, spec)?)
        },
        &breaks,
        spec,
    )?;
    let h = (params.interference_exponent(theta)? - theta * correction).max(0.0);
    Ok(h / (params.crofton_c + h))
}

/// Fixed-rate success probability `P(SIR > 2^(K/N) − 1)`.
pub fn ps_fixed(params: &CodingParams) -> Result<f64> {
    let theta = theta_t(params, params.n_max)?;
    Ok(1.0 - params.outage(theta)?)
}

/// Fixed-rate typical-user rate `(K/N)·p_s(N)` in bits per channel use.
pub fn rate_fixed(params: &CodingParams) -> Result<f64> {
    Ok(params.k_bits / params.n_max * ps_fixed(params)?)
}

/// Lower bound on the rateless success probability, from the thinning bound at
/// `t = N`.
pub fn ps_rateless_lb(params: &CodingParams, mu: f64) -> Result<f64> {
    check_mu(params, mu)?;
    let theta = theta_t(params, params.n_max)?;
    Ok(1.0 - params.outage(theta * (mu / params.n_max).min(1.0))?)
}

/// Upper bound on `E[T]`: `∫₀ᴺ P_ub(t) dt`.
pub fn expected_t_ub(params: &CodingParams, mu: f64) -> Result<f64> {
    check_mu(params, mu)?;
    try_integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                Ok(1.0)
            } else {
                ccdf_ub_thinning(params, t, mu)
            }
        },
        &[0.0, mu, params.n_max],
        &params.quadrature,
    )
}

/// `E[T]` under continuous interferer transmission.
pub fn expected_t_continuous(params: &CodingParams) -> Result<f64> {
    try_integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                Ok(1.0)
            } else {
                ccdf_continuous(params, t)
            }
        },
        &[0.0, params.n_max],
        &params.quadrature,
    )
}

/// Analytic rateless rate estimate `K·p̃_s / E_ub[T]`. Numerator and
/// denominator are bounds in the same direction, so the ratio is an estimate,
/// not a bound.
pub fn rate_rateless_estimate(params: &CodingParams, mu: f64) -> Result<f64> {
    Ok(params.k_bits * ps_rateless_lb(params, mu)? / expected_t_ub(params, mu)?)
}

/// Continuous-transmission rate gain for `α = 4`, integrating
/// `1/(1 + √θ_t·arctan√θ_t)` directly.
pub fn gbar_r_alpha4(params: &CodingParams) -> Result<f64> {
    require_alpha4(params)?;
    let n = params.n_max;
    let success = try_integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                return Ok(0.0);
            }
            let s = theta_t(params, t)?.sqrt();
            Ok(if s.is_infinite() {
                0.0
            } else {
                params.crofton_c / (params.crofton_c + s * s.atan())
            })
        },
        &[0.0, n],
        &params.quadrature,
    )?;
    Ok(1.0 / (1.0 - success / n))
}

/// All typical-user gains at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainReport {
    /// Mean interferer transmission time.
    pub mu: f64,
    /// SIR gain `Γ = N/μ`.
    pub sir_gain_gamma: f64,
    /// Lower bound on the success-probability gain.
    pub gs_lower_bound: f64,
    /// Rate gain `g_s·N/E[T]`, with `E[T]` replaced by its upper bound.
    pub gr: f64,
    /// Rate gain under continuous interferer transmission.
    pub gbar_r: f64,
    pub ps_fixed: f64,
    pub ps_rateless_lb: f64,
    pub expected_t_ub: f64,
    pub expected_t_continuous: f64,
}

pub fn gains_report(params: &CodingParams) -> Result<GainReport> {
    let n = params.n_max;
    let mu = mean_interferer_time_mu(params)?;
    check_mu(params, mu)?;
    let ps_f = ps_fixed(params)?;
    let ps_r = ps_rateless_lb(params, mu)?;
    let e_ub = expected_t_ub(params, mu)?;
    let e_cont = expected_t_continuous(params)?;
    let gs = ps_r / ps_f;
    let report = GainReport {
        mu,
        sir_gain_gamma: n / mu,
        gs_lower_bound: gs,
        gr: gs * n / e_ub,
        gbar_r: n / e_cont,
        ps_fixed: ps_f,
        ps_rateless_lb: ps_r,
        expected_t_ub: e_ub,
        expected_t_continuous: e_cont,
    };
    let slack = ORDERING_SLACK;
    if !(report.sir_gain_gamma > 1.0) {
        return Err(NumericError::InvariantViolation(format!(
            "SIR gain {} is not above 1",
            report.sir_gain_gamma
        )));
    }
    if report.gbar_r < 1.0 - slack || report.gbar_r > report.gr * (1.0 + slack) {
        return Err(NumericError::InvariantViolation(format!(
            "rate gains violate 1 <= gbar_r <= g_r: gbar_r = {}, g_r = {}",
            report.gbar_r, report.gr
        )));
    }
    Ok(report)
}

/// What an [`AnalyticCurve`] holds. CCDF kinds are indexed by time `t`; the
/// success-probability and rate kinds by the delay constraint `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    CcdfUbTheorem1,
    CcdfTni,
    CcdfUbThinning,
    CcdfContinuous,
    PsFixed,
    PsRatelessLb,
    RateFixed,
    RateRateless,
}

impl CurveKind {
    pub const ALL: [CurveKind; 8] = [
        CurveKind::CcdfUbTheorem1,
        CurveKind::CcdfTni,
        CurveKind::CcdfUbThinning,
        CurveKind::CcdfContinuous,
        CurveKind::PsFixed,
        CurveKind::PsRatelessLb,
        CurveKind::RateFixed,
        CurveKind::RateRateless,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CurveKind::CcdfUbTheorem1 => "ccdf_ub_thm1",
            CurveKind::CcdfTni => "ccdf_tni",
            CurveKind::CcdfUbThinning => "ccdf_ub_thinning",
            CurveKind::CcdfContinuous => "ccdf_continuous",
            CurveKind::PsFixed => "ps_fixed",
            CurveKind::PsRatelessLb => "ps_rateless_lb",
            CurveKind::RateFixed => "rate_fixed",
            CurveKind::RateRateless => "rate_rateless",
        }
    }

    pub fn is_ccdf(self) -> bool {
        matches!(
            self,
            CurveKind::CcdfUbTheorem1
                | CurveKind::CcdfTni
                | CurveKind::CcdfUbThinning
                | CurveKind::CcdfContinuous
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
}

/// `points` log-spaced times on `(0.1, N]`, ending exactly at `N`.
pub fn log_time_grid(n_max: f64, points: usize) -> Vec<f64> {
    let lo = 0.1_f64.ln();
    let hi = n_max.ln();
    (1..=points)
        .map(|i| {
            if i == points {
                n_max
            } else {
                (lo + (hi - lo) * i as f64 / points as f64).exp()
            }
        })
        .collect()
}

pub const DEFAULT_GRID_POINTS: usize = 400;

/// Evaluates a CCDF kind at the given times (`N` and, where needed, `μ` fixed
/// by `params`).
pub fn ccdf_curve(
    params: &CodingParams,
    kind: CurveKind,
    t_grid: &[f64],
    mu: f64,
) -> Result<AnalyticCurve> {
    let values = t_grid
        .iter()
        .map(|&t| match kind {
            CurveKind::CcdfUbTheorem1 => ccdf_ub_theorem1(params, t),
            CurveKind::CcdfContinuous => ccdf_continuous(params, t),
            CurveKind::CcdfTni => ccdf_tni(params, t),
            CurveKind::CcdfUbThinning => ccdf_ub_thinning(params, t, mu),
            other => Err(NumericError::Domain(format!(
                "{} is not a CCDF curve",
                other.label()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticCurve {
        t_grid: t_grid.to_vec(),
        values,
        kind,
    })
}

/// Evaluates a success-probability or rate kind over a grid of delay
/// constraints. `μ` is recomputed per `N`.
pub fn delay_curve(
    params: &CodingParams,
    kind: CurveKind,
    n_grid: &[f64],
) -> Result<AnalyticCurve> {
    let values = n_grid
        .iter()
        .map(|&n| {
            let p = params.with_n_max(n)?;
            match kind {
                CurveKind::PsFixed => ps_fixed(&p),
                CurveKind::RateFixed => rate_fixed(&p),
                CurveKind::PsRatelessLb => ps_rateless_lb(&p, mean_interferer_time_mu(&p)?),
                CurveKind::RateRateless => rate_rateless_estimate(&p, mean_interferer_time_mu(&p)?),
                other => Err(NumericError::Domain(format!(
                    "{} is indexed by time, not by delay constraint",
                    other.label()
                ))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticCurve {
        t_grid: n_grid.to_vec(),
        values,
        kind,
    })
}
