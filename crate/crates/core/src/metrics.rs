//! Estimators on simulated outcomes: empirical CCDFs, gamma fits, per-user
//! gain reports and analytic-vs-simulated comparisons.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma, Normal};

use crate::analytics::{AnalyticCurve, CodingParams};
use crate::error::{Error, Result};
use crate::geometry::NetworkRealization;
use crate::netsim::{run_trial, slot_count, FadingDraw, Mode};
use crate::rng::{stream, Purpose};

/// Fewest pooled samples any estimator accepts.
pub const MIN_POOLED_SAMPLES: usize = 100;
/// Fewest fading draws for a per-user report.
pub const MIN_PER_USER_TRIALS: usize = 500;
pub const BOOTSTRAP_REPLICATES: usize = 200;
/// Slack, in CI half-widths, allowed above a bound.
pub const BOUND_CI_MULTIPLIER: f64 = 2.0;

fn z_975() -> f64 {
    Normal::standard().inverse_cdf(0.975)
}

/// Wilson score 95% interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z_975();
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2n = z * z / nf;
    let centre = (p + z2n / 2.0) / (1.0 + z2n);
    let half = z / (1.0 + z2n) * (p * (1.0 - p) / nf + z2n / (4.0 * nf)).sqrt();
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// Empirical `P(T > t)` on the slot grid `t = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfCurve {
    pub t: Vec<u32>,
    pub ccdf: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub samples: usize,
}

impl CcdfCurve {
    pub fn t_as_f64(&self) -> Vec<f64> {
        self.t.iter().map(|&t| f64::from(t)).collect()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

pub fn empirical_ccdf(samples: &[u32], n_slots: u32) -> Result<CcdfCurve> {
    if samples.len() < MIN_POOLED_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: MIN_POOLED_SAMPLES,
        });
    }
    let top = n_slots as usize;
    let mut counts = vec![0usize; top + 1];
    for &s in samples {
        if s as usize > top {
            return Err(Error::Config(format!(
                "sample {s} exceeds the delay constraint {n_slots}"
            )));
        }
        counts[s as usize] += 1;
    }
    let n = samples.len();
    let mut above = n;
    let mut curve = CcdfCurve {
        t: Vec::with_capacity(top + 1),
        ccdf: Vec::with_capacity(top + 1),
        ci_low: Vec::with_capacity(top + 1),
        ci_high: Vec::with_capacity(top + 1),
        samples: n,
    };
    for (t, &c) in counts.iter().enumerate() {
        above -= c;
        let (lo, hi) = wilson_interval(above, n);
        curve.t.push(t as u32);
        curve.ccdf.push(above as f64 / n as f64);
        curve.ci_low.push(lo);
        curve.ci_high.push(hi);
    }
    Ok(curve)
}

/// Method-of-moments gamma fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
    pub ks_distance: f64,
    pub samples: usize,
}

impl GammaFit {
    fn distribution(&self) -> Result<Gamma> {
        Gamma::new(self.shape, 1.0 / self.scale)
            .map_err(|e| Error::Degenerate(format!("gamma fit: {e}")))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.distribution()?.cdf(x))
    }
}

fn moments(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < MIN_POOLED_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: MIN_POOLED_SAMPLES,
        });
    }
    if samples.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Degenerate(
            "gamma fit needs positive finite samples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    Ok((mean, var))
}

/// Fits `Gamma(shape = m²/v, scale = v/m)` and reports the two-sided
/// Kolmogorov–Smirnov distance to the sample.
pub fn fit_gamma(samples: &[f64]) -> Result<GammaFit> {
    let (mean, var) = moments(samples)?;
    let mut fit = GammaFit {
        shape: mean * mean / var,
        scale: var / mean,
        ks_distance: 0.0,
        samples: samples.len(),
    };
    let dist = fit.distribution()?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    fit.ks_distance = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    Ok(fit)
}

/// Gamma fit to decode slots `T = ⌈T_c⌉` of a continuous packet length `T_c`.
///
/// Moments are corrected for the rounding (mean − ½, variance − 1/12). With
/// `truncation = Some(N)` the samples are the decoded packets of a run cut off
/// at `N`, i.e. draws of `T_c` conditioned on `T_c ≤ N`; the gamma is then fitted
/// by matching the mean and variance of its own law conditioned on `X ≤ N`,
/// since plain moments of a truncated sample are biased low. The KS distance is
/// taken on the lattice, `max_n |P̂(T ≤ n) − P(X ≤ n | X ≤ N)|`, which is exact
/// because `T ≤ n ⟺ T_c ≤ n`.
pub fn fit_gamma_slotted(samples: &[u32], truncation: Option<u32>) -> Result<GammaFit> {
    let as_f64: Vec<f64> = samples.iter().map(|&t| f64::from(t)).collect();
    let (mean, var) = moments(&as_f64)?;
    let mean = mean - 0.5;
    let var = var - 1.0 / 12.0;
    if !(mean > 0.0 && var > 0.0) {
        return Err(Error::Degenerate(
            "slot samples too concentrated for a gamma fit".into(),
        ));
    }
    let top = *samples.iter().max().expect("non-empty");
    let (shape, scale, upper) = match truncation {
        None => (mean * mean / var, var / mean, f64::INFINITY),
        Some(n) => {
            if top > n {
                return Err(Error::Config(format!(
                    "sample {top} exceeds the truncation point {n}"
                )));
            }
            let upper = f64::from(n);
            let (k, theta) = truncated_moment_match(mean, var, upper)?;
            (k, theta, upper)
        }
    };
    let mut fit = GammaFit {
        shape,
        scale,
        ks_distance: 0.0,
        samples: samples.len(),
    };
    let dist = fit.distribution()?;
    let mass = if upper.is_finite() {
        dist.cdf(upper)
    } else {
        1.0
    };
    let mut counts = vec![0usize; top as usize + 1];
    for &s in samples {
        counts[s as usize] += 1;
    }
    let n = samples.len() as f64;
    let mut cum = 0usize;
    let mut ks = 0.0_f64;
    for (t, &c) in counts.iter().enumerate() {
        cum += c;
        ks = ks.max((cum as f64 / n - dist.cdf(t as f64) / mass).abs());
    }
    fit.ks_distance = ks;
    Ok(fit)
}

/// Mean and variance of `Gamma(k, θ)` conditioned on `X ≤ upper`.
fn truncated_gamma_moments(k: f64, theta: f64, upper: f64) -> (f64, f64) {
    let mass = |shape: f64| {
        Gamma::new(shape, 1.0 / theta)
            .map(|g| g.cdf(upper))
            .unwrap_or(f64::NAN)
    };
    let p0 = mass(k);
    let m1 = k * theta * mass(k + 1.0) / p0;
    let m2 = k * (k + 1.0) * theta * theta * mass(k + 2.0) / p0;
    (m1, m2 - m1 * m1)
}

/// Bisection in log space for the root of an increasing `f` on `[lo, hi]`.
fn log_bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..120 {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Solves for `(k, θ)` whose law truncated at `upper` has the given mean and
/// variance: `θ` matches the mean for each `k`, and `k` the variance.
fn truncated_moment_match(mean: f64, var: f64, upper: f64) -> Result<(f64, f64)> {
    if !(mean < upper) {
        return Err(Error::Degenerate(
            "sample mean at the truncation point".into(),
        ));
    }
    let theta_for = |k: f64| {
        log_bisect(1e-9 * upper, 1e9 * upper, |theta| {
            truncated_gamma_moments(k, theta, upper).0 - mean
        })
    };
    // As θ → ∞ the truncated law tends to density ∝ x^(k−1) on [0, upper], whose
    // mean k·upper/(k+1) caps what any θ can reach.
    let k_min = (mean / (upper - mean)) * (1.0 + 1e-9);
    let k = log_bisect(k_min, k_min.max(1.0) * 1e4, |k| {
        var - truncated_gamma_moments(k, theta_for(k), upper).1
    });
    let theta = theta_for(k);
    let (m, v) = truncated_gamma_moments(k, theta, upper);
    if !((m - mean).abs() <= 1e-6 * mean && (v - var).abs() <= 1e-4 * var) {
        return Err(Error::Degenerate(format!(
            "no gamma law truncated at {upper} has mean {mean} and variance {var}"
        )));
    }
    Ok((k, theta))
}

/// One grid point of [`curve_diff`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDiff {
    pub t: f64,
    pub simulated: f64,
    pub analytic: f64,
    /// Analytic value inside the simulated 95% band.
    pub inside_ci: bool,
    /// Simulated value at most the analytic one plus
    /// [`BOUND_CI_MULTIPLIER`] CI half-widths.
    pub bound_respected: bool,
}

pub fn curve_diff(simulated: &CcdfCurve, analytic: &AnalyticCurve) -> Result<Vec<PointDiff>> {
    if simulated.len() != analytic.t_grid.len()
        || simulated
            .t
            .iter()
            .zip(&analytic.t_grid)
            .any(|(&a, &b)| f64::from(a) != b)
    {
        return Err(Error::Config(
            "simulated and analytic curves use different time grids".into(),
        ));
    }
    Ok((0..simulated.len())
        .map(|j| {
            let sim = simulated.ccdf[j];
            let ana = analytic.values[j];
            let (lo, hi) = (simulated.ci_low[j], simulated.ci_high[j]);
            let half = (sim - lo).max(hi - sim);
            PointDiff {
                t: analytic.t_grid[j],
                simulated: sim,
                analytic: ana,
                inside_ci: lo <= ana && ana <= hi,
                bound_respected: sim <= ana + BOUND_CI_MULTIPLIER * half,
            }
        })
        .collect())
}

/// Aggregates of a [`curve_diff`] report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffSummary {
    pub points: usize,
    pub fraction_inside_ci: f64,
    pub fraction_bound_respected: f64,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
}

pub fn summarize_diff(points: &[PointDiff]) -> DiffSummary {
    let n = points.len().max(1) as f64;
    let frac = |f: fn(&PointDiff) -> bool| points.iter().filter(|p| f(p)).count() as f64 / n;
    let devs = points.iter().map(|p| (p.simulated - p.analytic).abs());
    DiffSummary {
        points: points.len(),
        fraction_inside_ci: frac(|p| p.inside_ci),
        fraction_bound_respected: frac(|p| p.bound_respected),
        max_abs_deviation: devs.clone().fold(0.0, f64::max),
        mean_abs_deviation: devs.sum::<f64>() / n,
    }
}

/// Fading-averaged performance of one pair of a fixed realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerUserRecord {
    pub pair_id: usize,
    pub distance: f64,
    pub ps_rateless: f64,
    pub ps_fixed: f64,
    pub mean_t: f64,
    /// `K·p̂_s / mean(T)`.
    pub rate_rateless: f64,
    /// `(K/N)·p̂_s`.
    pub rate_fixed: f64,
    /// `rate_rateless / rate_fixed`; `+∞` when the fixed-rate code never succeeded.
    pub gain_gr: f64,
    /// `ps_rateless / ps_fixed`; `+∞` when the fixed-rate code never succeeded.
    pub gain_gs: f64,
    /// Fixed-rate code never succeeded; gains are the `+∞` sentinel.
    pub censored: bool,
    /// Paired-bootstrap standard deviation of `gain_gr` (NaN if censored).
    pub gain_gr_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerUserReport {
    pub records: Vec<PerUserRecord>,
    pub fading_trials: usize,
    pub n_slots: u32,
}

impl PerUserReport {
    pub fn uncensored(&self) -> impl Iterator<Item = &PerUserRecord> {
        self.records.iter().filter(|r| !r.censored)
    }

    pub fn censored_count(&self) -> usize {
        self.records.iter().filter(|r| r.censored).count()
    }

    /// Spearman correlation of (distance, `G_R`) over uncensored pairs.
    pub fn distance_gain_correlation(&self) -> Option<f64> {
        let (d, g): (Vec<f64>, Vec<f64>) =
            self.uncensored().map(|r| (r.distance, r.gain_gr)).unzip();
        spearman(&d, &g)
    }
}

/// Per-pair tallies over fading draws.
#[derive(Debug, Clone, Copy, Default)]
struct PairTally {
    rateless: u32,
    fixed: u32,
    t_sum: u64,
}

struct PairRates {
    ps_rateless: f64,
    ps_fixed: f64,
    mean_t: f64,
    rate_rateless: f64,
    rate_fixed: f64,
    gain_gr: f64,
}

fn pair_rates(t: &PairTally, trials: f64, k_bits: f64, n: f64) -> PairRates {
    let ps_rateless = f64::from(t.rateless) / trials;
    let ps_fixed = f64::from(t.fixed) / trials;
    let mean_t = t.t_sum as f64 / trials;
    let rate_rateless = k_bits * ps_rateless / mean_t;
    let rate_fixed = k_bits / n * ps_fixed;
    PairRates {
        ps_rateless,
        ps_fixed,
        mean_t,
        rate_rateless,
        rate_fixed,
        gain_gr: if t.fixed == 0 {
            f64::INFINITY
        } else {
            rate_rateless / rate_fixed
        },
    }
}

/// Holds the realization fixed and runs `fading_trials` paired rateless /
/// fixed-rate trials (identical fading for both schemes). Fading draw `f`
/// comes from stream `(master_seed, Fading, realization_index, f)`, so the
/// report is reproducible from the seed.
pub fn per_user_report(
    net: &NetworkRealization,
    params: &CodingParams,
    fading_trials: usize,
    master_seed: u64,
    realization_index: u64,
) -> Result<PerUserReport> {
    if fading_trials < MIN_PER_USER_TRIALS {
        return Err(Error::InsufficientSamples {
            got: fading_trials,
            need: MIN_PER_USER_TRIALS,
        });
    }
    let n_slots = slot_count(params)?;
    let pairs = net.pairs();

    // Per trial, per pair: (rateless success, fixed success, T).
    let per_trial: Vec<Vec<(bool, bool, u32)>> = (0..fading_trials)
        .into_par_iter()
        .map(|f| {
            let mut rng = stream(master_seed, Purpose::Fading, realization_index, f as u64);
            let fading = FadingDraw::sample(pairs, &mut rng);
            let r = run_trial(net, &fading, params, Mode::RatelessAck)?;
            let x = run_trial(net, &fading, params, Mode::FixedRate)?;
            Ok(r.iter()
                .zip(&x)
                .map(|(r, x)| (r.success, x.success, r.t_slots))
                .collect())
        })
        .collect::<Result<_>>()?;

    let tally = |weights: &[u32]| -> Vec<PairTally> {
        let mut out = vec![PairTally::default(); pairs];
        for (trial, &w) in per_trial.iter().zip(weights) {
            if w == 0 {
                continue;
            }
            for (acc, &(r, x, t)) in out.iter_mut().zip(trial) {
                acc.rateless += w * u32::from(r);
                acc.fixed += w * u32::from(x);
                acc.t_sum += u64::from(w) * u64::from(t);
            }
        }
        out
    };
    let base = tally(&vec![1; fading_trials]);

    // Paired bootstrap: resample whole fading draws, keeping both schemes together.
    let mut rng = stream(master_seed, Purpose::Bootstrap, realization_index, 0);
    let resamples: Vec<Vec<u32>> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| {
            let mut w = vec![0u32; fading_trials];
            for _ in 0..fading_trials {
                w[rng.random_range(0..fading_trials)] += 1;
            }
            w
        })
        .collect();
    let boot: Vec<Vec<PairTally>> = resamples.par_iter().map(|w| tally(w)).collect();

    let trials = fading_trials as f64;
    let n = f64::from(n_slots);
    let records = (0..pairs)
        .map(|i| {
            let p = pair_rates(&base[i], trials, params.k_bits, n);
            let censored = base[i].fixed == 0;
            let replicate_gains: Vec<f64> = boot
                .iter()
                .map(|b| pair_rates(&b[i], trials, params.k_bits, n).gain_gr)
                .filter(|g| g.is_finite())
                .collect();
            PerUserRecord {
                pair_id: i,
                distance: net.link_distance[i],
                ps_rateless: p.ps_rateless,
                ps_fixed: p.ps_fixed,
                mean_t: p.mean_t,
                rate_rateless: p.rate_rateless,
                rate_fixed: p.rate_fixed,
                gain_gr: p.gain_gr,
                gain_gs: if censored {
                    f64::INFINITY
                } else {
                    p.ps_rateless / p.ps_fixed
                },
                censored,
                gain_gr_sd: if censored {
                    f64::NAN
                } else {
                    sample_sd(&replicate_gains)
                },
            }
        })
        .collect();
    Ok(PerUserReport {
        records,
        fading_trials,
        n_slots,
    })
}

fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Mid-ranks (ties share their average rank), 1-based.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` for fewer than three points or a
/// constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
