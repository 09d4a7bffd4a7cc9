//! Discrete-slot downlink engine.
//!
//! Every BS sends one `K`-bit packet to its user. In slot `n` user `i` sees the
//! instantaneous interference `I_i(n) = Σ_{k≠i active} |h_ki|² |X_k − Y_i|^(−α)`
//! and decodes at the first slot where `K < n·log₂(1 + S_i / Î_i(n))`, with
//! `Î_i(n)` the running mean of `I_i(1..n)` and `S_i` the serving power.
//! Decode tests use the slot-`n` active set; BSs whose users decoded go silent
//! from slot `n + 1`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::analytics::CodingParams;
use crate::error::{Error, NumericError, Result};
use crate::geometry::{NetworkRealization, Window};
use crate::metrics::{empirical_ccdf, wilson_interval, CcdfCurve, MIN_POOLED_SAMPLES};
use crate::rng::{stream, Purpose};

/// How the interfering BSs behave while a packet is in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Rateless coding; a BS goes silent once its user has decoded.
    RatelessAck,
    /// Fixed-rate coding: one decoding attempt at `t = N` under full interference.
    FixedRate,
    /// Rateless serving BS, interferers never switch off.
    Continuous,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::RatelessAck, Mode::FixedRate, Mode::Continuous];

    pub fn label(self) -> &'static str {
        match self {
            Mode::RatelessAck => "rateless_ack",
            Mode::FixedRate => "fixed_rate",
            Mode::Continuous => "continuous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label() == s)
    }
}

/// Quasi-static power gains `|h_ki|²` (unit-mean exponential), one per
/// (user, BS) pair, fixed for the whole packet.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraw {
    n: usize,
    gains: Vec<f64>,
}

impl FadingDraw {
    pub fn sample<R: Rng + ?Sized>(pairs: usize, rng: &mut R) -> Self {
        let gains = (0..pairs * pairs)
            .map(|_| loop {
                let g: f64 = Exp1.sample(rng);
                if g > 0.0 {
                    break g;
                }
            })
            .collect();
        Self { n: pairs, gains }
    }

    /// All gains equal to one.
    pub fn unit(pairs: usize) -> Self {
        Self {
            n: pairs,
            gains: vec![1.0; pairs * pairs],
        }
    }

    pub fn from_gains(pairs: usize, gains: Vec<f64>) -> Result<Self> {
        if gains.len() != pairs * pairs || gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::Config(format!(
                "fading gains must be {pairs}x{pairs} positive finite values"
            )));
        }
        Ok(Self { n: pairs, gains })
    }

    pub fn pairs(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, user: usize, bs: usize) -> f64 {
        self.gains[user * self.n + bs]
    }

    #[inline]
    fn row(&self, user: usize) -> &[f64] {
        &self.gains[user * self.n..(user + 1) * self.n]
    }
}

/// Result of one BS–user link in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOutcome {
    pub pair_id: usize,
    /// Packet time in slots, `min(N, T̂)`.
    pub t_slots: u32,
    pub success: bool,
    pub distance: f64,
    /// `Î(T)` at the decode slot (or at `N` on failure).
    pub mean_avg_interference_at_t: f64,
}

/// Decode test shared by all modes. Zero interference decodes immediately.
#[inline]
fn decodes(k_bits: f64, slot: u32, signal: f64, interference: f64) -> bool {
    if interference <= 0.0 {
        return true;
    }
    k_bits < f64::from(slot) * (signal / interference).ln_1p() * std::f64::consts::LOG2_E
}

/// Number of slots `N` for simulation; must be a whole number.
pub fn slot_count(params: &CodingParams) -> Result<u32> {
    let n = params.n_max;
    if n.fract() != 0.0 || n < 1.0 || n > f64::from(u32::MAX) {
        return Err(Error::Config(format!(
            "simulated delay constraint must be a positive whole number of slots, got {n}"
        )));
    }
    Ok(n as u32)
}

/// Extra consistency checks for [`run_trial_checked`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialChecks {
    /// Assert interference and achievable-rate monotonicity and compare the
    /// incremental interference sums with direct recomputation for ~1% of
    /// (user, slot) pairs.
    pub verify: bool,
}

const SPOT_CHECK_REL_TOL: f64 = 1e-9;
const MONOTONE_REL_SLACK: f64 = 1e-12;

pub fn run_trial(
    net: &NetworkRealization,
    fading: &FadingDraw,
    params: &CodingParams,
    mode: Mode,
) -> Result<Vec<LinkOutcome>> {
    run_trial_checked(net, fading, params, mode, TrialChecks::default())
}

pub fn run_trial_checked(
    net: &NetworkRealization,
    fading: &FadingDraw,
    params: &CodingParams,
    mode: Mode,
    checks: TrialChecks,
) -> Result<Vec<LinkOutcome>> {
    let n_slots = slot_count(params)?;
    let pairs = net.pairs();
    if fading.pairs() != pairs {
        return Err(Error::Config(format!(
            "fading draw has {} pairs, realization has {pairs}",
            fading.pairs()
        )));
    }
    let k_bits = params.k_bits;
    let received = |i: usize, k: usize| fading.get(i, k) * net.pathloss.get(i, k);
    let signal: Vec<f64> = (0..pairs).map(|i| received(i, i)).collect();
    let full: Vec<f64> = (0..pairs)
        .map(|i| {
            fading
                .row(i)
                .iter()
                .zip(net.pathloss.row(i))
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, (g, p))| g * p)
                .sum()
        })
        .collect();
    let outcome = |i: usize, t: u32, success: bool, avg: f64| LinkOutcome {
        pair_id: i,
        t_slots: t,
        success,
        distance: net.link_distance[i],
        mean_avg_interference_at_t: avg,
    };

    match mode {
        Mode::FixedRate => Ok((0..pairs)
            .map(|i| {
                outcome(
                    i,
                    n_slots,
                    decodes(k_bits, n_slots, signal[i], full[i]),
                    full[i],
                )
            })
            .collect()),
        Mode::Continuous => Ok((0..pairs)
            .map(
                |i| match (1..=n_slots).find(|&t| decodes(k_bits, t, signal[i], full[i])) {
                    Some(t) => outcome(i, t, true, full[i]),
                    None => outcome(i, n_slots, false, full[i]),
                },
            )
            .collect()),
        Mode::RatelessAck => rateless_ack(
            net, fading, k_bits, n_slots, &signal, &full, checks, &outcome,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn rateless_ack(
    net: &NetworkRealization,
    fading: &FadingDraw,
    k_bits: f64,
    n_slots: u32,
    signal: &[f64],
    full: &[f64],
    checks: TrialChecks,
    outcome: &dyn Fn(usize, u32, bool, f64) -> LinkOutcome,
) -> Result<Vec<LinkOutcome>> {
    let pairs = net.pairs();
    let received = |i: usize, k: usize| fading.get(i, k) * net.pathloss.get(i, k);
    let direct_sum = |i: usize, active: &[bool]| -> f64 {
        (0..pairs)
            .filter(|&k| k != i && active[k])
            .map(|k| received(i, k))
            .sum()
    };

    let mut active = vec![true; pairs];
    let mut listening: Vec<usize> = (0..pairs).collect();
    let mut current = full.to_vec();
    let mut cumulative = vec![0.0; pairs];
    let mut last_rate = vec![0.0; pairs];
    let mut results: Vec<Option<LinkOutcome>> = vec![None; pairs];
    let mut active_count = pairs;
    let mut active_at_refresh = pairs;
    let mut decoded = Vec::new();

    for slot in 1..=n_slots {
        let slot_f = f64::from(slot);
        decoded.clear();
        for &i in &listening {
            cumulative[i] += current[i];
            // Î never exceeds the all-active level; the clamp keeps rounding from
            // breaking that (and with it the fixed-rate coupling).
            let avg = (cumulative[i] / slot_f).min(full[i]);
            if checks.verify {
                verify_slot(i, slot, current[i], avg, signal[i], &mut last_rate, k_bits)?;
                if (i + slot as usize).is_multiple_of(100) {
                    let direct = direct_sum(i, &active);
                    let scale = full[i].max(f64::MIN_POSITIVE);
                    if (direct - current[i]).abs() > SPOT_CHECK_REL_TOL * direct.max(1e-6 * scale) {
                        return Err(NumericError::InvariantViolation(format!(
                            "incremental interference {} differs from direct sum {direct} \
                             (user {i}, slot {slot})",
                            current[i]
                        ))
                        .into());
                    }
                }
            }
            if decodes(k_bits, slot, signal[i], avg) {
                results[i] = Some(outcome(i, slot, true, avg));
                decoded.push(i);
            }
        }
        if decoded.is_empty() {
            continue;
        }
        for &k in &decoded {
            active[k] = false;
        }
        active_count -= decoded.len();
        listening.retain(|&i| results[i].is_none());
        if listening.is_empty() {
            break;
        }
        if 2 * active_count <= active_at_refresh {
            // Exact recomputation whenever half the interferers have gone,
            // bounding cancellation error in the running subtraction.
            for &i in &listening {
                current[i] = direct_sum(i, &active);
            }
            active_at_refresh = active_count;
        } else {
            for &i in &listening {
                let removed: f64 = decoded.iter().map(|&k| received(i, k)).sum();
                current[i] = (current[i] - removed).max(0.0);
            }
        }
    }

    let n_f = f64::from(n_slots);
    Ok(results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.unwrap_or_else(|| outcome(i, n_slots, false, (cumulative[i] / n_f).min(full[i])))
        })
        .collect())
}

fn verify_slot(
    i: usize,
    slot: u32,
    instantaneous: f64,
    avg: f64,
    signal: f64,
    last_rate: &mut [f64],
    k_bits: f64,
) -> Result<()> {
    if avg < instantaneous * (1.0 - MONOTONE_REL_SLACK) {
        return Err(NumericError::InvariantViolation(format!(
            "average interference {avg} below instantaneous {instantaneous} (user {i}, slot {slot})"
        ))
        .into());
    }
    let accumulated = if avg > 0.0 {
        f64::from(slot) * (signal / avg).ln_1p()
    } else {
        f64::INFINITY
    };
    if accumulated < last_rate[i] * (1.0 - MONOTONE_REL_SLACK) {
        return Err(NumericError::InvariantViolation(format!(
            "accumulated information decreased for user {i} at slot {slot} (K = {k_bits})"
        ))
        .into());
    }
    last_rate[i] = accumulated;
    Ok(())
}

/// Experiment geometry, trial counts and seed shared by all simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub intensity: f64,
    pub window: Window,
    pub alpha: f64,
    pub realizations: usize,
    pub fading_trials: usize,
    pub master_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity > 0.0) {
            return Err(Error::Config("intensity must be positive".into()));
        }
        if !(self.alpha > 2.0) {
            return Err(Error::Config("path-loss exponent must exceed 2".into()));
        }
        if self.realizations == 0 || self.fading_trials == 0 {
            return Err(Error::Config(
                "realizations and fading trials must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn realization(&self, index: usize) -> Result<NetworkRealization> {
        let mut rng = stream(self.master_seed, Purpose::Realization, index as u64, 0);
        NetworkRealization::generate(self.intensity, self.window, self.alpha, &mut rng)
    }

    pub fn fading(&self, realization: usize, trial: usize, pairs: usize) -> FadingDraw {
        let mut rng = stream(
            self.master_seed,
            Purpose::Fading,
            realization as u64,
            trial as u64,
        );
        FadingDraw::sample(pairs, &mut rng)
    }

    /// Runs `body` on every (realization, fading draw) and returns the results
    /// in (realization, trial) order, regardless of the thread count.
    pub fn for_each_trial<T, F>(&self, body: F) -> Result<Vec<TrialResult<T>>>
    where
        T: Send,
        F: Fn(&NetworkRealization, &FadingDraw) -> Result<T> + Sync,
    {
        self.validate()?;
        let per_realization: Vec<Vec<TrialResult<T>>> = (0..self.realizations)
            .into_par_iter()
            .map(|r| {
                let net = self.realization(r)?;
                debug_assert!(net.association_holds());
                (0..self.fading_trials)
                    .map(|f| {
                        let fading = self.fading(r, f, net.pairs());
                        Ok(TrialResult {
                            realization: r,
                            fading_trial: f,
                            value: body(&net, &fading)?,
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(per_realization.into_iter().flatten().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult<T> {
    pub realization: usize,
    pub fading_trial: usize,
    pub value: T,
}

/// Outcome lists of every trial of one mode.
pub fn simulate_mode(
    scenario: &Scenario,
    params: &CodingParams,
    mode: Mode,
) -> Result<Vec<TrialResult<Vec<LinkOutcome>>>> {
    slot_count(params)?;
    scenario.for_each_trial(|net, fading| run_trial(net, fading, params, mode))
}

/// Pooled typical-user packet-time estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalCcdf {
    pub curve: CcdfCurve,
    /// Every pooled `T` (slots), in trial order.
    pub samples: Vec<u32>,
    /// Success flag per pooled sample.
    pub successes: Vec<bool>,
}

impl TypicalCcdf {
    pub fn success_fraction(&self) -> f64 {
        self.successes.iter().filter(|&&s| s).count() as f64 / self.successes.len() as f64
    }

    pub fn mean_t(&self) -> f64 {
        self.samples.iter().map(|&t| f64::from(t)).sum::<f64>() / self.samples.len() as f64
    }
}

/// Pools `T` over all pairs, realizations and fading draws and estimates
/// `P(T > t)` on `t = 0..N` with Wilson 95% bands.
pub fn estimate_typical_ccdf(
    scenario: &Scenario,
    params: &CodingParams,
    mode: Mode,
) -> Result<TypicalCcdf> {
    let n = slot_count(params)?;
    let trials = simulate_mode(scenario, params, mode)?;
    typical_ccdf_from_trials(&trials, n)
}

pub fn typical_ccdf_from_trials(
    trials: &[TrialResult<Vec<LinkOutcome>>],
    n_slots: u32,
) -> Result<TypicalCcdf> {
    let outcomes = trials.iter().flat_map(|t| t.value.iter());
    let (samples, successes): (Vec<u32>, Vec<bool>) =
        outcomes.map(|o| (o.t_slots, o.success)).unzip();
    if samples.len() < MIN_POOLED_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: MIN_POOLED_SAMPLES,
        });
    }
    let curve = empirical_ccdf(&samples, n_slots)?;
    Ok(TypicalCcdf {
        curve,
        samples,
        successes,
    })
}

/// One delay constraint of a rateless/fixed sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n_slots: u32,
    pub samples: usize,
    pub successes: usize,
    pub ps: f64,
    pub ps_ci: (f64, f64),
    pub mean_t: f64,
    /// `K·p̂_s / mean(T)`; for fixed rate `mean(T) = N`, giving `(K/N)·p̂_s`.
    pub rate: f64,
}

/// Paired sweep results; index `j` of each list belongs to `n_grid[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSweep {
    pub rateless: Vec<SweepPoint>,
    pub fixed: Vec<SweepPoint>,
}

/// Index of the largest rate (first one on ties).
pub fn argmax_rate(points: &[SweepPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (j, p)| match best {
            Some((_, r)) if r >= p.rate => best,
            _ => Some((j, p.rate)),
        })
        .map(|(j, _)| j)
}

fn check_grid(n_grid: &[u32]) -> Result<u32> {
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::Config(
            "delay grid must be non-empty and positive".into(),
        ));
    }
    Ok(*n_grid.iter().max().expect("non-empty"))
}

fn sweep_point(n: u32, k_bits: f64, times: &[u32], success: &[bool]) -> SweepPoint {
    let samples = times.len();
    let successes = success.iter().filter(|&&s| s).count();
    let ps = successes as f64 / samples as f64;
    let mean_t = times.iter().map(|&t| f64::from(t)).sum::<f64>() / samples as f64;
    SweepPoint {
        n_slots: n,
        samples,
        successes,
        ps,
        ps_ci: wilson_interval(successes, samples),
        mean_t,
        rate: if mean_t > 0.0 {
            k_bits * ps / mean_t
        } else {
            0.0
        },
    }
}

/// Rateless and fixed-rate sweeps over delay constraints on common random
/// numbers (same realizations and fading for every mode and every `N`).
///
/// Neither process depends on `N` before slot `N`, so one run up to the largest
/// `N` is truncated per grid point: rateless `T = min(T̂, N)`; fixed-rate
/// success is re-tested at each `N` with the all-active SIR.
pub fn run_paired_sweep(scenario: &Scenario, k_bits: f64, n_grid: &[u32]) -> Result<PairedSweep> {
    let n_top = check_grid(n_grid)?;
    let params = CodingParams::new(k_bits, f64::from(n_top), scenario.alpha)?;
    // Per pooled link: rateless decode slot (None = not by n_top) and fixed-rate SIR.
    let trials = scenario.for_each_trial(|net, fading| {
        let rateless = run_trial(net, fading, &params, Mode::RatelessAck)?;
        Ok(rateless
            .iter()
            .map(|o| {
                let i = o.pair_id;
                let interference: f64 = (0..net.pairs())
                    .filter(|&k| k != i)
                    .map(|k| fading.get(i, k) * net.pathloss.get(i, k))
                    .sum();
                let signal = fading.get(i, i) * net.pathloss.get(i, i);
                (o.success.then_some(o.t_slots), signal, interference)
            })
            .collect::<Vec<_>>())
    })?;
    let links: Vec<_> = trials
        .iter()
        .flat_map(|t| t.value.iter().copied())
        .collect();

    let mut rateless = Vec::with_capacity(n_grid.len());
    let mut fixed = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let (times, success): (Vec<u32>, Vec<bool>) = links
            .iter()
            .map(|&(decode, _, _)| match decode {
                Some(t) if t <= n => (t, true),
                _ => (n, false),
            })
            .unzip();
        rateless.push(sweep_point(n, k_bits, &times, &success));

        let success: Vec<bool> = links
            .iter()
            .map(|&(_, s, i)| decodes(k_bits, n, s, i))
            .collect();
        fixed.push(sweep_point(n, k_bits, &vec![n; links.len()], &success));
    }
    Ok(PairedSweep { rateless, fixed })
}

/// Fixed-rate success probability and rate per delay constraint.
pub fn run_fixed_rate_sweep(
    scenario: &Scenario,
    k_bits: f64,
    n_grid: &[u32],
) -> Result<Vec<SweepPoint>> {
    Ok(run_paired_sweep(scenario, k_bits, n_grid)?.fixed)
}

/// Rateless success probability, mean packet time and rate per delay constraint.
pub fn run_rateless_sweep(
    scenario: &Scenario,
    k_bits: f64,
    n_grid: &[u32],
) -> Result<Vec<SweepPoint>> {
    Ok(run_paired_sweep(scenario, k_bits, n_grid)?.rateless)
}

/// Continuous-transmission run: CCDF and the packet-time gain `N / mean(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRun {
    pub ccdf: TypicalCcdf,
    pub gbar_r: f64,
}

pub fn run_continuous_mode(scenario: &Scenario, params: &CodingParams) -> Result<ContinuousRun> {
    let ccdf = estimate_typical_ccdf(scenario, params, Mode::Continuous)?;
    let gbar_r = params.n_max / ccdf.mean_t();
    Ok(ContinuousRun { ccdf, gbar_r })
}
