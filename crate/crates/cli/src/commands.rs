use std::path::PathBuf;

use anyhow::Result;
use ratelessnet::analytics::{
    ccdf_curve, delay_curve, gains_report, gbar_r_alpha4, log_time_grid, mean_interferer_time_mu,
    mean_interferer_time_mu_alpha4, CurveKind, DEFAULT_GRID_POINTS,
};
use ratelessnet::metrics::{fit_gamma, fit_gamma_slotted, per_user_report, PerUserReport};
use ratelessnet::netsim::{
    argmax_rate, run_paired_sweep, simulate_mode, typical_ccdf_from_trials, Mode, PairedSweep,
    TypicalCcdf,
};

use crate::config::{SimConfig, PATHLOSS_WARN_ENTRIES};
use crate::output::{num, CsvFile};

fn warn_if_large(cfg: &SimConfig) {
    let entries = cfg.expected_pathloss_entries();
    if entries > PATHLOSS_WARN_ENTRIES {
        eprintln!(
            "warning: about {entries:.1e} path-loss entries per realization \
             ({:.1} GB); consider a smaller window",
            entries * 8.0 / 1e9
        );
    }
}

fn is_alpha4(cfg: &SimConfig) -> bool {
    cfg.alpha == 4.0
}

/// `curves.csv` (every analytic curve, long format) and `gains.csv` (one row
/// per delay constraint of the grid and `n_max`).
pub fn analyze(cfg: &SimConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let params = cfg.coding_params()?;
    let mu = mean_interferer_time_mu(&params)?;
    let t_grid = log_time_grid(params.n_max, DEFAULT_GRID_POINTS);
    let mut n_grid = cfg.sorted_grid();
    n_grid.push(cfg.n_max);
    n_grid.sort_unstable();
    n_grid.dedup();
    let n_grid_f: Vec<f64> = n_grid.iter().map(|&n| f64::from(n)).collect();

    let mut curves = CsvFile::create(
        &cfg.output_dir,
        "curves.csv",
        "analyze",
        cfg,
        &["curve", "x", "value"],
    )?;
    for kind in CurveKind::ALL {
        let curve = if kind.is_ccdf() {
            ccdf_curve(&params, kind, &t_grid, mu)?
        } else {
            delay_curve(&params, kind, &n_grid_f)?
        };
        for (x, v) in curve.t_grid.iter().zip(&curve.values) {
            curves.row(&[kind.label().to_string(), num(*x), num(*v)])?;
        }
    }

    let mut gains = CsvFile::create(
        &cfg.output_dir,
        "gains.csv",
        "analyze",
        cfg,
        &[
            "N",
            "mu",
            "mu_alpha4",
            "sir_gain_gamma",
            "ps_fixed",
            "ps_rateless_lb",
            "gs_lower_bound",
            "expected_t_ub",
            "expected_t_continuous",
            "gr",
            "gbar_r",
            "gbar_r_alpha4",
        ],
    )?;
    for &n in &n_grid {
        let p = cfg.coding_params_at(n)?;
        let g = gains_report(&p)?;
        let (mu4, gbar4) = if is_alpha4(cfg) {
            (mean_interferer_time_mu_alpha4(&p)?, gbar_r_alpha4(&p)?)
        } else {
            (f64::NAN, f64::NAN)
        };
        gains.row(&[
            n.to_string(),
            num(g.mu),
            num(mu4),
            num(g.sir_gain_gamma),
            num(g.ps_fixed),
            num(g.ps_rateless_lb),
            num(g.gs_lower_bound),
            num(g.expected_t_ub),
            num(g.expected_t_continuous),
            num(g.gr),
            num(g.gbar_r),
            num(gbar4),
        ])?;
    }
    Ok(vec![curves.finish()?, gains.finish()?])
}

/// Runs the configured mode: `outcomes.csv` (every link of every trial) and
/// `ccdf.csv` (pooled empirical CCDF with Wilson bands).
pub fn simulate(cfg: &SimConfig) -> Result<(Vec<PathBuf>, TypicalCcdf)> {
    cfg.validate()?;
    warn_if_large(cfg);
    let params = cfg.coding_params()?;
    let scenario = cfg.scenario()?;
    let mode: Mode = cfg.mode.into();
    let trials = simulate_mode(&scenario, &params, mode)?;
    let typical = typical_ccdf_from_trials(&trials, cfg.n_max)?;

    let mut outcomes = CsvFile::create(
        &cfg.output_dir,
        "outcomes.csv",
        "simulate",
        cfg,
        &["trial_id", "pair_id", "D", "T_slots", "success", "mode"],
    )?;
    for t in &trials {
        let trial_id = t.realization * cfg.fading_trials + t.fading_trial;
        for o in &t.value {
            outcomes.row(&[
                trial_id.to_string(),
                o.pair_id.to_string(),
                num(o.distance),
                o.t_slots.to_string(),
                u8::from(o.success).to_string(),
                mode.label().to_string(),
            ])?;
        }
    }

    let ccdf = write_ccdf(cfg, "ccdf.csv", "simulate", &typical, &[])?;
    Ok((vec![outcomes.finish()?, ccdf], typical))
}

fn write_ccdf(
    cfg: &SimConfig,
    name: &str,
    command: &str,
    typical: &TypicalCcdf,
    extra: &[(CurveKind, Vec<f64>)],
) -> Result<PathBuf> {
    let mut columns = vec!["t", "ccdf", "ci_low", "ci_high"];
    columns.extend(extra.iter().map(|(k, _)| k.label()));
    let mut f = CsvFile::create(&cfg.output_dir, name, command, cfg, &columns)?;
    let c = &typical.curve;
    for j in 0..c.len() {
        let mut row = vec![
            c.t[j].to_string(),
            num(c.ccdf[j]),
            num(c.ci_low[j]),
            num(c.ci_high[j]),
        ];
        row.extend(extra.iter().map(|(_, v)| num(v[j])));
        f.row(&row)?;
    }
    Ok(f.finish()?)
}

/// Results of [`compare`] beyond the files.
pub struct Comparison {
    pub sweep: PairedSweep,
    pub n_f: u32,
    pub n_r: u32,
    pub n_r_analytic: u32,
    pub rateless_ccdf: TypicalCcdf,
}

/// Paired rateless/fixed sweeps against the analytics (`sweep.csv`), the
/// rateless CCDF at `n_max` against the bounds (`ccdf_compare.csv`) and the
/// headline numbers (`summary.csv`).
pub fn compare(cfg: &SimConfig) -> Result<(Vec<PathBuf>, Comparison)> {
    cfg.validate()?;
    warn_if_large(cfg);
    let scenario = cfg.scenario()?;
    let grid = cfg.sorted_grid();
    let grid_f: Vec<f64> = grid.iter().map(|&n| f64::from(n)).collect();
    let sweep = run_paired_sweep(&scenario, cfg.k_bits, &grid)?;
    let base = cfg.coding_params()?;
    let analytic = |kind| delay_curve(&base, kind, &grid_f).map(|c| c.values);
    let ps_fixed = analytic(CurveKind::PsFixed)?;
    let ps_lb = analytic(CurveKind::PsRatelessLb)?;
    let rate_fixed = analytic(CurveKind::RateFixed)?;
    let rate_rateless = analytic(CurveKind::RateRateless)?;

    let mut f = CsvFile::create(
        &cfg.output_dir,
        "sweep.csv",
        "compare",
        cfg,
        &[
            "N",
            "ps_rateless",
            "ps_rateless_ci_low",
            "ps_rateless_ci_high",
            "ps_fixed",
            "ps_fixed_ci_low",
            "ps_fixed_ci_high",
            "mean_t_rateless",
            "rate_rateless",
            "rate_fixed",
            "ps_fixed_analytic",
            "ps_rateless_lb_analytic",
            "rate_fixed_analytic",
            "rate_rateless_analytic",
        ],
    )?;
    for j in 0..grid.len() {
        let (r, x) = (&sweep.rateless[j], &sweep.fixed[j]);
        f.row(&[
            grid[j].to_string(),
            num(r.ps),
            num(r.ps_ci.0),
            num(r.ps_ci.1),
            num(x.ps),
            num(x.ps_ci.0),
            num(x.ps_ci.1),
            num(r.mean_t),
            num(r.rate),
            num(x.rate),
            num(ps_fixed[j]),
            num(ps_lb[j]),
            num(rate_fixed[j]),
            num(rate_rateless[j]),
        ])?;
    }
    let sweep_path = f.finish()?;

    let params = cfg.coding_params()?;
    let mu = mean_interferer_time_mu(&params)?;
    let trials = simulate_mode(&scenario, &params, Mode::RatelessAck)?;
    let rateless_ccdf = typical_ccdf_from_trials(&trials, cfg.n_max)?;
    let t_grid = rateless_ccdf.curve.t_as_f64();
    let mut extra = Vec::new();
    for kind in [
        CurveKind::CcdfUbTheorem1,
        CurveKind::CcdfUbThinning,
        CurveKind::CcdfTni,
    ] {
        extra.push((kind, ccdf_curve(&params, kind, &t_grid, mu)?.values));
    }
    let ccdf_path = write_ccdf(cfg, "ccdf_compare.csv", "compare", &rateless_ccdf, &extra)?;

    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold(0, |best, (j, x)| if *x > v[best] { j } else { best })
    };
    let n_f = grid[argmax_rate(&sweep.fixed).expect("non-empty grid")];
    let n_r = grid[argmax_rate(&sweep.rateless).expect("non-empty grid")];
    let n_f_analytic = grid[argmax(&rate_fixed)];
    let n_r_analytic = grid[argmax(&rate_rateless)];
    let max_rate = |pts: &[ratelessnet::netsim::SweepPoint]| {
        pts.iter().map(|p| p.rate).fold(f64::NEG_INFINITY, f64::max)
    };
    let decoded: Vec<u32> = rateless_ccdf
        .samples
        .iter()
        .zip(&rateless_ccdf.successes)
        .filter(|(_, &s)| s)
        .map(|(&t, _)| t)
        .collect();
    let plain = fit_gamma(&decoded.iter().map(|&t| f64::from(t)).collect::<Vec<_>>());
    let truncated = fit_gamma_slotted(&decoded, Some(cfg.n_max));

    let mut s = CsvFile::create(
        &cfg.output_dir,
        "summary.csv",
        "compare",
        cfg,
        &["quantity", "value"],
    )?;
    let mut put = |k: &str, v: String| s.row(&[k.to_string(), v]);
    put("n_f_sim", n_f.to_string())?;
    put("n_r_sim", n_r.to_string())?;
    put("max_rate_fixed_sim", num(max_rate(&sweep.fixed)))?;
    put("max_rate_rateless_sim", num(max_rate(&sweep.rateless)))?;
    put("n_f_analytic", n_f_analytic.to_string())?;
    put("n_r_analytic", n_r_analytic.to_string())?;
    put(
        "max_rate_fixed_analytic",
        num(rate_fixed[argmax(&rate_fixed)]),
    )?;
    put(
        "max_rate_rateless_analytic",
        num(rate_rateless[argmax(&rate_rateless)]),
    )?;
    put("mu", num(mu))?;
    put("pooled_samples", rateless_ccdf.samples.len().to_string())?;
    put("decoded_samples", decoded.len().to_string())?;
    for (label, fit) in [("gamma_plain", &plain), ("gamma_truncated", &truncated)] {
        let (k, th, ks) = match fit {
            Ok(f) => (f.shape, f.scale, f.ks_distance),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        put(&format!("{label}_shape"), num(k))?;
        put(&format!("{label}_scale"), num(th))?;
        put(&format!("{label}_ks"), num(ks))?;
    }
    let summary_path = s.finish()?;

    Ok((
        vec![sweep_path, ccdf_path, summary_path],
        Comparison {
            sweep,
            n_f,
            n_r,
            n_r_analytic,
            rateless_ccdf,
        },
    ))
}

/// Per-user gains on realization 0 of the seed (`peruser.csv`) and the
/// realization itself (`realization.csv`).
pub fn peruser(cfg: &SimConfig) -> Result<(Vec<PathBuf>, PerUserReport)> {
    cfg.validate()?;
    warn_if_large(cfg);
    let scenario = cfg.scenario()?;
    let params = cfg.coding_params()?;
    let net = scenario.realization(0)?;
    let report = per_user_report(&net, &params, cfg.fading_trials, cfg.master_seed, 0)?;

    let mut f = CsvFile::create(
        &cfg.output_dir,
        "peruser.csv",
        "peruser",
        cfg,
        &[
            "pair_id",
            "D",
            "ps_rateless",
            "ps_fixed",
            "mean_T",
            "rate_rateless",
            "rate_fixed",
            "gain_GR",
            "censored_flag",
            "gain_GS",
            "gain_GR_sd",
        ],
    )?;
    for r in &report.records {
        f.row(&[
            r.pair_id.to_string(),
            num(r.distance),
            num(r.ps_rateless),
            num(r.ps_fixed),
            num(r.mean_t),
            num(r.rate_rateless),
            num(r.rate_fixed),
            num(r.gain_gr),
            u8::from(r.censored).to_string(),
            num(r.gain_gs),
            num(r.gain_gr_sd),
        ])?;
    }
    let peruser_path = f.finish()?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    let realization_path = cfg.output_dir.join("realization.csv");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&realization_path)?);
    {
        use std::io::Write;
        writeln!(out, "# ratelessnet peruser")?;
        for line in cfg.to_toml().lines() {
            writeln!(out, "# {line}")?;
        }
        net.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok((vec![peruser_path, realization_path], report))
}
