use proptest::prelude::*;
use ratelessnet::analytics::*;
use ratelessnet::geometry::Window;
use ratelessnet::metrics::{empirical_ccdf, wilson_interval};
use ratelessnet::netsim::*;
use ratelessnet::specfun::{hyp2f1_neg_delta, hyp2f1_pos_delta, Delta};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hypergeometric_ranges(d in 0.05f64..0.95, x in 1e-6f64..1e6) {
        let delta = Delta::new(d).unwrap();
        let neg = hyp2f1_neg_delta(delta, x).unwrap();
        let pos = hyp2f1_pos_delta(delta, x).unwrap();
        prop_assert!(neg > 1.0);
        prop_assert!(pos > 0.0 && pos < 1.0);
    }

    #[test]
    fn thinning_never_exceeds_all_active_bound(alpha in 2.2f64..6.0, n in 10u32..200, frac in 0.001f64..1.0) {
        let p = CodingParams::new(75.0, f64::from(n), alpha).unwrap();
        let mu = mean_interferer_time_mu(&p).unwrap();
        prop_assert!(mu > 0.0 && mu < p.n_max);
        let t = frac * p.n_max;
        prop_assert!(ccdf_ub_thinning(&p, t, mu).unwrap() <= ccdf_ub_theorem1(&p, t).unwrap() + 1e-12);
    }

    #[test]
    fn wilson_contains_estimate(n in 1usize..10_000, k in 0usize..10_000) {
        let k = k % (n + 1);
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn empirical_ccdf_is_valid(samples in proptest::collection::vec(1u32..=50, 100..400)) {
        let c = empirical_ccdf(&samples, 50).unwrap();
        prop_assert_eq!(c.ccdf[0], 1.0);
        prop_assert_eq!(c.ccdf[50], 0.0);
        prop_assert!(c.ccdf.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// On identical fading, fixed-rate success implies rateless success, the
    /// engine's invariants hold, and continuous interference never decodes
    /// sooner than the rateless network.
    #[test]
    fn paired_trials_respect_coupling(seed in any::<u64>(), alpha in 2.5f64..5.0, n in 5u32..150) {
        let scenario = Scenario {
            intensity: 1.0,
            window: Window::torus(7.0).unwrap(),
            alpha,
            realizations: 1,
            fading_trials: 2,
            master_seed: seed,
        };
        let params = CodingParams::new(75.0, f64::from(n), alpha).unwrap();
        let checks = TrialChecks { verify: true };
        let trials = scenario.for_each_trial(|net, fading| {
            Ok((
                run_trial_checked(net, fading, &params, Mode::RatelessAck, checks)?,
                run_trial(net, fading, &params, Mode::FixedRate)?,
                run_trial(net, fading, &params, Mode::Continuous)?,
            ))
        }).unwrap();
        for t in trials {
            let (r, f, c) = t.value;
            for i in 0..r.len() {
                prop_assert!(!f[i].success || r[i].success);
                prop_assert!(r[i].t_slots <= c[i].t_slots);
                prop_assert!(c[i].success <= r[i].success);
                prop_assert!(r[i].success || r[i].t_slots == n);
            }
        }
    }
}
