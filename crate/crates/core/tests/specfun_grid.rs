use ratelessnet::specfun::{hyp2f1_neg_delta, hyp2f1_pos_delta, hyp2f1_series_oracle, Delta};

const DELTAS: [f64; 4] = [0.4, 0.5, 2.0 / 3.0, 0.75];

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn integral_forms_match_series() {
    for d in DELTAS {
        let delta = Delta::new(d).unwrap();
        for x in log_grid(1e-3, 1e3, 25) {
            let neg = hyp2f1_neg_delta(delta, x).unwrap();
            let neg_ref = hyp2f1_series_oracle(1.0, -d, 1.0 - d, -x).unwrap();
            assert!(
                rel(neg, neg_ref) < 1e-9,
                "neg d={d} x={x}: {neg} vs {neg_ref}"
            );
            let pos = hyp2f1_pos_delta(delta, x).unwrap();
            let pos_ref = hyp2f1_series_oracle(1.0, d, 1.0 + d, -x).unwrap();
            assert!(
                rel(pos, pos_ref) < 1e-9,
                "pos d={d} x={x}: {pos} vs {pos_ref}"
            );
        }
    }
}

#[test]
fn contiguous_identity() {
    // 2F1([1,-d];1-d;-b) = d b/(1-d) 2F1([1,1-d];2-d;-b) + 1
    for d in DELTAS {
        let delta = Delta::new(d).unwrap();
        for b in log_grid(1e-3, 1e3, 25) {
            let lhs = hyp2f1_neg_delta(delta, b).unwrap();
            let rhs =
                d * b / (1.0 - d) * hyp2f1_series_oracle(1.0, 1.0 - d, 2.0 - d, -b).unwrap() + 1.0;
            assert!(rel(lhs, rhs) < 1e-9, "d={d} b={b}");
        }
    }
}

#[test]
fn alpha_four_closed_forms() {
    let delta = Delta::from_alpha(4.0).unwrap();
    for x in log_grid(1e-3, 1e3, 25) {
        let s = x.sqrt();
        assert!(rel(hyp2f1_neg_delta(delta, x).unwrap(), 1.0 + s * s.atan()) < 1e-9);
        assert!(rel(hyp2f1_pos_delta(delta, x).unwrap(), s.atan() / s) < 1e-9);
    }
}

#[test]
fn monotone_in_argument() {
    for d in DELTAS {
        let delta = Delta::new(d).unwrap();
        let xs = log_grid(1e-4, 1e4, 60);
        let neg: Vec<f64> = xs
            .iter()
            .map(|&x| hyp2f1_neg_delta(delta, x).unwrap())
            .collect();
        let pos: Vec<f64> = xs
            .iter()
            .map(|&x| hyp2f1_pos_delta(delta, x).unwrap())
            .collect();
        assert!(neg.windows(2).all(|w| w[1] > w[0]));
        assert!(pos.windows(2).all(|w| w[1] < w[0]));
        assert!(pos.iter().all(|&p| p > 0.0 && p < 1.0));
    }
}
