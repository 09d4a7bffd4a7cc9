//! Gauss hypergeometric series, used as an independent check on the
//! integral-form evaluations in [`super`].

use crate::error::NumericError;

const MAX_TERMS: usize = 10_000_000;
const REL_TOL: f64 = 1e-13;

/// `₂F₁(a, b; c; z)` by direct summation of the Gauss series.
///
/// Arguments `z < -0.5` are mapped through the Pfaff transformation
/// `₂F₁(a,b;c;z) = (1−z)^(−a) ₂F₁(a, c−b; c; z/(z−1))` so that the summed
/// argument always lies in `[-0.5, 1)`.
pub fn hyp2f1_series_oracle(a: f64, b: f64, c: f64, z: f64) -> Result<f64, NumericError> {
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(NumericError::Domain(format!(
            "c = {c} is a non-positive integer"
        )));
    }
    if !z.is_finite() || z >= 1.0 {
        return Err(NumericError::Domain(format!(
            "series oracle needs finite z < 1, got {z}"
        )));
    }
    if z < -0.5 {
        let w = z / (z - 1.0);
        let prefactor = (1.0 - z).powf(-a);
        return Ok(prefactor * gauss_series(a, c - b, c, w)?);
    }
    gauss_series(a, b, c, z)
}

fn gauss_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64, NumericError> {
    // Neumaier-compensated sum; tens of thousands of terms are needed near z = 1.
    let mut sum = 1.0_f64;
    let mut comp = 0.0_f64;
    let mut term = 1.0_f64;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        term *= ratio;
        if term == 0.0 {
            return Ok(sum + comp);
        }
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;

        // Past the turning point the term ratios approach z monotonically, so the
        // tail is bounded by a geometric series with the larger of the two ratios.
        let r = ratio.abs().max(z.abs());
        if ratio.abs() < 1.0 && r < 1.0 {
            let tail = term.abs() * r / (1.0 - r);
            if tail <= REL_TOL * (sum + comp).abs() {
                return Ok(sum + comp);
            }
        }
    }
    Err(NumericError::SeriesDivergence { terms: MAX_TERMS })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_argument_is_one() {
        assert_eq!(hyp2f1_series_oracle(1.0, -0.5, 0.5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn elementary_closed_forms() {
        // 2F1(1,1;2;z) = -ln(1-z)/z
        for z in [-0.9, -0.3, 0.2, 0.7] {
            let v = hyp2f1_series_oracle(1.0, 1.0, 2.0, z).unwrap();
            let exact = -(1.0 - z).ln() / z;
            assert!((v - exact).abs() < 1e-12 * exact.abs(), "z={z}");
        }
        // 2F1(1/2,1;3/2;-x^2) = arctan(x)/x
        for x in [0.1_f64, 1.0, 10.0, 30.0] {
            let v = hyp2f1_series_oracle(0.5, 1.0, 1.5, -x * x).unwrap();
            assert!((v - x.atan() / x).abs() < 1e-12 * v, "x={x}");
        }
    }

    #[test]
    fn alpha_four_reference_values() {
        let neg = hyp2f1_series_oracle(1.0, -0.5, 0.5, -1.0).unwrap();
        assert!((neg - (1.0 + std::f64::consts::FRAC_PI_4)).abs() < 1e-12);
        let pos = hyp2f1_series_oracle(1.0, 0.5, 1.5, -1.0).unwrap();
        assert!((pos - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(hyp2f1_series_oracle(1.0, 1.0, -2.0, 0.1).is_err());
        assert!(hyp2f1_series_oracle(1.0, 1.0, 2.0, 1.0).is_err());
        assert!(hyp2f1_series_oracle(1.0, 1.0, 2.0, f64::NEG_INFINITY).is_err());
    }
}
