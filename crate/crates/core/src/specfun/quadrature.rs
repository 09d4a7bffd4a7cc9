//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::NumericError;

/// Tolerances and subdivision budget for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self, NumericError> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NumericError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(NumericError::Domain(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(NumericError::Domain(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

// Kronrod abscissae on [0, 1); XGK[7] is the centre. Odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Segment {
    let centre = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let f_centre = f(centre);
    let mut samples = [(0.0, 0.0); 7];
    let mut kronrod = f_centre * WGK[7];
    let mut gauss = f_centre * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = (f(centre - dx), f(centre + dx));
        samples[j] = pair;
        kronrod += WGK[j] * (pair.0 + pair.1);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (pair.0 + pair.1);
        }
    }
    let mean = 0.5 * kronrod;
    let asc = WGK[7] * (f_centre - mean).abs()
        + samples
            .iter()
            .zip(WGK.iter())
            .map(|(&(l, r), &w)| w * ((l - mean).abs() + (r - mean).abs()))
            .sum::<f64>();
    let value = kronrod * half;
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    // QUADPACK rescaling of the embedded-rule difference.
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    error = error.max(50.0 * f64::EPSILON * value.abs());
    Segment {
        lower,
        upper,
        value,
        error,
    }
}

/// Integrates `f` over `[lower, upper]`.
pub fn integrate<F>(
    f: F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericError>
where
    F: Fn(f64) -> f64,
{
    integrate_with_breaks(f, &[lower, upper], spec)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from a partition at
/// the given (sorted) points. Kinks and jumps of the integrand belong there.
pub fn integrate_with_breaks<F>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64, NumericError>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if points.len() < 2 {
        return Err(NumericError::Domain(
            "integration needs at least two endpoints".into(),
        ));
    }
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] < w[0]) {
        return Err(NumericError::Domain(format!(
            "integration breakpoints must be finite and sorted: {points:?}"
        )));
    }

    let mut heap: BinaryHeap<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();
    if heap.is_empty() {
        return Ok(0.0);
    }

    let mut subdivisions = heap.len();
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() {
            return Err(NumericError::Convergence {
                lower: points[0],
                upper: points[points.len() - 1],
                estimate: value,
                error,
                subdivisions,
            });
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(value);
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.lower + worst.upper);
        if subdivisions >= spec.max_subdivisions || mid <= worst.lower || mid >= worst.upper {
            return Err(NumericError::Convergence {
                lower: points[0],
                upper: points[points.len() - 1],
                estimate: value,
                error,
                subdivisions,
            });
        }
        heap.push(gauss_kronrod(&f, worst.lower, mid));
        heap.push(gauss_kronrod(&f, mid, worst.upper));
        subdivisions += 1;
    }
}

/// Like [`integrate_with_breaks`] for integrands that can fail; the first
/// integrand error aborts the integration and is returned as-is.
pub fn try_integrate_with_breaks<F>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64, NumericError>
where
    F: Fn(f64) -> Result<f64, NumericError>,
{
    let failure = std::cell::RefCell::new(None);
    let result = integrate_with_breaks(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        points,
        spec,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => result,
    }
}
