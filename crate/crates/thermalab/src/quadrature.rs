//! Adaptive Gauss–Kronrod quadrature.
//!
//! A 15-point Kronrod rule with embedded 7-point Gauss rule supplies a
//! per-interval error estimate; the interval with the largest estimate
//! is bisected until the requested relative tolerance is met.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

// Nodes and weights of the 15-point Kronrod rule (positive half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
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

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut flo = [0.0_f64; 7];
    let mut fhi = [0.0_f64; 7];
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        flo[j] = f(center - dx);
        fhi[j] = f(center + dx);
        let pair = flo[j] + fhi[j];
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    // Mean value of f over the interval per the Kronrod rule (sum of
    // Kronrod weights is 2).
    let mean = kronrod * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((flo[j] - mean).abs() + (fhi[j] - mean).abs());
    }
    resasc *= half.abs();
    let value = kronrod * half;
    let raw = ((kronrod - gauss) * half).abs();
    // QUADPACK error inflation: scale the raw Gauss/Kronrod gap against
    // the variation of f on the interval.
    let err = if resasc != 0.0 && raw != 0.0 {
        resasc * (200.0 * raw / resasc).powf(1.5).min(1.0)
    } else {
        raw
    };
    (value, err)
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Integrate `f` over `[a, b]` to the requested relative tolerance
/// (with a tiny absolute floor for integrals near zero).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadResult> {
    integrate_with_limit(f, a, b, rel_tol, 4096)
}

/// As [`integrate`], with an explicit subdivision cap.
pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(
            "quadrature bounds must be finite".into(),
        ));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    let (v, e) = qk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total_value = v;
    let mut total_error = e;
    let mut subdivisions = 0;
    let abs_floor = 1e-300;

    while total_error > rel_tol * total_value.abs() + abs_floor {
        if subdivisions >= max_subdivisions {
            return Err(Error::Quadrature(format!(
                "no convergence after {max_subdivisions} subdivisions \
                 (value {total_value:.6e}, error {total_error:.3e})"
            )));
        }
        let worst = heap.pop().expect("heap nonempty while error positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; accept as converged.
            heap.push(Interval {
                error: 0.0,
                ..worst
            });
            total_error = heap.iter().map(|i| i.error).sum();
            continue;
        }
        let (vl, el) = qk15(&f, worst.a, mid);
        let (vr, er) = qk15(&f, mid, worst.b);
        total_value += vl + vr - worst.value;
        total_error += el + er - worst.error;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            value: vl,
            error: el,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            value: vr,
            error: er,
        });
        subdivisions += 1;
    }

    // Re-sum values in a deterministic order to shed heap-update drift.
    let mut parts: Vec<(f64, f64, f64)> = heap.iter().map(|i| (i.a, i.value, i.error)).collect();
    parts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let value = crate::linalg::kahan_sum(parts.iter().map(|p| p.1));
    let abs_error = parts.iter().map(|p| p.2).sum();
    Ok(QuadResult {
        value,
        abs_error,
        subdivisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_integral() {
        // erf-style integral: int_{-6}^{6} exp(-x^2) dx = sqrt(pi) to ~1e-15.
        let r = integrate(|x| (-x * x).exp(), -6.0, 6.0, 1e-12).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_converges() {
        let r = integrate(|x| (40.0 * x).sin(), 0.0, 1.0, 1e-12).unwrap();
        let exact = (1.0 - (40.0_f64).cos()) / 40.0;
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn zero_width_interval() {
        let r = integrate(|x| x, 1.0, 1.0, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn divergent_hits_cap() {
        let r = integrate_with_limit(|x| 1.0 / x, 0.0, 1.0, 1e-10, 64);
        assert!(r.is_err());
    }
}
