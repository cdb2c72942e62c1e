//! Adaptive Gauss-Kronrod quadrature (15-point rule, worst-panel-first
//! bisection).
//!
//! Integrands here are continuous and piecewise smooth; callers pass the
//! points where smoothness is lost (holding-function knots, graded panels
//! near a power singularity of the derivative) as initial panel boundaries.

use crate::error::{Error, Result};

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Weights of the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Weights of the 15-point Kronrod rule.
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

/// Tolerances and refinement budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-10, rel_tol: 1e-8, max_panels: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

/// One GK15 evaluation on `[a, b]`, returning the Kronrod value and the
/// QUADPACK-style rescaled error estimate.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let raw = ((kronrod - gauss) * half).abs();
    let mut err = raw;
    if res_asc != 0.0 && raw != 0.0 {
        err = res_asc * (200.0 * raw / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Integrate `f` over consecutive panels given by `boundaries`
/// (non-decreasing; at least two entries), refining the worst panel until
/// the summed error estimate meets `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate_segmented<F: Fn(f64) -> f64>(
    f: F,
    boundaries: &[f64],
    cfg: QuadConfig,
) -> Result<f64> {
    debug_assert!(boundaries.len() >= 2);
    debug_assert!(boundaries.windows(2).all(|w| w[1] >= w[0]));
    let mut panels: Vec<Panel> = Vec::new();
    for w in boundaries.windows(2) {
        if w[1] > w[0] {
            let (value, err) = gk15(&f, w[0], w[1]);
            panels.push(Panel { a: w[0], b: w[1], value, err });
        }
    }
    if panels.is_empty() {
        return Ok(0.0);
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= cfg.max_panels {
            let worst = panels.iter().max_by(|x, y| x.err.total_cmp(&y.err)).unwrap();
            return Err(Error::QuadratureFailure {
                a: worst.a,
                b: worst.b,
                err: total_err,
                panels: panels.len(),
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.err.total_cmp(&y.err))
            .unwrap();
        let Panel { a, b, .. } = panels[idx];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval at floating-point resolution; accept its estimate
            let mut p = panels[idx];
            p.err = 0.0;
            panels[idx] = p;
            continue;
        }
        let (v1, e1) = gk15(&f, a, mid);
        let (v2, e2) = gk15(&f, mid, b);
        panels[idx] = Panel { a, b: mid, value: v1, err: e1 };
        panels.push(Panel { a: mid, b, value: v2, err: e2 });
    }
}

/// Integrate `f` over `[a, b]` with default panel layout.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<f64> {
    integrate_segmented(f, &[a, b], cfg)
}

/// Panel boundaries for `[0, x]` with interior `cuts` and, when `graded`
/// is set, a geometric stack of short panels near zero to absorb a
/// derivative singularity of the integrand there.
pub fn panel_boundaries(x: f64, cuts: &[f64], graded: bool) -> Vec<f64> {
    let mut bounds = vec![0.0];
    if graded && x > 0.0 {
        for e in [-12i32, -9, -6, -3] {
            let p = x * 10f64.powi(e);
            if p < x {
                bounds.push(p);
            }
        }
    }
    bounds.extend(cuts.iter().copied().filter(|&c| c > 0.0 && c < x));
    bounds.push(x);
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bounds.dedup();
    bounds
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|t| 3.0 * t * t, 0.0, 2.0, QuadConfig::default()).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate(|t| (-t).exp(), 0.0, 30.0, QuadConfig::default()).unwrap();
        assert_relative_eq!(v, 1.0 - (-30.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn kinked_integrand_with_split() {
        // |t - 1| over [0, 3]: exact 0.5 + 2
        let f = |t: f64| (t - 1.0).abs();
        let v = integrate_segmented(f, &[0.0, 1.0, 3.0], QuadConfig::default()).unwrap();
        assert_relative_eq!(v, 2.5, max_relative = 1e-13);
    }

    #[test]
    fn graded_panels_handle_sqrt() {
        let bounds = panel_boundaries(1.0, &[], true);
        let v = integrate_segmented(|t| t.sqrt(), &bounds, QuadConfig::default()).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        let cfg = QuadConfig { abs_tol: 1e-16, rel_tol: 1e-16, max_panels: 4 };
        let r = integrate(|t| (1e4 * t).sin().abs(), 0.0, 1.0, cfg);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
