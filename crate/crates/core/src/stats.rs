//! Small statistical toolbox shared by the simulation oracle and the
//! verification suite: moment estimators with standard errors and
//! Kolmogorov-Smirnov distances.

use statrs::distribution::{ContinuousCDF, Normal};

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance and the large-sample standard error of the
/// variance estimator, `sqrt((m4 - s^4 (n-3)/(n-1)) / n)`.
pub fn var_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let s2 = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|&x| (x - mean).powi(4)).sum::<f64>() / n;
    let se2 = (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
    (s2, se2.max(0.0).sqrt())
}

/// Pearson correlation and a Fisher-approximation standard error
/// `(1 - r^2)/sqrt(n - 3)` (scale indication only; the hypothesis checks
/// in this crate use absolute tolerance bands).
pub fn corr_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        // a degenerate (constant) sample has no measurable association
        return (0.0, 0.0);
    }
    let r = sxy / (sxx * syy).sqrt();
    let se = (1.0 - r * r) / (n - 3.0).max(1.0).sqrt();
    (r, se)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}

/// One-sample KS distance between `samples` and a centered normal law with
/// the given variance. Ties are grouped so that repeated values compare
/// against the jump of the empirical CDF, not each intermediate level;
/// degenerate variance compares against the unit step at zero.
pub fn ks_distance_normal(samples: &[f64], variance: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    if variance <= 0.0 {
        let below = xs.iter().filter(|&&x| x < 0.0).count() as f64 / n;
        let above = xs.iter().filter(|&&x| x > 0.0).count() as f64 / n;
        return below.max(above);
    }
    let sd = variance.sqrt();
    let mut d = 0.0f64;
    let mut i = 0usize;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = normal_cdf(xs[i] / sd);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Two-sample KS statistic, `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len(), xb.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut d = 0.0f64;
    while ia < na && ib < nb {
        let v = xa[ia].min(xb[ib]);
        while ia < na && xa[ia] <= v {
            ia += 1;
        }
        while ib < nb && xb[ib] <= v {
            ib += 1;
        }
        d = d.max((ia as f64 / na as f64 - ib as f64 / nb as f64).abs());
    }
    d
}

/// `n`-th central difference of `f` at 0 divided by `step^n`; nodes sit at
/// `(n/2 - k) step`, half-integer offsets for odd orders.
fn central_diff(f: &impl Fn(f64) -> f64, n: u32, step: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    for k in 0..=n {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * binom * f((n as f64 / 2.0 - k as f64) * step);
        binom *= (n - k) as f64 / (k + 1) as f64;
    }
    acc / step.powi(n as i32)
}

/// Central-difference estimate of `f^{(n)}(0)` for `f` evaluable on both
/// sides of zero. The error expands in even powers of the step, so each
/// candidate step gets a four-node dyadic Richardson table in `h^2`; the
/// step ladder spans several decades below `base` and the diagonal with
/// the smallest last-stage spread wins. Large steps lose to truncation,
/// tiny ones to roundoff; the spread spots both.
pub fn cd_derivative_at_zero(f: impl Fn(f64) -> f64, n: u32, base: f64) -> f64 {
    const NODES: usize = 4;
    const SHRINK: f64 = std::f64::consts::SQRT_2;
    let mut best = f64::NAN;
    let mut best_spread = f64::INFINITY;
    for k in 0..24 {
        let h = base * 2.0 / SHRINK.powi(k);
        let mut tab = [[0.0f64; NODES]; NODES];
        for i in 0..NODES {
            tab[i][0] = central_diff(&f, n, h * 0.5f64.powi(i as i32));
        }
        for j in 1..NODES {
            for i in j..NODES {
                let w = 4f64.powi(j as i32);
                tab[i][j] = (w * tab[i][j - 1] - tab[i - 1][j - 1]) / (w - 1.0);
            }
        }
        let spread = (tab[NODES - 1][NODES - 1] - tab[NODES - 2][NODES - 2]).abs();
        if spread < best_spread {
            best_spread = spread;
            best = tab[NODES - 1][NODES - 1];
        }
    }
    best
}

/// Two-sample KS after snapping both samples to a grid. Laws with atoms
/// (deterministic jump sizes make hitting times lattice-valued) produce
/// the same lattice point with different floating-point rounding in
/// different constructions, which a raw KS would read as a genuine CDF
/// gap of the full atom mass.
pub fn ks_two_sample_snapped(a: &[f64], b: &[f64], grid: f64) -> f64 {
    let snap =
        |xs: &[f64]| -> Vec<f64> { xs.iter().map(|x| (x / grid).round() * grid).collect() };
    ks_two_sample(&snap(a), &snap(b))
}

/// Survival function of the Kolmogorov distribution,
/// `Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0f64;
    for k in 1u32..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        sum += if k.is_multiple_of(2) { -term } else { term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for the two-sample KS statistic `d`, with the usual
/// finite-sample correction of the effective sample size.
pub fn ks_two_sample_pvalue(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sq = ne.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}
