//! Law of the area `A_x = int_0^{T_x} h(W^x_t - W_t) dt`.
//!
//! The key identity is that `A_x` equals the shot-noise functional
//! `int_(0,x] h(x-y) T_dy` of the first-passage subordinator `T`, so its
//! Laplace-Stieltjes transform is
//!
//! ```text
//! E exp(-a A_x) = exp(-int_0^x phi^{-1}(a h(y)) dy)
//! ```
//!
//! and every moment formula follows by differentiating at `a = 0`. Means,
//! covariances and correlations are exposed in closed form; transforms use
//! adaptive quadrature over `phi^{-1}` composed with the holding function.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::exponent::LaplaceExponent;
use crate::holding::HoldingFunction;
use crate::inversion::inverse_derivs_at_zero;
use crate::quad::{integrate_segmented, panel_boundaries, QuadConfig};

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v < 0.0 || v.is_nan() {
        return Err(Error::DomainError(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// `int_0^x phi^{-1}(theta(y)) dy` with knot-aware panels; inner inversion
/// failures surface after the quadrature call.
fn integrate_inverse<F: Fn(f64) -> f64>(
    exp: &LaplaceExponent,
    theta_of: F,
    x: f64,
    cuts: &[f64],
    graded: bool,
) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |y: f64| match exp.phi_inverse(theta_of(y)) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let bounds = panel_boundaries(x, cuts, graded);
    let value = integrate_segmented(integrand, &bounds, QuadConfig::default());
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    value
}

/// LST `E exp(-a A_x)`; equals 1 at `a = 0` or `x = 0`.
pub fn lst_area(exp: &LaplaceExponent, h: &HoldingFunction, x: f64, a: f64) -> Result<f64> {
    joint_lst(exp, h, &HoldingFunction::one(), x, a, 0.0)
}

/// Joint LST `E exp(-a A_x - b B_x)` where `B_x` uses the second holding
/// function `g`. With `g = 1` this is the joint law of `A_x` and `T_x`.
pub fn joint_lst(
    exp: &LaplaceExponent,
    h: &HoldingFunction,
    g: &HoldingFunction,
    x: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    check_nonneg("x", x)?;
    check_nonneg("alpha", a)?;
    check_nonneg("beta", b)?;
    if x == 0.0 || (a == 0.0 && b == 0.0) {
        return Ok(1.0);
    }
    let mut cuts = h.breakpoints(x);
    cuts.extend(g.breakpoints(x));
    let graded = (a > 0.0 && h.grades_at_origin()) || (b > 0.0 && g.grades_at_origin());
    let integral = integrate_inverse(
        exp,
        |y| a * h.eval(y) + b * g.eval(y),
        x,
        &cuts,
        graded,
    )?;
    Ok((-integral).exp())
}

/// `E A_x = (1/phi'(0)) int_0^x h(y) dy`.
pub fn mean_area(exp: &LaplaceExponent, h: &HoldingFunction, x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    Ok(h.integral(x) / exp.phi_prime0())
}

/// `Cov(A_x, B_x) = phi''(0)/phi'(0)^3 int_0^x h(y) g(y) dy`.
pub fn cov_area(
    exp: &LaplaceExponent,
    h: &HoldingFunction,
    g: &HoldingFunction,
    x: f64,
) -> Result<f64> {
    check_nonneg("x", x)?;
    Ok(exp.var_t1() * h.integral_prod(g, x))
}

/// `Var A_x = phi''(0)/phi'(0)^3 int_0^x h^2(y) dy`.
pub fn var_area(exp: &LaplaceExponent, h: &HoldingFunction, x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    Ok(exp.var_t1() * h.integral_pow(x, 2))
}

/// `Cov(A_x, T_x)`, the `g = 1` case of [`cov_area`].
pub fn cov_area_hitting(exp: &LaplaceExponent, h: &HoldingFunction, x: f64) -> Result<f64> {
    cov_area(exp, h, &HoldingFunction::one(), x)
}

/// Correlation of `A_x` and `B_x`. Takes no process argument: the driving
/// process cancels, leaving `int hg / sqrt(int h^2 int g^2)` on `[0, x]`.
pub fn corr_area(h: &HoldingFunction, g: &HoldingFunction, x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    let hh = h.integral_pow(x, 2);
    let gg = g.integral_pow(x, 2);
    if hh <= 0.0 || gg <= 0.0 {
        return Err(Error::DegenerateFunction { x });
    }
    Ok(h.integral_prod(g, x) / (hh * gg).sqrt())
}

/// Moment table of `A_x`: coefficients
/// `c_k = (-1)^{k-1} (phi^{-1})^{(k)}(0) int_0^x h^k(y) dy` and raw moments
/// from the recursion `mu_{n+1} = sum_k C(n,k) c_{k+1} mu_{n-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub x: f64,
    /// `c[k-1] = c_k`, `k = 1..=n`; all non-negative.
    pub c: Vec<f64>,
    /// `mu[n] = E A_x^n`, `n = 0..=n`; `mu[0] = 1`.
    pub mu: Vec<f64>,
}

impl MomentTable {
    pub fn mean(&self) -> f64 {
        self.mu[1]
    }

    pub fn variance(&self) -> f64 {
        self.mu[2] - self.mu[1] * self.mu[1]
    }
}

/// Build the moment table to order `n`.
pub fn moments_area(
    exp: &LaplaceExponent,
    h: &HoldingFunction,
    x: f64,
    n: usize,
) -> Result<MomentTable> {
    check_nonneg("x", x)?;
    let derivs = inverse_derivs_at_zero(exp, n.max(1))?;
    let c: Vec<f64> = derivs
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let k = i + 1;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * d * h.integral_pow(x, k as u32)
        })
        .collect();
    let mu = moment_recursion(&c, n);
    Ok(MomentTable { x, c: c[..n.min(c.len())].to_vec(), mu })
}

/// `mu_{n+1} = sum_{k=0}^{n} C(n,k) c_{k+1} mu_{n-k}` with `mu_0 = 1`.
fn moment_recursion(c: &[f64], n: usize) -> Vec<f64> {
    let mut mu = vec![1.0];
    for m in 0..n {
        // computing mu_{m+1}
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=m {
            acc += binom * c[k] * mu[m - k];
            binom *= (m - k) as f64 / (k + 1) as f64;
        }
        mu.push(acc);
    }
    mu
}

/// The exponential-order-size recursion for `h(t) = t`: with
/// `c~_k = (-1)^{k-1} (phi^{-1})^{(k)}(0)` and order size `xi ~ exp(rate)`,
/// returns `mu~_1..=mu~_n` from
/// `mu~_{n+1} = n! sum_k (k+1) c~_{k+1} / rate^{k+2} * mu~_{n-k}/(n-k)!`.
/// The first entry is `E A_xi = (1/phi'(0)) E[xi^2]/2`.
pub fn moments_random_order(exp: &LaplaceExponent, rate: f64, n: usize) -> Result<Vec<f64>> {
    if rate <= 0.0 || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("order-size rate must be > 0, got {rate}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let derivs = inverse_derivs_at_zero(exp, n)?;
    let ct: Vec<f64> = derivs
        .iter()
        .enumerate()
        .map(|(i, &d)| if i % 2 == 0 { d } else { -d })
        .collect();
    let mut mu = vec![1.0];
    let mut fact = vec![1.0f64; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as f64;
    }
    for m in 0..n {
        let mut acc = 0.0;
        for k in 0..=m {
            acc += (k + 1) as f64 * ct[k] / rate.powi(k as i32 + 2) * mu[m - k] / fact[m - k];
        }
        mu.push(fact[m] * acc);
    }
    Ok(mu[1..].to_vec())
}

/// LST of the two-level area `A_{x,y} = h(y-x) T_x + A_{y-x}` (independent
/// summands), for `0 <= x <= y`.
pub fn lst_two_level(
    exp: &LaplaceExponent,
    h: &HoldingFunction,
    x: f64,
    y: f64,
    a: f64,
) -> Result<f64> {
    check_nonneg("x", x)?;
    check_nonneg("alpha", a)?;
    if x > y {
        return Err(Error::OrderViolation { x, y });
    }
    let first = (-exp.phi_inverse(a * h.eval(y - x))? * x).exp();
    Ok(first * lst_area(exp, h, y - x, a)?)
}

/// `E A_{x,y} = h(y-x) x / phi'(0) + E A_{y-x}`.
pub fn mean_two_level(exp: &LaplaceExponent, h: &HoldingFunction, x: f64, y: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    if x > y {
        return Err(Error::OrderViolation { x, y });
    }
    Ok(h.eval(y - x) * x / exp.phi_prime0() + mean_area(exp, h, y - x)?)
}

/// `Var A_{x,y} = phi''(0)/phi'(0)^3 (h^2(y-x) x + int_0^{y-x} h^2)`.
pub fn var_two_level(exp: &LaplaceExponent, h: &HoldingFunction, x: f64, y: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    if x > y {
        return Err(Error::OrderViolation { x, y });
    }
    let hv = h.eval(y - x);
    Ok(exp.var_t1() * (hv * hv * x + h.integral_pow(y - x, 2)))
}

/// Joint LST of `(A_{s_1}, ..., A_{s_n})` (and optionally `(T_{s_i})`):
/// a product over increments `x_j = s_j - s_{j-1}` of
/// `exp(-int_0^{x_j} phi^{-1}(sum_{i>=j} a_i h(s_i - s_j + t) + sum_{i>=j} b_i) dt)`.
pub fn joint_lst_fidi(
    exp: &LaplaceExponent,
    h: &HoldingFunction,
    levels: &[f64],
    alphas: &[f64],
    betas: Option<&[f64]>,
) -> Result<f64> {
    if levels.is_empty() || levels[0] <= 0.0 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::LevelsNotIncreasing);
    }
    if alphas.len() != levels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} levels",
            alphas.len(),
            levels.len()
        )));
    }
    if let Some(b) = betas {
        if b.len() != levels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} hitting-time weights for {} levels",
                b.len(),
                levels.len()
            )));
        }
    }
    for &a in alphas.iter().chain(betas.unwrap_or(&[])) {
        check_nonneg("weight", a)?;
    }
    let n = levels.len();
    let mut log_total = 0.0;
    for j in 0..n {
        let prev = if j == 0 { 0.0 } else { levels[j - 1] };
        let xj = levels[j] - prev;
        let beta_tail: f64 = betas.map_or(0.0, |b| b[j..].iter().sum());
        let shifts: Vec<f64> = (j..n).map(|i| levels[i] - levels[j]).collect();
        // integrand kinks wherever a shifted copy of h crosses one of its knots
        let mut cuts = Vec::new();
        for &s in &shifts {
            for k in h.breakpoints(s + xj) {
                let t = k - s;
                if t > 0.0 && t < xj {
                    cuts.push(t);
                }
            }
        }
        let graded = h.grades_at_origin() && shifts.first().copied() == Some(0.0);
        let integral = integrate_inverse(
            exp,
            |t| {
                let mut theta = beta_tail;
                for (idx, &s) in shifts.iter().enumerate() {
                    theta += alphas[j + idx] * h.eval(s + t);
                }
                theta
            },
            xj,
            &cuts,
            graded,
        )?;
        log_total += integral;
    }
    Ok((-log_total).exp())
}

/// Long-run average of `h(W^x_t - W_t)`: `(1/x) int_0^x h`, independent of
/// the driving process.
pub fn longrun_average(h: &HoldingFunction, x: f64) -> Result<f64> {
    if x <= 0.0 || x.is_nan() {
        return Err(Error::DomainError(format!("long-run average needs x > 0, got {x}")));
    }
    Ok(h.integral(x) / x)
}

/// Parameters of the Gaussian limit of the centered, `h(n) sqrt(n)`-scaled
/// area process: the limit is `int_0^x (x-s)^alpha dB_s` with `B` a
/// driftless Brownian motion of variance `Var T_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLimit {
    /// Regular-variation index of the holding function.
    pub alpha: f64,
    /// `Var T_1 = phi''(0)/phi'(0)^3`.
    pub var_t1: f64,
}

impl GaussianLimit {
    pub fn new(alpha: f64, var_t1: f64) -> Result<Self> {
        check_nonneg("alpha", alpha)?;
        check_nonneg("var_t1", var_t1)?;
        Ok(GaussianLimit { alpha, var_t1 })
    }

    pub fn from_exponent(exp: &LaplaceExponent, h: &HoldingFunction) -> Result<Self> {
        Self::new(h.rv_index(), exp.var_t1())
    }

    /// `Var A*_x = Var T_1 * x^{2 alpha + 1} / (2 alpha + 1)`.
    pub fn limit_var(&self, x: f64) -> Result<f64> {
        check_nonneg("x", x)?;
        Ok(self.var_t1 * x.powf(2.0 * self.alpha + 1.0) / (2.0 * self.alpha + 1.0))
    }

    /// `Cov(A*_x, A*_{x+y}) = Var T_1 int_0^x [s (y+s)]^alpha ds`.
    /// Closed form for integer `alpha`, adaptive quadrature otherwise.
    pub fn limit_cov(&self, x: f64, y: f64) -> Result<f64> {
        check_nonneg("x", x)?;
        check_nonneg("y", y)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let a = self.alpha;
        let integral = if (a - a.round()).abs() < 1e-12 && a.round() >= 0.0 {
            let n = a.round() as u32;
            // [s(y+s)]^n = sum_k C(n,k) y^{n-k} s^{n+k}
            let mut acc = 0.0;
            let mut binom = 1.0;
            for k in 0..=n {
                let p = (n + k + 1) as f64;
                acc += binom * y.powi((n - k) as i32) * x.powf(p) / p;
                binom *= (n - k) as f64 / (k + 1) as f64;
            }
            acc
        } else {
            let bounds = panel_boundaries(x, &[], a < 1.0);
            integrate_segmented(|s| (s * (y + s)).powf(a), &bounds, QuadConfig::default())?
        };
        Ok(self.var_t1 * integral)
    }
}
