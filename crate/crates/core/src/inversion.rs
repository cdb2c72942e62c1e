//! Derivatives of `phi^{-1}` at zero by formal power-series reversion.
//!
//! With `a_n = phi^{(n)}(0)/n!` the Taylor coefficients of `phi` at zero,
//! the coefficients `b_n` of the inverse series satisfy
//! `sum_k b_k (a_1 z + a_2 z^2 + ...)^k = z` to every order. They are found
//! by Newton iteration on truncated polynomials,
//! `b <- b - (a o b - id) / (a' o b)`, doubling the valid order each step.
//! This is numerically gentler than expanding the Faa di Bruno sums
//! directly and produces the same coefficients.
//!
//! First orders: `b_1 = 1/a_1`, `b_2 = -a_2 / a_1^3`. In terms of
//! derivatives, `(phi^{-1})'(0) = 1/phi'(0)` and
//! `(phi^{-1})''(0) = -phi''(0)/phi'(0)^3`, the mean and negative variance
//! of the unit-level first-passage time.

use crate::error::{Error, Result};
use crate::exponent::LaplaceExponent;

/// Maximum supported reversion order.
pub const MAX_ORDER: usize = 20;

/// Truncated product of `p` and `q`, keeping powers `0..=n`.
fn mul_trunc(p: &[f64], q: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, &pi) in p.iter().enumerate().take(n + 1) {
        if pi == 0.0 {
            continue;
        }
        for (j, &qj) in q.iter().enumerate().take(n + 1 - i) {
            out[i + j] += pi * qj;
        }
    }
    out
}

/// Truncated composition `p(q(z))`; requires `q[0] == 0`.
fn compose_trunc(p: &[f64], q: &[f64], n: usize) -> Vec<f64> {
    debug_assert!(q.first().copied().unwrap_or(0.0) == 0.0);
    // Horner from the top coefficient down.
    let mut out = vec![0.0; n + 1];
    for &pk in p.iter().take(n + 1).rev() {
        out = mul_trunc(&out, q, n);
        out[0] += pk;
    }
    out
}

/// Truncated reciprocal `1/d`; requires `d[0] != 0`.
fn recip_trunc(d: &[f64], n: usize) -> Vec<f64> {
    let d0 = d[0];
    let mut out = vec![0.0; n + 1];
    out[0] = 1.0 / d0;
    for k in 1..=n {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += d.get(j).copied().unwrap_or(0.0) * out[k - j];
        }
        out[k] = -acc / d0;
    }
    out
}

fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Revert the series with coefficients `a = [a_1, a_2, ...]` (no constant
/// term), returning `[b_1, ..., b_n]` such that the composition of the two
/// series is the identity to order `n`.
pub fn revert_series(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::InvalidParameter("reversion order must be >= 1".into()));
    }
    if n > a.len() {
        return Err(Error::InvalidParameter(format!(
            "reversion order {n} exceeds {} supplied coefficients",
            a.len()
        )));
    }
    if n > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "reversion order {n} exceeds cap {MAX_ORDER}"
        )));
    }
    let a1 = a[0];
    if a1 <= 0.0 || !a1.is_finite() {
        return Err(Error::NonInvertible { a1 });
    }

    // f(z) = a_1 z + ... + a_n z^n, constant slot prepended
    let mut f = vec![0.0; n + 1];
    f[1..].copy_from_slice(&a[..n]);
    let fp = derivative(&f);

    let mut b = vec![0.0, 1.0 / a1];
    let mut order = 1usize;
    while order < n {
        order = (2 * order).min(n);
        b.resize(order + 1, 0.0);
        // e = f(b) - id
        let mut e = compose_trunc(&f, &b, order);
        e[1] -= 1.0;
        let fpb = compose_trunc(&fp, &b, order);
        let corr = mul_trunc(&e, &recip_trunc(&fpb, order), order);
        for k in 0..=order {
            b[k] -= corr[k];
        }
    }
    Ok(b[1..].to_vec())
}

/// Derivatives `(phi^{-1})^{(k)}(0)` for `k = 1..=n`, computed from the
/// exponent's derivative table at zero.
pub fn inverse_derivs_at_zero(exp: &LaplaceExponent, n: usize) -> Result<Vec<f64>> {
    if n > exp.n_max() {
        return Err(Error::InvalidParameter(format!(
            "order {n} exceeds exponent table n_max = {}",
            exp.n_max()
        )));
    }
    let a = taylor_coeffs(exp.deriv0(), n);
    let b = revert_series(&a, n)?;
    let mut fact = 1.0;
    Ok(b.iter()
        .enumerate()
        .map(|(i, &bk)| {
            fact *= (i + 1) as f64;
            fact * bk
        })
        .collect())
}

/// Scaled Taylor coefficients `a_k = phi^{(k)}(0)/k!` from raw derivatives.
fn taylor_coeffs(derivs: &[f64], n: usize) -> Vec<f64> {
    let mut fact = 1.0;
    derivs
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, &d)| {
            fact *= (i + 1) as f64;
            d / fact
        })
        .collect()
}

/// Matched pair of truncated Taylor coefficients for `phi` and `phi^{-1}`.
#[derive(Debug, Clone)]
pub struct SeriesCoeffs {
    /// `a_k = phi^{(k)}(0)/k!`, `k = 1..=n`.
    pub a: Vec<f64>,
    /// Coefficients of the reverted series, same indexing.
    pub b: Vec<f64>,
}

impl SeriesCoeffs {
    pub fn from_taylor(a: Vec<f64>, n: usize) -> Result<Self> {
        let b = revert_series(&a, n)?;
        Ok(SeriesCoeffs { a: a[..n].to_vec(), b })
    }

    pub fn from_exponent(exp: &LaplaceExponent, n: usize) -> Result<Self> {
        if n > exp.n_max() {
            return Err(Error::InvalidParameter(format!(
                "order {n} exceeds exponent table n_max = {}",
                exp.n_max()
            )));
        }
        Self::from_taylor(taylor_coeffs(exp.deriv0(), n), n)
    }

    /// Largest deviation of the composed series `b(a(z))` from the identity,
    /// i.e. `max_k |[z^k] b(a(z)) - delta_{k,1}|`.
    pub fn composition_residual(&self) -> f64 {
        let n = self.a.len();
        let mut fa = vec![0.0; n + 1];
        fa[1..].copy_from_slice(&self.a);
        let mut fb = vec![0.0; n + 1];
        fb[1..].copy_from_slice(&self.b);
        let mut comp = compose_trunc(&fb, &fa, n);
        comp[1] -= 1.0;
        comp.iter().fold(0.0f64, |m, &c| m.max(c.abs()))
    }
}
