//! Spectrally-positive Levy processes through their Laplace exponent.
//!
//! A process `X_t = d t + sigma B_t + compound Poisson(lambda, J)` with
//! non-negative jumps `J` has `E exp(-a X_t) = exp(phi(a) t)` where
//!
//! ```text
//! phi(a) = -d a + sigma2 a^2 / 2 + lambda (E exp(-a J) - 1)
//! ```
//!
//! The module enforces the positive-recurrence condition
//! `phi'(0) = -(d + lambda E J) > 0`, under which `phi` is convex and
//! strictly increasing on `[0, inf)` with `phi(0) = 0`, so its inverse is
//! defined on `[0, inf)` with `phi^{-1}(0) = 0`. The first-passage process
//! `T_x = inf{t : X_t < -x}` is then a subordinator with exponent
//! `-phi^{-1}` and `E T_x = x / phi'(0)`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `phi_inverse`.
pub const INVERSE_RTOL: f64 = 1e-10;
/// Iteration cap for bracketing and bisection in `phi_inverse`.
pub const INVERSE_MAX_ITER: usize = 200;
/// Default number of derivative orders tabulated at zero.
pub const DEFAULT_N_MAX: usize = 12;

/// Law of a single positive jump. All raw moments are finite and in closed
/// form for every catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDistribution {
    /// Exponential with rate `mu > 0`; `E J^n = n! / mu^n`.
    Exponential { rate: f64 },
    /// Point mass at `size > 0`.
    Deterministic { size: f64 },
    /// Gamma with shape `k > 0` and scale `theta > 0`.
    Gamma { shape: f64, scale: f64 },
    /// Uniform on `(0, b)` with `b > 0`.
    Uniform { b: f64 },
}

impl JumpDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpDistribution::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            JumpDistribution::Deterministic { size } => size > 0.0 && size.is_finite(),
            JumpDistribution::Gamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            JumpDistribution::Uniform { b } => b > 0.0 && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "jump distribution parameters must be strictly positive and finite: {self:?}"
            )))
        }
    }

    /// Raw moment `E J^n`, exact for every order.
    pub fn raw_moment(&self, n: u32) -> f64 {
        match *self {
            JumpDistribution::Exponential { rate } => {
                // n!/rate^n, accumulated multiplicatively to stay in range
                (1..=n).fold(1.0, |m, k| m * k as f64 / rate)
            }
            JumpDistribution::Deterministic { size } => size.powi(n as i32),
            JumpDistribution::Gamma { shape, scale } => {
                // theta^n * shape (shape+1) ... (shape+n-1)
                (0..n).fold(1.0, |m, k| m * scale * (shape + k as f64))
            }
            JumpDistribution::Uniform { b } => b.powi(n as i32) / (n as f64 + 1.0),
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    /// Laplace transform `E exp(-a J)` for `a >= 0`.
    pub fn laplace(&self, a: f64) -> f64 {
        match *self {
            JumpDistribution::Exponential { rate } => rate / (rate + a),
            JumpDistribution::Deterministic { size } => (-a * size).exp(),
            JumpDistribution::Gamma { shape, scale } => (1.0 + scale * a).powf(-shape),
            JumpDistribution::Uniform { b } => {
                let u = a * b;
                if u.abs() < 1e-4 {
                    // (1 - e^{-u})/u with the removable singularity expanded
                    1.0 - u / 2.0 + u * u / 6.0 - u * u * u / 24.0
                } else {
                    (1.0 - (-u).exp()) / u
                }
            }
        }
    }

    /// First transform derivative: `E[J exp(-a J)]` for `a >= 0`.
    pub fn laplace_weighted(&self, a: f64) -> f64 {
        match *self {
            JumpDistribution::Exponential { rate } => rate / ((rate + a) * (rate + a)),
            JumpDistribution::Deterministic { size } => size * (-a * size).exp(),
            JumpDistribution::Gamma { shape, scale } => {
                shape * scale * (1.0 + scale * a).powf(-shape - 1.0)
            }
            JumpDistribution::Uniform { b } => {
                let u = a * b;
                if u.abs() < 1e-4 {
                    b * (0.5 - u / 3.0 + u * u / 8.0 - u * u * u / 30.0)
                } else {
                    (1.0 - (-u).exp() * (1.0 + u)) / (a * a * b)
                }
            }
        }
    }

    /// Draw one jump.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpDistribution::Exponential { rate } => {
                Exp::new(rate).expect("validated rate").sample(rng)
            }
            JumpDistribution::Deterministic { size } => size,
            JumpDistribution::Gamma { shape, scale } => {
                Gamma::new(shape, scale).expect("validated shape/scale").sample(rng)
            }
            JumpDistribution::Uniform { b } => {
                Uniform::new(0.0, b).sample(rng)
            }
        }
    }
}

/// Parameters of the driving process `X_t = drift t + sigma B_t + jumps`.
///
/// Serialized form (field names are part of the file contract):
///
/// ```json
/// {"drift": -1.0, "sigma2": 0.0, "jump_rate": 1.0,
///  "jump_dist": {"kind": "exponential", "rate": 2.0}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    /// Deterministic component rate per unit time.
    pub drift: f64,
    /// Brownian variance coefficient `sigma^2 >= 0`.
    pub sigma2: f64,
    /// Arrival rate of compound-Poisson jumps, `lambda >= 0`.
    pub jump_rate: f64,
    /// Jump law; required whenever `jump_rate > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_dist: Option<JumpDistribution>,
}

impl ProcessSpec {
    pub fn new(drift: f64, sigma2: f64, jump_rate: f64, jump_dist: Option<JumpDistribution>) -> Self {
        ProcessSpec { drift, sigma2, jump_rate, jump_dist }
    }

    /// Mean drift `E X_1 = drift + lambda E J`. Must be negative.
    pub fn mean_drift(&self) -> f64 {
        let jump_mean = match (&self.jump_dist, self.jump_rate) {
            (Some(j), rate) if rate > 0.0 => rate * j.mean(),
            _ => 0.0,
        };
        self.drift + jump_mean
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() || !self.sigma2.is_finite() || !self.jump_rate.is_finite() {
            return Err(Error::InvalidParameter("non-finite process parameter".into()));
        }
        if self.sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!("sigma2 = {} < 0", self.sigma2)));
        }
        if self.jump_rate < 0.0 {
            return Err(Error::InvalidParameter(format!("jump_rate = {} < 0", self.jump_rate)));
        }
        if self.jump_rate > 0.0 && self.jump_dist.is_none() {
            return Err(Error::MissingJumpDist);
        }
        if let Some(j) = &self.jump_dist {
            j.validate()?;
        }
        let mean_drift = self.mean_drift();
        if mean_drift >= 0.0 {
            return Err(Error::MeanDriftViolation { mean_drift });
        }
        Ok(())
    }

    /// Jump law and effective rate, `None` when the spec has no jumps.
    pub fn jumps(&self) -> Option<(f64, &JumpDistribution)> {
        match (&self.jump_dist, self.jump_rate) {
            (Some(j), rate) if rate > 0.0 => Some((rate, j)),
            _ => None,
        }
    }
}

/// A validated spec together with the derivative table of `phi` at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceExponent {
    spec: ProcessSpec,
    /// `deriv0[n-1] = phi^{(n)}(0)` for `n = 1..=n_max`.
    deriv0: Vec<f64>,
}

/// Shorthand for `LaplaceExponent::build(spec, DEFAULT_N_MAX)`.
pub fn build_exponent(spec: ProcessSpec, n_max: usize) -> Result<LaplaceExponent> {
    LaplaceExponent::build(spec, n_max)
}

impl LaplaceExponent {
    /// Validate `spec` and tabulate `phi^{(n)}(0)` for `n = 1..=n_max`:
    /// `phi'(0) = -(d + lambda EJ)`, `phi''(0) = sigma2 + lambda EJ^2`,
    /// and `phi^{(n)}(0) = (-1)^n lambda E J^n` for `n >= 3`.
    pub fn build(spec: ProcessSpec, n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidParameter(format!("n_max = {n_max} < 2")));
        }
        spec.validate()?;
        let mut deriv0 = Vec::with_capacity(n_max);
        deriv0.push(-spec.mean_drift());
        let jumps = spec.jumps().map(|(r, j)| (r, j.clone()));
        let second = spec.sigma2
            + jumps.as_ref().map_or(0.0, |(r, j)| r * j.raw_moment(2));
        deriv0.push(second);
        for n in 3..=n_max {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let v = jumps
                .as_ref()
                .map_or(0.0, |(r, j)| sign * r * j.raw_moment(n as u32));
            deriv0.push(v);
        }
        Ok(LaplaceExponent { spec, deriv0 })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    /// `phi^{(n)}(0)` for `n = 1..=n_max`.
    pub fn deriv0(&self) -> &[f64] {
        &self.deriv0
    }

    pub fn n_max(&self) -> usize {
        self.deriv0.len()
    }

    /// `phi'(0) = -E X_1 > 0`.
    pub fn phi_prime0(&self) -> f64 {
        self.deriv0[0]
    }

    /// `phi''(0) = Var X_1 >= 0`.
    pub fn phi_second0(&self) -> f64 {
        self.deriv0[1]
    }

    /// `Var T_1 = phi''(0) / phi'(0)^3`.
    pub fn var_t1(&self) -> f64 {
        self.phi_second0() / self.phi_prime0().powi(3)
    }

    /// Evaluate `phi(a)` for `a >= 0`.
    pub fn phi(&self, a: f64) -> Result<f64> {
        if a < 0.0 || a.is_nan() {
            return Err(Error::DomainError(format!("phi requires a >= 0, got {a}")));
        }
        Ok(self.phi_any(a))
    }

    /// The closed form without the domain check. Every catalog transform
    /// extends analytically to a neighborhood of zero, which the
    /// derivative cross-checks use for central stencils.
    pub(crate) fn phi_any(&self, a: f64) -> f64 {
        let mut v = -self.spec.drift * a + 0.5 * self.spec.sigma2 * a * a;
        if let Some((rate, j)) = self.spec.jumps() {
            v += rate * (j.laplace(a) - 1.0);
        }
        v
    }

    pub(crate) fn phi_prime_any(&self, a: f64) -> f64 {
        let mut v = -self.spec.drift + self.spec.sigma2 * a;
        if let Some((rate, j)) = self.spec.jumps() {
            v -= rate * j.laplace_weighted(a);
        }
        v
    }

    /// Local inverse around zero without the domain check: `phi` is
    /// strictly increasing through the origin, so for small `|theta|` a
    /// plain Newton iteration from zero converges to the analytic
    /// continuation of `phi^{-1}`.
    pub(crate) fn phi_inverse_any(&self, theta: f64) -> f64 {
        let mut a = theta / self.phi_prime0();
        for _ in 0..60 {
            let f = self.phi_any(a) - theta;
            if f.abs() <= 4.0 * f64::EPSILON * theta.abs().max(f64::MIN_POSITIVE) {
                break;
            }
            a -= f / self.phi_prime_any(a);
        }
        a
    }

    /// Closed-form `phi'(a)` for `a >= 0`.
    pub fn phi_prime(&self, a: f64) -> Result<f64> {
        if a < 0.0 || a.is_nan() {
            return Err(Error::DomainError(format!("phi' requires a >= 0, got {a}")));
        }
        let mut v = -self.spec.drift + self.spec.sigma2 * a;
        if let Some((rate, j)) = self.spec.jumps() {
            v -= rate * j.laplace_weighted(a);
        }
        Ok(v)
    }

    /// `E T_x = x / phi'(0)` for `x >= 0`.
    pub fn hitting_time_mean(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::DomainError(format!("hitting level must be >= 0, got {x}")));
        }
        Ok(x / self.phi_prime0())
    }

    /// Solve `phi(a) = theta` on `[0, inf)` to `INVERSE_RTOL`.
    ///
    /// `phi` is convex and strictly increasing from `phi(0) = 0`, so a
    /// doubling bracket followed by bisection and a few Newton polish steps
    /// is globally safe.
    pub fn phi_inverse(&self, theta: f64) -> Result<f64> {
        if theta < 0.0 || theta.is_nan() {
            return Err(Error::DomainError(format!(
                "phi_inverse requires theta >= 0, got {theta}"
            )));
        }
        if theta == 0.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut it = 0usize;
        while self.phi(hi)? < theta {
            lo = hi;
            hi *= 2.0;
            it += 1;
            if it > INVERSE_MAX_ITER {
                return Err(Error::ConvergenceFailure {
                    context: "phi_inverse bracket".into(),
                    detail: format!("no upper bracket below {hi:e} for theta = {theta:e}"),
                });
            }
        }
        for _ in 0..INVERSE_MAX_ITER {
            if hi - lo <= 1e-10 * lo.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.phi(mid)? < theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut a = 0.5 * (lo + hi);
        for _ in 0..5 {
            let f = self.phi(a)? - theta;
            // drive the residual to rounding level, theta-relative, so
            // small roots come out accurate in a and downstream finite
            // differences of the inverse see a clean function
            if f.abs() <= 4.0 * f64::EPSILON * theta {
                break;
            }
            let d = self.phi_prime(a)?;
            let next = a - f / d;
            // Newton stays inside the bracket here; clamp as a guard.
            a = next.clamp(lo, hi);
        }
        let res = (self.phi(a)? - theta).abs();
        if res > INVERSE_RTOL * theta.max(1.0) {
            return Err(Error::ConvergenceFailure {
                context: "phi_inverse".into(),
                detail: format!("residual {res:e} at a = {a:e} for theta = {theta:e}"),
            });
        }
        Ok(a)
    }
}
