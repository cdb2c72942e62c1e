//! The secondary-work ordering problem.
//!
//! Ordering `x` units of secondary work at every regeneration costs a setup
//! fee `K` plus holding costs, giving the long-run average cost
//! `(phi'(0) K + int_0^x h) / x`. With `g(x) = x h(x) - int_0^x h`
//! nondecreasing, the optimal order size is the generalized inverse
//! `x* = inf{x : g(x) >= phi'(0) K}`; when that set is empty the cost
//! decreases forever and no finite minimizer exists. Linear holding cost
//! recovers the classical economic order quantity
//! `x* = sqrt(2 phi'(0) K / c)`.

use crate::error::{Error, Result};
use crate::exponent::LaplaceExponent;
use crate::holding::HoldingFunction;

/// Search cap for the order-size bracket; reaching it declares the problem
/// unbounded (the cap is reported so the caller can tell).
pub const ORDER_SEARCH_CAP: f64 = 1e12;

/// Cost parameters of the ordering problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    /// Setup cost `K > 0` per cycle.
    pub setup_cost: f64,
    /// Holding-cost rate as a function of the secondary content; must be
    /// nondecreasing and right-continuous.
    pub holding: HoldingFunction,
    /// `phi'(0)` of the driving process (cycles per unit time and level).
    pub phi_prime0: f64,
    /// Optional per-unit reward for secondary output, used by the
    /// break-even penalty.
    pub reward: f64,
}

/// Outcome of the order-size optimization.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderDecision {
    Bounded { x_star: f64, cost: f64 },
    /// `g` stayed below `phi'(0) K` up to the bracket cap: the cost
    /// function is strictly decreasing and has no finite minimizer.
    Unbounded { cap: f64 },
}

impl CostModel {
    pub fn new(
        setup_cost: f64,
        holding: HoldingFunction,
        exp: &LaplaceExponent,
        reward: f64,
    ) -> Result<Self> {
        Self::with_phi_prime0(setup_cost, holding, exp.phi_prime0(), reward)
    }

    pub fn with_phi_prime0(
        setup_cost: f64,
        holding: HoldingFunction,
        phi_prime0: f64,
        reward: f64,
    ) -> Result<Self> {
        if !(setup_cost > 0.0 && setup_cost.is_finite()) {
            return Err(Error::InvalidParameter(format!("setup cost must be > 0, got {setup_cost}")));
        }
        if !(phi_prime0 > 0.0 && phi_prime0.is_finite()) {
            return Err(Error::InvalidParameter(format!("phi'(0) must be > 0, got {phi_prime0}")));
        }
        holding.validate()?;
        if !holding.is_nondecreasing() {
            return Err(Error::InvalidParameter(
                "holding cost must be nondecreasing for the ordering problem".into(),
            ));
        }
        Ok(CostModel { setup_cost, holding, phi_prime0, reward })
    }

    /// Effective setup cost `K' = phi'(0) K`.
    pub fn k_prime(&self) -> f64 {
        self.phi_prime0 * self.setup_cost
    }

    /// Long-run average total cost `(phi'(0) K + int_0^x h) / x`.
    pub fn average_cost(&self, x: f64) -> Result<f64> {
        if x <= 0.0 || x.is_nan() {
            return Err(Error::DomainError(format!("order size must be > 0, got {x}")));
        }
        Ok((self.k_prime() + self.holding.integral(x)) / x)
    }

    /// `g(x) = x h(x) - int_0^x h(s) ds`, nondecreasing with `g(0) = 0`.
    pub fn g_function(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        x * self.holding.eval(x) - self.holding.integral(x)
    }

    /// Optimal order size `x* = inf{x : g(x) >= K'}` by bracket doubling
    /// and bisection, or `Unbounded` when the bracket cap is reached.
    pub fn optimal_order(&self) -> Result<OrderDecision> {
        let target = self.k_prime();
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while self.g_function(hi) < target {
            lo = hi;
            hi *= 2.0;
            if hi > ORDER_SEARCH_CAP {
                return Ok(OrderDecision::Unbounded { cap: ORDER_SEARCH_CAP });
            }
        }
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.g_function(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x_star = hi; // right end: g(x*) >= K' holds there
        Ok(OrderDecision::Bounded { x_star, cost: self.average_cost(x_star)? })
    }

    /// Break-even penalty `p* = (K + (1/phi'(0)) int_0^{x*} h) / x* - r`:
    /// above it, ordering `x*` beats paying the reflection penalty.
    pub fn break_even_penalty(&self) -> Result<f64> {
        match self.optimal_order()? {
            OrderDecision::Unbounded { .. } => Err(Error::UnboundedUpstream),
            OrderDecision::Bounded { x_star, .. } => Ok(
                (self.setup_cost + self.holding.integral(x_star) / self.phi_prime0) / x_star
                    - self.reward,
            ),
        }
    }

    /// Certificate that the average cost is nonincreasing left of `x_star`
    /// and nondecreasing right of it, on a log grid spanning three decades
    /// each way.
    pub fn unimodality_certificate(&self, x_star: f64, n_grid: usize) -> Result<bool> {
        let lo = x_star * 1e-3;
        let hi = x_star * 1e3;
        let mut prev = self.average_cost(lo)?;
        let mut prev_x = lo;
        for k in 1..=n_grid {
            let x = lo * (hi / lo).powf(k as f64 / n_grid as f64);
            let cur = self.average_cost(x)?;
            let tol = 1e-9 * prev.abs().max(1.0);
            let ok = if x <= x_star {
                cur <= prev + tol
            } else if prev_x >= x_star {
                cur >= prev - tol
            } else {
                true // grid interval straddling the minimum may go either way
            };
            if !ok {
                return Ok(false);
            }
            prev = cur;
            prev_x = x;
        }
        Ok(true)
    }
}

/// Solution of the linear multi-class problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassSolution {
    /// Total order size `sqrt(2 phi'(0) K / min_i c_i)`.
    pub x: f64,
    /// One optimal split: uniform over the argmin classes, zero elsewhere.
    /// Any split among argmin classes is optimal, so this choice is not
    /// unique.
    pub proportions: Vec<f64>,
    /// Objective value `sqrt(2 phi'(0) K min_i c_i)`.
    pub objective: f64,
}

/// Linear per-class holding costs `h_i(t) = c_i t`: mass goes to the
/// cheapest class(es) and the total order solves the single-class EOQ at
/// `c = min_i c_i`.
pub fn multiclass_linear(
    class_costs: &[f64],
    setup_cost: f64,
    phi_prime0: f64,
) -> Result<MulticlassSolution> {
    if class_costs.is_empty() {
        return Err(Error::InvalidParameter("need at least one class".into()));
    }
    if class_costs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter("class costs must be strictly positive".into()));
    }
    if !(setup_cost > 0.0 && phi_prime0 > 0.0) {
        return Err(Error::InvalidParameter("setup cost and phi'(0) must be > 0".into()));
    }
    let c_min = class_costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let argmin: Vec<usize> = class_costs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == c_min)
        .map(|(i, _)| i)
        .collect();
    let share = 1.0 / argmin.len() as f64;
    let mut proportions = vec![0.0; class_costs.len()];
    for &i in &argmin {
        proportions[i] = share;
    }
    Ok(MulticlassSolution {
        x: (2.0 * phi_prime0 * setup_cost / c_min).sqrt(),
        proportions,
        objective: (2.0 * phi_prime0 * setup_cost * c_min).sqrt(),
    })
}

fn check_proportions(holdings: &[HoldingFunction], proportions: &[f64]) -> Result<()> {
    if holdings.is_empty() || holdings.len() != proportions.len() {
        return Err(Error::BadProportions(format!(
            "{} proportions for {} classes",
            proportions.len(),
            holdings.len()
        )));
    }
    if proportions.iter().any(|&p| p < 0.0) {
        return Err(Error::BadProportions("negative proportion".into()));
    }
    let sum: f64 = proportions.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::BadProportions(format!("proportions sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Long-run average cost of ordering `x` split as `proportions` over
/// separable per-class holding costs:
/// `phi'(0) K / x + sum_i (int_0^{p_i} h_i(x s) ds + F_{i-1} h_i(p_i x))`
/// with `F_j` the cumulative proportions. The integral is evaluated exactly
/// as `(1/x) int_0^{p_i x} h_i`.
pub fn multiclass_cost(
    holdings: &[HoldingFunction],
    proportions: &[f64],
    x: f64,
    setup_cost: f64,
    phi_prime0: f64,
) -> Result<f64> {
    check_proportions(holdings, proportions)?;
    if x <= 0.0 || x.is_nan() {
        return Err(Error::DomainError(format!("order size must be > 0, got {x}")));
    }
    for h in holdings {
        h.validate()?;
        if !h.is_nondecreasing() {
            return Err(Error::InvalidParameter("class holding costs must be nondecreasing".into()));
        }
    }
    let mut acc = phi_prime0 * setup_cost / x;
    let mut cum = 0.0;
    for (h, &p) in holdings.iter().zip(proportions) {
        acc += h.integral(p * x) / x + cum * h.eval(p * x);
        cum += p;
    }
    Ok(acc)
}

/// Optimal total order for fixed proportions: the aggregate holding
/// integral `H(x) = x (cost(x) - phi'(0) K / x)` must be convex for the
/// generalized-inverse characterization to apply, so convexity is checked
/// numerically on a log grid first and a failure is reported rather than
/// guessed around.
pub fn multiclass_fixed_proportions_order(
    holdings: &[HoldingFunction],
    proportions: &[f64],
    setup_cost: f64,
    phi_prime0: f64,
) -> Result<OrderDecision> {
    check_proportions(holdings, proportions)?;
    if !(setup_cost > 0.0 && phi_prime0 > 0.0) {
        return Err(Error::InvalidParameter("setup cost and phi'(0) must be > 0".into()));
    }
    let aggregate = |x: f64| -> Result<f64> {
        let mut acc = 0.0;
        let mut cum = 0.0;
        for (h, &p) in holdings.iter().zip(proportions) {
            acc += h.integral(p * x) / x + cum * h.eval(p * x);
            cum += p;
        }
        Ok(x * acc)
    };
    // convexity certificate on a log grid
    let grid: Vec<f64> = (0..=120).map(|k| 1e-6 * 10f64.powf(k as f64 / 10.0)).collect();
    for w in grid.windows(3) {
        let (x1, x2, x3) = (w[0], w[1], w[2]);
        let (h1, h2, h3) = (aggregate(x1)?, aggregate(x2)?, aggregate(x3)?);
        let chord = h1 + (h3 - h1) * (x2 - x1) / (x3 - x1);
        if h2 > chord + 1e-9 * chord.abs().max(1.0) {
            return Err(Error::ConvexityCheckFailed { at: x2 });
        }
    }
    let target = phi_prime0 * setup_cost;
    let g_h = |x: f64| -> Result<f64> {
        let step = 1e-6 * x;
        let d = (aggregate(x + step)? - aggregate(x - step)?) / (2.0 * step);
        Ok(x * d - aggregate(x)?)
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while g_h(hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > ORDER_SEARCH_CAP {
            return Ok(OrderDecision::Unbounded { cap: ORDER_SEARCH_CAP });
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-9 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g_h(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_star = hi;
    let cost = phi_prime0 * setup_cost / x_star + aggregate(x_star)? / x_star;
    Ok(OrderDecision::Bounded { x_star, cost })
}
